//! Wavefront OBJ ingest and export.
//!
//! Only the two record types a shape model needs are interpreted: `v x y z`
//! vertices and `f i j k` triangular faces (1-based indices, with optional
//! `/texture/normal` suffixes that are stripped). Comments are skipped and
//! every other record type is counted as ignored so the caller can warn.

use std::io::Write;

use nalgebra::Vector3;

use super::{MeshError, ShapeModel};

pub(super) struct ParsedObj {
    pub vertices: Vec<Vector3<f64>>,
    pub facets: Vec<[usize; 3]>,
    pub ignored: usize,
}

pub(super) fn parse(text: &str) -> Result<ParsedObj, MeshError> {
    let mut vertices = Vec::new();
    let mut facets = Vec::new();
    let mut ignored = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let record = fields.next().expect("non-empty line has a first field");
        match record {
            "v" => {
                let mut coords = [0.0f64; 3];
                for (axis, slot) in coords.iter_mut().enumerate() {
                    let field = fields.next().ok_or_else(|| MeshError::MalformedRecord {
                        line,
                        message: format!("vertex has {} coordinate(s), expected 3", axis),
                    })?;
                    *slot = field.parse().map_err(|_| MeshError::MalformedRecord {
                        line,
                        message: format!("cannot parse coordinate {:?}", field),
                    })?;
                }
                // A fourth (weight) coordinate is legal OBJ; ignore it.
                vertices.push(Vector3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let entries: Vec<&str> = fields.collect();
                if entries.len() != 3 {
                    if entries.len() > 3 {
                        return Err(MeshError::NonTriangularFace { line, count: entries.len() });
                    }
                    return Err(MeshError::MalformedRecord {
                        line,
                        message: format!("face has {} vertex reference(s), expected 3", entries.len()),
                    });
                }
                let mut indices = [0usize; 3];
                for (slot, entry) in indices.iter_mut().zip(&entries) {
                    // `i`, `i/t`, `i//n`, `i/t/n` all resolve to the part
                    // before the first slash.
                    let index_part = entry.split('/').next().unwrap_or("");
                    let parsed: i64 =
                        index_part.parse().map_err(|_| MeshError::MalformedRecord {
                            line,
                            message: format!("cannot parse vertex reference {:?}", entry),
                        })?;
                    if parsed < 1 {
                        return Err(MeshError::MalformedRecord {
                            line,
                            message: format!(
                                "vertex reference {} is not a positive 1-based index",
                                parsed
                            ),
                        });
                    }
                    *slot = (parsed - 1) as usize;
                }
                facets.push(indices);
            }
            _ => ignored += 1,
        }
    }

    Ok(ParsedObj { vertices, facets, ignored })
}

/// Serialise a model as OBJ. Coordinates are written with round-trip
/// precision, so `write_obj` → parse reproduces the mesh bit for bit.
pub fn write_obj(model: &ShapeModel, out: &mut impl Write) -> std::io::Result<()> {
    for v in model.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
    }
    for f in model.facets() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}
