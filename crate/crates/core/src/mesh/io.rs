//! Mesh files: a JSON document with `vertices` (list of `[x, y]`), `cells`
//! (lists of 0-based vertex indices, counter-clockwise) and an optional
//! `bbox` (`[x0, y0, x1, y1]`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BoundingBox, Mesh, Point};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bbox: Option<[f64; 4]>,
}

pub fn mesh_to_json(mesh: &Mesh) -> String {
    let b = mesh.bbox();
    let file = MeshFile {
        vertices: mesh.vertices().iter().map(|p| [p.x, p.y]).collect(),
        cells: mesh.cells().to_vec(),
        bbox: Some([b.min.x, b.min.y, b.max.x, b.max.y]),
    };
    // serde_json writes the shortest representation that round-trips exactly.
    serde_json::to_string_pretty(&file).expect("mesh serialization cannot fail")
}

pub fn mesh_from_json(text: &str, origin: &str) -> Result<Mesh> {
    let file: MeshFile = serde_json::from_str(text).map_err(|e| Error::MeshParse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let vertices = file.vertices.iter().map(|v| Point::new(v[0], v[1])).collect();
    let bbox = file.bbox.map(|b| BoundingBox::new(b[0], b[1], b[2], b[3]));
    Mesh::new(vertices, file.cells, bbox)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, mesh_to_json(mesh)).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    mesh_from_json(&text, &path.display().to_string())
}
