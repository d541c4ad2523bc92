//! Minimal Wavefront OBJ reader: `v` and triangular `f` records only.

use std::path::Path;

use super::{Point, TriMesh};
use crate::error::{Error, Result};

/// Load a triangle mesh, optionally rescaled so its bounding-box height
/// (y extent) equals `scale_height`.
pub fn load_obj(path: &Path, scale_height: Option<f64>) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mesh = parse_obj(&text, path)?;
    match scale_height {
        Some(h) => mesh.scaled_to_height(h),
        None => Ok(mesh),
    }
}

pub(crate) fn parse_obj(text: &str, path: &Path) -> Result<TriMesh> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in c.iter_mut() {
                    let s = tok
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates".into()))?;
                    *v = s
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate {s:?}")))?;
                }
                vertices.push(Point(c));
            }
            Some("f") => {
                let idx: Vec<&str> = tok.collect();
                if idx.len() != 3 {
                    return Err(parse_err(lineno, format!("face has {} vertices, expected 3", idx.len())));
                }
                let mut tri = [0usize; 3];
                for (slot, s) in tri.iter_mut().zip(idx) {
                    let first = s.split('/').next().unwrap_or("");
                    let i: usize = first
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index {s:?}")))?;
                    if i == 0 {
                        return Err(parse_err(lineno, "face indices are 1-based".into()));
                    }
                    *slot = i - 1;
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TETRA: &str = "# tetrahedron\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\nf 1 3 2\nf 1 2 4\nf 1/1 4/4 3/3\nf 2 3 4\n";

    #[test]
    fn parses_vertices_and_faces() {
        let m = parse_obj(TETRA, Path::new("t.obj")).unwrap();
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.triangles().len(), 4);
        assert_eq!(m.triangles()[2], [0, 3, 2]);
    }

    #[test]
    fn rescales_height() {
        let m = parse_obj(TETRA, Path::new("t.obj")).unwrap().scaled_to_height(2.0).unwrap();
        let (lo, hi) = m.bounding_box();
        assert!((hi.0[1] - lo.0[1] - 2.0).abs() < 1e-14);
        assert!((hi.0[0] - lo.0[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn quad_face_rejected() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", Path::new("q.obj"));
        assert!(matches!(err, Err(Error::Parse { line: 5, .. })));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_obj(Path::new("/nonexistent/bunny.obj"), None),
            Err(Error::Io { .. })
        ));
    }
}
