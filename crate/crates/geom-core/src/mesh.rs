use crate::{GeomError, Result, UnitQuaternion, Vec3};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// Minimum face area accepted when building a mesh, in m^2.
pub const MIN_FACE_AREA: f64 = 1e-12;

/// An orthonormal, right-handed frame attached to a triangle face.
///
/// `e1` runs along the longest edge, `n` is the face normal, `e2 = n × e1`.
#[derive(Debug, Clone, Copy)]
pub struct FaceFrame {
    pub e1: Vec3,
    pub e2: Vec3,
    pub n: Vec3,
}

impl FaceFrame {
    /// The rotation taking face-local coordinates (e1, e2, n basis) to world.
    pub fn rotation(&self) -> UnitQuaternion {
        // Columns of the local-to-world matrix are the basis vectors.
        let m = [
            [self.e1.x, self.e2.x, self.n.x],
            [self.e1.y, self.e2.y, self.n.y],
            [self.e1.z, self.e2.z, self.n.z],
        ];
        UnitQuaternion::from_matrix(&m)
    }
}

/// An indexed triangle mesh with per-face unit normals.
///
/// Construction validates indices, rejects degenerate faces and precomputes
/// normals and areas; a built mesh is immutable.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    normals: Vec<Vec3>,
    areas: Vec<f64>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeomError::InvalidMesh(format!("vertex {i} is not finite")));
            }
        }
        let mut normals = Vec::with_capacity(faces.len());
        let mut areas = Vec::with_capacity(faces.len());
        for (i, f) in faces.iter().enumerate() {
            for &vi in f {
                if vi >= vertices.len() {
                    return Err(GeomError::InvalidMesh(format!(
                        "face {i} references vertex {vi} but mesh has {} vertices",
                        vertices.len()
                    )));
                }
            }
            let (n, area) = face_normal_area(&vertices, *f);
            if area <= MIN_FACE_AREA {
                return Err(GeomError::DegenerateFace { index: i, area });
            }
            normals.push(n);
            areas.push(area);
        }
        Ok(TriangleMesh { vertices, faces, normals, areas })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn normals(&self) -> &[Vec3] {
        &self.normals
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_area(&self, face_index: usize) -> f64 {
        self.areas[face_index]
    }

    /// The three corner positions of a face.
    pub fn face_vertices(&self, face_index: usize) -> [Vec3; 3] {
        let f = self.faces[face_index];
        [self.vertices[f[0]], self.vertices[f[1]], self.vertices[f[2]]]
    }

    /// Orthonormal face frame: `e1` along the longest edge, `n` the face
    /// normal, `e2 = n × e1`.
    pub fn face_frame(&self, face_index: usize) -> Result<FaceFrame> {
        let [a, b, c] = self.face_vertices(face_index);
        let area = self.areas[face_index];
        if area <= MIN_FACE_AREA {
            return Err(GeomError::DegenerateFace { index: face_index, area });
        }
        let edges = [(b - a, a, b), (c - b, b, c), (a - c, c, a)];
        let longest = edges
            .iter()
            .max_by(|l, r| l.0.norm_squared().total_cmp(&r.0.norm_squared()))
            .unwrap()
            .0;
        let n = self.normals[face_index];
        let e1 = longest.normalized().expect("non-degenerate face has nonzero edges");
        // Re-orthogonalize against n to absorb rounding in the normal.
        let e1 = (e1 - n * e1.dot(n)).normalized().unwrap_or(e1);
        let e2 = n.cross(e1);
        Ok(FaceFrame { e1, e2, n })
    }

    /// Same connectivity with replaced vertex positions; normals and areas
    /// are recomputed. Used for non-rigid deformation of bound Gaussians.
    pub fn with_vertices(&self, new_vertices: Vec<Vec3>) -> Result<Self> {
        if new_vertices.len() != self.vertices.len() {
            return Err(GeomError::VertexCountMismatch {
                expected: self.vertices.len(),
                got: new_vertices.len(),
            });
        }
        TriangleMesh::new(new_vertices, self.faces.clone())
    }

    /// Mesh rigidly transformed into another frame.
    pub fn transformed(&self, t: crate::RigidTransform) -> Self {
        let vertices = self.vertices.iter().map(|&v| t.apply(v)).collect();
        // Rigid motion preserves non-degeneracy; reuse connectivity.
        TriangleMesh::new(vertices, self.faces.clone()).expect("rigid motion preserves validity")
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Axis-aligned bounding box as (min, max) corners.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &v in &self.vertices {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Load from the minimal ASCII OBJ subset (`v` and `f` records only).
    ///
    /// Face records may carry `v/vt/vn` syntax; only the vertex index is read.
    /// Indices are 1-based, negative indices count from the end.
    pub fn load_obj(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut vertices: Vec<Vec3> = Vec::new();
        let mut faces: Vec<[usize; 3]> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let mut fields = line.split_whitespace();
            match fields.next() {
                Some("v") => {
                    let mut coord = |name: &str| -> Result<f64> {
                        fields
                            .next()
                            .ok_or_else(|| GeomError::ObjParse {
                                line: lineno + 1,
                                message: format!("missing {name} coordinate"),
                            })?
                            .parse::<f64>()
                            .map_err(|e| GeomError::ObjParse {
                                line: lineno + 1,
                                message: e.to_string(),
                            })
                    };
                    let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
                    vertices.push(Vec3::new(x, y, z));
                }
                Some("f") => {
                    let mut idx = [0usize; 3];
                    for slot in idx.iter_mut() {
                        let field = fields.next().ok_or_else(|| GeomError::ObjParse {
                            line: lineno + 1,
                            message: "face needs three vertex indices".into(),
                        })?;
                        let first = field.split('/').next().unwrap_or(field);
                        let raw: i64 = first.parse().map_err(|_| GeomError::ObjParse {
                            line: lineno + 1,
                            message: format!("bad face index {first:?}"),
                        })?;
                        let resolved = if raw > 0 {
                            raw as usize - 1
                        } else if raw < 0 {
                            let back = (-raw) as usize;
                            if back > vertices.len() {
                                return Err(GeomError::ObjParse {
                                    line: lineno + 1,
                                    message: format!("negative index {raw} out of range"),
                                });
                            }
                            vertices.len() - back
                        } else {
                            return Err(GeomError::ObjParse {
                                line: lineno + 1,
                                message: "face index 0 is invalid".into(),
                            });
                        };
                        *slot = resolved;
                    }
                    if fields.next().is_some() {
                        return Err(GeomError::ObjParse {
                            line: lineno + 1,
                            message: "only triangle faces are supported".into(),
                        });
                    }
                    faces.push(idx);
                }
                // Comments, empty lines and any other record types are skipped.
                _ => {}
            }
        }
        TriangleMesh::new(vertices, faces)
    }

    /// Save in the same OBJ subset read by [`TriangleMesh::load_obj`].
    pub fn save_obj(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for v in &self.vertices {
            writeln!(out, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for f in &self.faces {
            writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
        }
        Ok(())
    }
}

fn face_normal_area(vertices: &[Vec3], f: [usize; 3]) -> (Vec3, f64) {
    let a = vertices[f[0]];
    let b = vertices[f[1]];
    let c = vertices[f[2]];
    let cr = (b - a).cross(c - a);
    let doubled = cr.norm();
    let n = if doubled > 1e-300 { cr / doubled } else { Vec3::Z };
    (n, doubled * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_right_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::X, Vec3::Y],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn planar_face_normal_is_z() {
        let m = unit_right_triangle();
        let frame = m.face_frame(0).unwrap();
        assert!((frame.n - Vec3::Z).norm() < 1e-12);
        assert!((m.face_area(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn face_frame_is_orthonormal() {
        let m = TriangleMesh::new(
            vec![Vec3::new(0.1, 0.2, 0.3), Vec3::new(1.0, -0.2, 0.5), Vec3::new(0.4, 0.9, -0.1)],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let f = m.face_frame(0).unwrap();
        for v in [f.e1, f.e2, f.n] {
            assert!((v.norm() - 1.0).abs() < 1e-6);
        }
        assert!(f.e1.dot(f.e2).abs() < 1e-9);
        assert!(f.e1.dot(f.n).abs() < 1e-9);
        assert!(f.e2.dot(f.n).abs() < 1e-9);
        // right-handed
        assert!((f.e1.cross(f.e2) - f.n).norm() < 1e-9);
    }

    #[test]
    fn degenerate_face_is_rejected() {
        let err = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::X, Vec3::new(2.0, 0.0, 0.0)],
            vec![[0, 1, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, GeomError::DegenerateFace { index: 0, .. }));
    }

    #[test]
    fn bad_index_is_rejected() {
        let err = TriangleMesh::new(vec![Vec3::ZERO, Vec3::X], vec![[0, 1, 2]]).unwrap_err();
        assert!(matches!(err, GeomError::InvalidMesh(_)));
    }

    #[test]
    fn obj_roundtrip() {
        let m = TriangleMesh::new(
            vec![Vec3::ZERO, Vec3::X, Vec3::Y, Vec3::new(0.25, 0.25, 1.0)],
            vec![[0, 1, 2], [0, 1, 3], [1, 2, 3], [2, 0, 3]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tetra.obj");
        m.save_obj(&path).unwrap();
        let back = TriangleMesh::load_obj(&path).unwrap();
        assert_eq!(back.vertex_count(), 4);
        assert_eq!(back.face_count(), 4);
        for (a, b) in m.vertices().iter().zip(back.vertices()) {
            assert!((*a - *b).norm() < 1e-12);
        }
        assert_eq!(m.faces(), back.faces());
    }

    #[test]
    fn deformed_vertices_must_match_count() {
        let m = unit_right_triangle();
        let err = m.with_vertices(vec![Vec3::ZERO]).unwrap_err();
        assert!(matches!(err, GeomError::VertexCountMismatch { expected: 3, got: 1 }));
    }
}
