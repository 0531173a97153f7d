use crate::{BindingMode, BoundGaussian, BoundGaussianSet, NormalScale, Result};
use geom_core::TriangleMesh;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

/// On-disk form of a [`BoundGaussianSet`]: the mesh is stored by path, the
/// binding parameters in full. JSON float serialization is shortest-exact,
/// so save/load round-trips losslessly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundGaussianSetFile {
    pub mesh_path: String,
    pub mode: BindingMode,
    #[serde(default)]
    pub normal_scale: NormalScale,
    pub gaussians: Vec<BoundGaussian>,
}

impl BoundGaussianSet {
    /// Save to JSON, recording `mesh_path` as the mesh reference.
    pub fn save_json(&self, path: impl AsRef<Path>, mesh_path: &str) -> Result<()> {
        let file = BoundGaussianSetFile {
            mesh_path: mesh_path.to_string(),
            mode: self.mode(),
            normal_scale: self.normal_scale(),
            gaussians: self.gaussians().to_vec(),
        };
        let out = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(out), &file)?;
        Ok(())
    }

    /// Load from JSON; `mesh_path` entries are resolved relative to
    /// `base_dir` unless absolute.
    pub fn load_json(path: impl AsRef<Path>, base_dir: impl AsRef<Path>) -> Result<Self> {
        let input = std::fs::File::open(path)?;
        let file: BoundGaussianSetFile =
            serde_json::from_reader(std::io::BufReader::new(input))?;
        let mesh_path = Path::new(&file.mesh_path);
        let resolved = if mesh_path.is_absolute() {
            mesh_path.to_path_buf()
        } else {
            base_dir.as_ref().join(mesh_path)
        };
        let mesh = Arc::new(TriangleMesh::load_obj(resolved)?);
        BoundGaussianSet::from_parts(mesh, file.gaussians, file.mode, file.normal_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use geom_core::Vec3;

    #[test]
    fn roundtrip_is_lossless() {
        let mesh = Arc::new(
            TriangleMesh::new(
                vec![Vec3::ZERO, Vec3::X, Vec3::Y],
                vec![[0, 1, 2]],
            )
            .unwrap(),
        );
        let mut set =
            BoundGaussianSet::init_bindings(mesh.clone(), 7, BindingMode::Soft, 99).unwrap();
        set.gaussians_mut()[3].normal_raw = 0.123456789012345678;
        set.gaussians_mut()[3].color = [0.1, 0.999999999999, 1.0 / 3.0];

        let dir = tempfile::tempdir().unwrap();
        mesh.save_obj(dir.path().join("m.obj")).unwrap();
        let set_path = dir.path().join("set.json");
        set.save_json(&set_path, "m.obj").unwrap();

        let back = BoundGaussianSet::load_json(&set_path, dir.path()).unwrap();
        assert_eq!(back.mode(), BindingMode::Soft);
        assert_eq!(back.gaussians(), set.gaussians());
    }
}
