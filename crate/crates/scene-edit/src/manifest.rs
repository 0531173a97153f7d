use crate::{GsScene, Result, SceneObject};
use gauss_model::BoundGaussianSet;
use geom_core::RigidTransform;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// One scene member: a trained model on disk plus its placement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    /// Path to a BoundGaussianSet JSON, relative to the manifest directory.
    pub model_path: String,
    /// Alignment from the model's reconstruction frame into the simulator
    /// frame (plane alignment composed with any manual adjustment).
    #[serde(default = "RigidTransform::identity")]
    pub alignment: RigidTransform,
    #[serde(default = "RigidTransform::identity")]
    pub initial_pose: RigidTransform,
}

/// Scene description file: background model plus movable objects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneManifest {
    pub background: ManifestEntry,
    pub objects: Vec<ManifestEntry>,
}

impl SceneManifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    /// Load every referenced model (paths resolved against `base_dir`) and
    /// assemble the scene.
    pub fn build_scene(&self, base_dir: impl AsRef<Path>) -> Result<GsScene> {
        let base = base_dir.as_ref();
        let load = |entry: &ManifestEntry| -> Result<SceneObject> {
            let model = BoundGaussianSet::load_json(base.join(&entry.model_path), base)?;
            SceneObject::new(entry.name.clone(), model, entry.alignment, entry.initial_pose)
        };
        let mut scene = GsScene::new(load(&self.background)?);
        for entry in &self.objects {
            scene.add_object(load(entry)?)?;
        }
        Ok(scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use gauss_model::BindingMode;
    use geom_core::{TriangleMesh, Vec3};
    use std::sync::Arc;

    #[test]
    fn manifest_roundtrip_and_build() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = Arc::new(
            TriangleMesh::new(vec![Vec3::ZERO, Vec3::X, Vec3::Y], vec![[0, 1, 2]]).unwrap(),
        );
        mesh.save_obj(dir.path().join("tri.obj")).unwrap();
        let set = BoundGaussianSet::init_bindings(mesh, 2, BindingMode::Soft, 0).unwrap();
        set.save_json(dir.path().join("bg.json"), "tri.obj").unwrap();
        set.save_json(dir.path().join("cube.json"), "tri.obj").unwrap();

        let manifest = SceneManifest {
            background: ManifestEntry {
                name: "table".into(),
                model_path: "bg.json".into(),
                alignment: RigidTransform::identity(),
                initial_pose: RigidTransform::identity(),
            },
            objects: vec![ManifestEntry {
                name: "cube".into(),
                model_path: "cube.json".into(),
                alignment: RigidTransform::identity(),
                initial_pose: RigidTransform::from_translation(Vec3::new(0.1, 0.0, 0.02)),
            }],
        };
        manifest.save(dir.path().join("scene.json")).unwrap();
        let loaded = SceneManifest::load(dir.path().join("scene.json")).unwrap();
        assert_eq!(loaded.objects.len(), 1);

        let scene = loaded.build_scene(dir.path()).unwrap();
        assert_eq!(scene.objects().len(), 1);
        assert_eq!(scene.total_gaussians(), 4);
        let composed = scene.compose();
        // The object sits 0.1 m along x relative to the background copy.
        assert!((composed[2].position.x - composed[0].position.x - 0.1).abs() < 1e-12);
    }
}
