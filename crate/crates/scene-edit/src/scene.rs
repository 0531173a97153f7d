use crate::{EditError, Result};
use gauss_model::{BoundGaussianSet, GaussianUnit};
use geom_core::RigidTransform;

/// Rigidly move resolved Gaussians: positions through the transform,
/// rotations left-multiplied by its quaternion; scale, opacity and color
/// untouched.
pub fn transform_gaussians(units: &[GaussianUnit], t: RigidTransform) -> Vec<GaussianUnit> {
    units
        .iter()
        .map(|g| GaussianUnit {
            position: t.apply(g.position),
            rotation: t.rotation.multiply(g.rotation),
            scale: g.scale,
            opacity: g.opacity,
            color: g.color,
        })
        .collect()
}

/// One object in the simulator: its Gaussian model in a canonical
/// reconstruction frame, a fixed alignment into the simulator frame, and a
/// live pose driven by the simulator.
#[derive(Debug, Clone)]
pub struct SceneObject {
    name: String,
    model: BoundGaussianSet,
    /// Canonical resolved units, cached; the binding is immutable here.
    resolved: Vec<GaussianUnit>,
    base_alignment: RigidTransform,
    current_pose: RigidTransform,
}

impl SceneObject {
    pub fn new(
        name: impl Into<String>,
        model: BoundGaussianSet,
        base_alignment: RigidTransform,
        initial_pose: RigidTransform,
    ) -> Result<Self> {
        let resolved = model.resolve_all()?;
        Ok(SceneObject {
            name: name.into(),
            model,
            resolved,
            base_alignment,
            current_pose: initial_pose,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn model(&self) -> &BoundGaussianSet {
        &self.model
    }

    pub fn base_alignment(&self) -> RigidTransform {
        self.base_alignment
    }

    pub fn current_pose(&self) -> RigidTransform {
        self.current_pose
    }

    pub fn set_pose(&mut self, pose: RigidTransform) {
        self.current_pose = pose;
    }

    pub fn gaussian_count(&self) -> usize {
        self.resolved.len()
    }

    /// Units in the simulator frame under the live pose.
    pub fn world_units(&self) -> Vec<GaussianUnit> {
        transform_gaussians(&self.resolved, self.current_pose.compose(self.base_alignment))
    }
}

/// The whole renderable scene: a background whose pose is pinned to
/// identity plus named movable objects in registration order.
#[derive(Debug, Clone)]
pub struct GsScene {
    background: SceneObject,
    objects: Vec<SceneObject>,
}

impl GsScene {
    pub fn new(mut background: SceneObject) -> Self {
        background.current_pose = RigidTransform::identity();
        GsScene { background, objects: Vec::new() }
    }

    pub fn add_object(&mut self, object: SceneObject) -> Result<()> {
        if object.name == self.background.name
            || self.objects.iter().any(|o| o.name == object.name)
        {
            return Err(EditError::DuplicateName(object.name));
        }
        self.objects.push(object);
        Ok(())
    }

    pub fn background(&self) -> &SceneObject {
        &self.background
    }

    pub fn objects(&self) -> &[SceneObject] {
        &self.objects
    }

    pub fn object_mut(&mut self, name: &str) -> Result<&mut SceneObject> {
        self.objects
            .iter_mut()
            .find(|o| o.name == name)
            .ok_or_else(|| EditError::NoSuchObject(name.to_string()))
    }

    pub fn set_pose(&mut self, name: &str, pose: RigidTransform) -> Result<()> {
        self.object_mut(name)?.set_pose(pose);
        Ok(())
    }

    /// Background Gaussians followed by each object's, in registration
    /// order, each under current_pose ∘ base_alignment.
    pub fn compose(&self) -> Vec<GaussianUnit> {
        let mut out = self.background.world_units();
        for obj in &self.objects {
            out.extend(obj.world_units());
        }
        out
    }

    pub fn total_gaussians(&self) -> usize {
        self.background.gaussian_count()
            + self.objects.iter().map(|o| o.gaussian_count()).sum::<usize>()
    }
}

/// Free-function spelling of [`GsScene::compose`].
pub fn compose_scene(scene: &GsScene) -> Vec<GaussianUnit> {
    scene.compose()
}
