use crate::raster::{rasterize, MeshInstance, ShadingParams, TexturedMesh};
use crate::{Result, SimError};
use geom_core::{PinholeCamera, RigidTransform, Vec3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scene_edit::GsScene;
use serde::{Deserialize, Serialize};
use splat_render::{render as splat_render_fn, ImageRgb};
use std::collections::BTreeMap;

/// Which observation renderer to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RendererKind {
    /// Composed Gaussian scene through the splat rasterizer.
    Gs,
    /// Flat per-object colors on the meshes, no texture, no shadows.
    FlatShaded,
    /// Textured Lambertian meshes with soft shadows (the pseudo-real look).
    Reference,
}

/// Task selection; positions in meters in the table frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Task {
    Grasp { target: String },
    PickPlace { target: String },
}

impl Task {
    pub fn target(&self) -> &str {
        match self {
            Task::Grasp { target } | Task::PickPlace { target } => target,
        }
    }
}

/// Environment tuning knobs; all lengths in meters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub task: Task,
    pub horizon: u32,
    /// Gripper-to-grasp-point distance that allows attachment.
    pub grasp_tolerance: f64,
    /// Object height that completes a grasp.
    pub lift_height: f64,
    /// Placement tolerance radius around the plate center.
    pub goal_radius: f64,
    /// Side of the square object-randomization region (centered on origin).
    pub region_side: f64,
    /// Per-component position change cap per step.
    pub max_step: f64,
    pub gripper_home: Vec3,
    /// Fixed plate position for pick-and-place.
    pub plate_center: Vec3,
    /// Image edge length in pixels for observations.
    pub image_size: u32,
    pub camera_focal: f64,
    /// Camera mount offset from the gripper.
    pub camera_offset: Vec3,
    /// Point (relative to the home gripper) the camera looks at; fixes the
    /// rigid mount orientation.
    pub camera_look_at: Vec3,
    pub background: [f64; 3],
    /// Shadow strength of the reference renderer.
    pub reference_shadow: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            task: Task::Grasp { target: "cube".into() },
            horizon: 100,
            grasp_tolerance: 0.03,
            lift_height: 0.10,
            goal_radius: 0.06,
            region_side: 0.30,
            max_step: 0.02,
            gripper_home: Vec3::new(0.0, 0.0, 0.20),
            plate_center: Vec3::new(0.0, 0.19, 0.0),
            image_size: 64,
            camera_focal: 50.0,
            camera_offset: Vec3::new(0.0, -0.13, 0.10),
            camera_look_at: Vec3::new(0.0, 0.01, 0.0),
            background: [0.55, 0.62, 0.68],
            reference_shadow: 0.3,
        }
    }
}

/// A movable or fixed object in the scene.
#[derive(Debug, Clone)]
pub struct ObjectAsset {
    pub name: String,
    pub textured: TexturedMesh,
    pub flat_color: [f64; 3],
    /// Canonical-frame point the gripper targets (roughly the centroid).
    pub grasp_center: Vec3,
    /// Fixed objects (the plate) never attach and never fall.
    pub movable: bool,
}

/// Mesh assets for one environment: the table plus the objects.
#[derive(Debug, Clone)]
pub struct SceneAssets {
    pub table: TexturedMesh,
    pub table_flat_color: [f64; 3],
    pub objects: Vec<ObjectAsset>,
}

/// Full simulator state; a pure value, cheap to clone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub gripper_pos: Vec3,
    pub aperture: f64,
    pub object_poses: BTreeMap<String, RigidTransform>,
    pub held_object: Option<String>,
    /// Object origin minus gripper position, frozen while held.
    pub held_offset: Vec3,
    pub step_count: u32,
    pub done: bool,
    pub success: bool,
}

/// Bounded end-effector command.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Action {
    /// Desired position change, clamped per component to ±max_step.
    pub delta: Vec3,
    /// Gripper command in [-1, 1]; negative closes.
    pub gripper: f64,
}

/// What the policy sees: a first-person image plus proprioception
/// [gripper x, y, z, aperture].
#[derive(Debug, Clone)]
pub struct Observation {
    pub rgb: ImageRgb,
    pub proprio: [f64; 4],
}

/// Outcome of one step.
#[derive(Debug, Clone, Copy)]
pub struct StepResult {
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

/// The environment: assets, config, live state, and an optional Gaussian
/// scene for the GS renderer. One instance per thread; instances share no
/// mutable state.
pub struct TabletopEnv {
    config: EnvConfig,
    assets: SceneAssets,
    state: SimState,
    gs_scene: Option<GsScene>,
    camera_rotation_pose: RigidTransform,
    rest_heights: BTreeMap<String, f64>,
}

impl TabletopEnv {
    pub fn new(config: EnvConfig, assets: SceneAssets) -> Result<Self> {
        // The rigid camera mount: orientation fixed from the home pose.
        let home_cam = PinholeCamera::look_at(
            config.camera_focal,
            config.camera_focal,
            config.image_size as f64 / 2.0,
            config.image_size as f64 / 2.0,
            config.image_size,
            config.image_size,
            config.gripper_home + config.camera_offset,
            config.camera_look_at,
            Vec3::Z,
        )?;
        let camera_rotation_pose = home_cam.world_to_camera;

        let mut rest_heights = BTreeMap::new();
        for obj in &assets.objects {
            // Canonical meshes sit with their base at z = 0; resting pose
            // keeps the support points on the table plane.
            let (lo, _) = obj.textured.mesh.bounds();
            rest_heights.insert(obj.name.clone(), -lo.z);
        }

        let state = SimState {
            gripper_pos: config.gripper_home,
            aperture: 1.0,
            object_poses: BTreeMap::new(),
            held_object: None,
            held_offset: Vec3::ZERO,
            step_count: 0,
            done: false,
            success: false,
        };
        Ok(TabletopEnv { config, assets, state, gs_scene: None, camera_rotation_pose, rest_heights })
    }

    /// Attach a trained Gaussian scene (object names must match the assets).
    pub fn attach_gs_scene(&mut self, scene: GsScene) {
        self.gs_scene = Some(scene);
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn assets(&self) -> &SceneAssets {
        &self.assets
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn rest_height(&self, name: &str) -> f64 {
        self.rest_heights.get(name).copied().unwrap_or(0.0)
    }

    /// Grasp point of an object under its current pose.
    pub fn grasp_point(&self, state: &SimState, name: &str) -> Result<Vec3> {
        let asset = self
            .assets
            .objects
            .iter()
            .find(|o| o.name == name)
            .ok_or_else(|| SimError::NoSuchObject(name.to_string()))?;
        let pose = state
            .object_poses
            .get(name)
            .ok_or_else(|| SimError::NoSuchObject(name.to_string()))?;
        Ok(pose.apply(asset.grasp_center))
    }

    /// Reset to a random initial layout: target uniform in the region,
    /// upright and resting; gripper home, open; plate (if any) fixed.
    pub fn reset(&mut self, seed: u64) -> Result<(SimState, Observation)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.config.region_side / 2.0;

        let mut poses = BTreeMap::new();
        for obj in &self.assets.objects {
            if !obj.movable {
                poses.insert(
                    obj.name.clone(),
                    RigidTransform::from_translation(self.config.plate_center),
                );
            }
        }
        for obj in &self.assets.objects {
            if obj.movable {
                let rest_z = self.rest_heights[&obj.name];
                // Keep spawn clear of the plate for pick-and-place.
                let (x, y) = loop {
                    let x = rng.random_range(-half..half);
                    let y = rng.random_range(-half..half);
                    let clear = match self.config.task {
                        Task::PickPlace { .. } => {
                            let d = Vec3::new(x, y, 0.0) - self.config.plate_center;
                            Vec3::new(d.x, d.y, 0.0).norm() > self.config.goal_radius + 0.04
                        }
                        Task::Grasp { .. } => true,
                    };
                    if clear {
                        break (x, y);
                    }
                };
                poses.insert(
                    obj.name.clone(),
                    RigidTransform::from_translation(Vec3::new(x, y, rest_z)),
                );
            }
        }

        self.state = SimState {
            gripper_pos: self.config.gripper_home,
            aperture: 1.0,
            object_poses: poses,
            held_object: None,
            held_offset: Vec3::ZERO,
            step_count: 0,
            done: false,
            success: false,
        };
        let obs = self.observe(&self.state.clone(), RendererKind::Reference)?;
        Ok((self.state.clone(), obs))
    }

    /// Advance the simulation by one bounded action. Pure in (state, action).
    pub fn step(&mut self, action: &Action) -> Result<(SimState, StepResult)> {
        if self.state.done {
            return Err(SimError::SteppedTerminalState);
        }
        let cfg = &self.config;
        let cap = cfg.max_step;
        let delta = Vec3::new(
            action.delta.x.clamp(-cap, cap),
            action.delta.y.clamp(-cap, cap),
            action.delta.z.clamp(-cap, cap),
        );
        let gripper_cmd = action.gripper.clamp(-1.0, 1.0);

        let mut target = self.state.gripper_pos + delta;
        target.x = target.x.clamp(-0.25, 0.25);
        target.y = target.y.clamp(-0.25, 0.25);
        target.z = target.z.clamp(0.0, 0.30);
        // A held object must stay on or above the table, so the gripper
        // bottoms out where the object's rest height would be violated.
        if let Some(held) = &self.state.held_object {
            let rest_z = self.rest_heights[held];
            let min_gripper_z = rest_z - self.state.held_offset.z;
            target.z = target.z.max(min_gripper_z);
        }
        self.state.gripper_pos = target;

        if let Some(held) = self.state.held_object.clone() {
            let pose = RigidTransform::from_translation(target + self.state.held_offset);
            self.state.object_poses.insert(held, pose);
        }

        self.state.aperture = (self.state.aperture + gripper_cmd * 0.25).clamp(0.0, 1.0);

        let target_name = cfg.task.target().to_string();
        if gripper_cmd < 0.0 && self.state.held_object.is_none() {
            let grasp_point = self.grasp_point(&self.state, &target_name)?;
            if self.state.gripper_pos.distance(grasp_point) < cfg.grasp_tolerance {
                let obj_pos = self.state.object_poses[&target_name].translation;
                self.state.held_object = Some(target_name.clone());
                self.state.held_offset = obj_pos - self.state.gripper_pos;
            }
        } else if gripper_cmd > 0.0 && self.state.held_object.is_some() {
            // Release: the object falls straight down to its support.
            let held = self.state.held_object.take().unwrap();
            let pose = self.state.object_poses[&held];
            let rest = self.support_height(&held, pose.translation);
            let dropped = RigidTransform {
                rotation: pose.rotation,
                translation: Vec3::new(pose.translation.x, pose.translation.y, rest),
            };
            self.state.object_poses.insert(held, dropped);
            self.state.held_offset = Vec3::ZERO;
        }

        let success = match &cfg.task {
            Task::Grasp { target } => {
                self.state.held_object.as_deref() == Some(target.as_str())
                    && self.state.object_poses[target].translation.z >= cfg.lift_height
            }
            Task::PickPlace { target } => {
                let pose = &self.state.object_poses[target];
                let planar = Vec3::new(
                    pose.translation.x - cfg.plate_center.x,
                    pose.translation.y - cfg.plate_center.y,
                    0.0,
                );
                self.state.held_object.is_none()
                    && planar.norm() < cfg.goal_radius
                    && (pose.translation.z
                        - self.support_height(target, pose.translation))
                    .abs()
                        < 1e-9
                    && self.state.step_count > 0
            }
        };

        self.state.step_count += 1;
        let reward = if success { 1.0 } else { 0.0 };
        let done = success || self.state.step_count >= cfg.horizon;
        self.state.done = done;
        self.state.success = success;
        Ok((self.state.clone(), StepResult { reward, done, success }))
    }

    /// Rest height for an object dropped at a planar position: the plate top
    /// when over the plate, else the table.
    fn support_height(&self, name: &str, at: Vec3) -> f64 {
        let mut support = 0.0f64;
        for other in &self.assets.objects {
            if other.movable || other.name == name {
                continue;
            }
            let other_pose = &self.state.object_poses[&other.name];
            let (lo, hi) = other.textured.mesh.bounds();
            let planar = Vec3::new(
                at.x - other_pose.translation.x,
                at.y - other_pose.translation.y,
                0.0,
            );
            let radius = Vec3::new(hi.x - lo.x, hi.y - lo.y, 0.0).norm() * 0.5;
            if planar.norm() < radius {
                support = support.max(other_pose.translation.z + hi.z);
            }
        }
        support + self.rest_heights[name]
    }

    /// Wrist camera for a given gripper position: fixed mount orientation,
    /// translated with the gripper.
    pub fn wrist_camera(&self, gripper_pos: Vec3) -> PinholeCamera {
        let cfg = &self.config;
        let shift = gripper_pos - cfg.gripper_home;
        let pose = self
            .camera_rotation_pose
            .compose(RigidTransform::from_translation(-shift));
        PinholeCamera::new(
            cfg.camera_focal,
            cfg.camera_focal,
            cfg.image_size as f64 / 2.0,
            cfg.image_size as f64 / 2.0,
            cfg.image_size,
            cfg.image_size,
            pose,
        )
        .expect("camera intrinsics are valid by construction")
    }

    /// Render an observation of a state under the chosen renderer.
    pub fn observe(&self, state: &SimState, renderer: RendererKind) -> Result<Observation> {
        let cam = self.wrist_camera(state.gripper_pos);
        let rgb = match renderer {
            RendererKind::Gs => {
                let Some(scene) = &self.gs_scene else {
                    return Err(SimError::GsUnavailable);
                };
                let mut scene = scene.clone();
                for obj in &self.assets.objects {
                    if let Some(pose) = state.object_poses.get(&obj.name) {
                        // Fixed objects may be absent from the GS scene.
                        if scene.set_pose(&obj.name, *pose).is_err() && obj.movable {
                            return Err(SimError::NoSuchObject(obj.name.clone()));
                        }
                    }
                }
                let units = scene.compose();
                splat_render_fn(&units, &cam, self.config.background).rgb
            }
            RendererKind::FlatShaded => {
                let shading = ShadingParams::default();
                let instances = self.mesh_instances(state, true);
                rasterize(&instances, &cam, self.config.background, &shading)
            }
            RendererKind::Reference => {
                let shading = ShadingParams::with_shadows(self.config.reference_shadow);
                let instances = self.mesh_instances(state, false);
                rasterize(&instances, &cam, self.config.background, &shading)
            }
        };
        Ok(Observation {
            rgb,
            proprio: [
                state.gripper_pos.x,
                state.gripper_pos.y,
                state.gripper_pos.z,
                state.aperture,
            ],
        })
    }

    fn mesh_instances<'a>(&'a self, state: &SimState, flat: bool) -> Vec<MeshInstance<'a>> {
        let mut out = Vec::with_capacity(1 + self.assets.objects.len());
        out.push(MeshInstance {
            mesh: &self.assets.table,
            pose: RigidTransform::identity(),
            flat_color: flat.then_some(self.assets.table_flat_color),
            casts_shadow: false,
        });
        for obj in &self.assets.objects {
            if let Some(pose) = state.object_poses.get(&obj.name) {
                out.push(MeshInstance {
                    mesh: &obj.textured,
                    pose: *pose,
                    flat_color: flat.then_some(obj.flat_color),
                    casts_shadow: obj.movable,
                });
            }
        }
        out
    }
}

impl EnvConfig {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }
}
