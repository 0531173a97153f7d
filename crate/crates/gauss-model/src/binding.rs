use crate::{logistic, softmax3, GaussError, GaussianUnit, Result, UnitGrad};
use geom_core::{TriangleMesh, UnitQuaternion, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Smallest allowed resolved scale, meters.
pub const MIN_SCALE: f64 = 1e-6;
/// Resolved scale ceiling as a multiple of the face scale h.
pub const MAX_SCALE_FACTOR: f64 = 10.0;

/// Whether Gaussians are pinned to the face plane or may float along the
/// face normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BindingMode {
    /// In-plane convex combination of the face vertices.
    Hard,
    /// Adds a tanh-bounded offset along the face normal.
    Soft,
}

/// Definition of the face scale h that bounds the normal offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormalScale {
    /// h = sqrt(face area); the offset range follows local mesh resolution.
    SqrtArea,
    /// Fixed length in meters, identical for every face.
    Fixed(f64),
}

impl Default for NormalScale {
    fn default() -> Self {
        NormalScale::SqrtArea
    }
}

impl NormalScale {
    fn h(&self, face_area: f64) -> f64 {
        match self {
            NormalScale::SqrtArea => face_area.sqrt(),
            NormalScale::Fixed(len) => *len,
        }
    }
}

/// One Gaussian parameterized relative to a mesh face.
///
/// All fields are unconstrained optimization variables except
/// `rotation_offset` (kept unit by renormalization after each optimizer
/// step) and `color` (kept in [0,1] by projection).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundGaussian {
    pub face_index: usize,
    pub bary_logits: [f64; 3],
    pub normal_raw: f64,
    pub scale_logits: [f64; 3],
    pub rotation_offset: UnitQuaternion,
    pub opacity_logit: f64,
    pub color: [f64; 3],
}

impl BoundGaussian {
    /// Barycentric weights on the simplex (softmax of the logits).
    pub fn barycentric(&self) -> [f64; 3] {
        softmax3(self.bary_logits)
    }

    /// Signed normal weight αn = tanh(normal_raw), in (-1, 1).
    pub fn alpha_n(&self) -> f64 {
        self.normal_raw.tanh()
    }
}

/// A set of bound Gaussians sharing one mesh and one binding mode.
#[derive(Debug, Clone)]
pub struct BoundGaussianSet {
    mesh: Arc<TriangleMesh>,
    gaussians: Vec<BoundGaussian>,
    mode: BindingMode,
    normal_scale: NormalScale,
}

impl BoundGaussianSet {
    /// Seed `per_face` Gaussians on every face of the mesh.
    ///
    /// Barycentric logits are i.i.d. standard normal, the normal weight
    /// starts at zero (so soft and hard modes initialize identically),
    /// scales start at h/3 per axis, opacity at 0.5 and color mid-gray.
    pub fn init_bindings(
        mesh: Arc<TriangleMesh>,
        per_face: usize,
        mode: BindingMode,
        seed: u64,
    ) -> Result<Self> {
        if mesh.face_count() == 0 {
            return Err(GaussError::EmptyMesh);
        }
        if per_face == 0 {
            return Err(GaussError::ZeroPerFace);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gaussians = Vec::with_capacity(mesh.face_count() * per_face);
        for face_index in 0..mesh.face_count() {
            let h = mesh.face_area(face_index).sqrt();
            let scale_logit = (h / 3.0).ln();
            for _ in 0..per_face {
                let bary_logits = [
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                ];
                gaussians.push(BoundGaussian {
                    face_index,
                    bary_logits,
                    normal_raw: 0.0,
                    scale_logits: [scale_logit; 3],
                    rotation_offset: UnitQuaternion::IDENTITY,
                    opacity_logit: 0.0,
                    color: [0.5, 0.5, 0.5],
                });
            }
        }
        Ok(BoundGaussianSet { mesh, gaussians, mode, normal_scale: NormalScale::SqrtArea })
    }

    pub fn from_parts(
        mesh: Arc<TriangleMesh>,
        gaussians: Vec<BoundGaussian>,
        mode: BindingMode,
        normal_scale: NormalScale,
    ) -> Result<Self> {
        for (i, g) in gaussians.iter().enumerate() {
            if g.face_index >= mesh.face_count() {
                return Err(GaussError::Geom(geom_core::GeomError::InvalidMesh(format!(
                    "gaussian {i} references face {} of a {}-face mesh",
                    g.face_index,
                    mesh.face_count()
                ))));
            }
        }
        Ok(BoundGaussianSet { mesh, gaussians, mode, normal_scale })
    }

    pub fn mesh(&self) -> &Arc<TriangleMesh> {
        &self.mesh
    }

    pub fn mode(&self) -> BindingMode {
        self.mode
    }

    pub fn normal_scale(&self) -> NormalScale {
        self.normal_scale
    }

    pub fn set_normal_scale(&mut self, s: NormalScale) {
        self.normal_scale = s;
    }

    pub fn gaussians(&self) -> &[BoundGaussian] {
        &self.gaussians
    }

    /// Mutable access for the optimizer. Binding structure (face indices,
    /// count) must not change through this.
    pub fn gaussians_mut(&mut self) -> &mut [BoundGaussian] {
        &mut self.gaussians
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    /// Resolve one bound Gaussian into world space against the set's mesh.
    pub fn resolve(&self, index: usize) -> Result<GaussianUnit> {
        resolve_against(&self.gaussians[index], &self.mesh, self.mode, self.normal_scale)
    }

    /// Resolve every Gaussian, preserving order.
    pub fn resolve_all(&self) -> Result<Vec<GaussianUnit>> {
        self.gaussians
            .iter()
            .map(|g| resolve_against(g, &self.mesh, self.mode, self.normal_scale))
            .collect()
    }

    /// Resolve against deformed vertex positions (same connectivity); face
    /// normals and h are recomputed, binding parameters stay fixed.
    pub fn deform(&self, new_vertices: &[Vec3]) -> Result<Vec<GaussianUnit>> {
        let deformed = self.mesh.with_vertices(new_vertices.to_vec())?;
        self.gaussians
            .iter()
            .map(|g| resolve_against(g, &deformed, self.mode, self.normal_scale))
            .collect()
    }

    /// Gradient pull-back from resolved-unit space to binding parameters.
    pub fn resolve_backward(&self, index: usize, upstream: &UnitGrad) -> Result<BindingGrad> {
        resolve_backward_against(
            &self.gaussians[index],
            &self.mesh,
            self.mode,
            self.normal_scale,
            upstream,
        )
    }
}

/// Resolve a bound Gaussian against an explicit mesh.
pub fn resolve_against(
    bg: &BoundGaussian,
    mesh: &TriangleMesh,
    mode: BindingMode,
    normal_scale: NormalScale,
) -> Result<GaussianUnit> {
    let [v1, v2, v3] = mesh.face_vertices(bg.face_index);
    let frame = mesh.face_frame(bg.face_index)?;
    let area = mesh.face_area(bg.face_index);
    let h = normal_scale.h(area);

    let alpha = bg.barycentric();
    let alpha_n = match mode {
        BindingMode::Hard => 0.0,
        BindingMode::Soft => bg.alpha_n(),
    };
    let position = v1 * alpha[0] + v2 * alpha[1] + v3 * alpha[2] + frame.n * (alpha_n * h);

    let rotation = frame.rotation().multiply(bg.rotation_offset);

    let h_clamp = area.sqrt();
    let scale = Vec3::new(
        bg.scale_logits[0].exp().clamp(MIN_SCALE, MAX_SCALE_FACTOR * h_clamp),
        bg.scale_logits[1].exp().clamp(MIN_SCALE, MAX_SCALE_FACTOR * h_clamp),
        bg.scale_logits[2].exp().clamp(MIN_SCALE, MAX_SCALE_FACTOR * h_clamp),
    );

    Ok(GaussianUnit {
        position,
        rotation,
        scale,
        opacity: logistic(bg.opacity_logit),
        color: bg.color,
    })
}

/// Gradient of a scalar loss with respect to one bound Gaussian's raw
/// parameters.
#[derive(Debug, Clone, Copy, Default)]
pub struct BindingGrad {
    pub bary_logits: [f64; 3],
    pub normal_raw: f64,
    pub scale_logits: [f64; 3],
    pub rotation_offset: [f64; 4],
    pub opacity_logit: f64,
    pub color: [f64; 3],
}

impl BindingGrad {
    pub fn add_assign(&mut self, other: &BindingGrad) {
        for k in 0..3 {
            self.bary_logits[k] += other.bary_logits[k];
            self.scale_logits[k] += other.scale_logits[k];
            self.color[k] += other.color[k];
        }
        self.normal_raw += other.normal_raw;
        for k in 0..4 {
            self.rotation_offset[k] += other.rotation_offset[k];
        }
        self.opacity_logit += other.opacity_logit;
    }
}

/// Exact reverse-mode map of [`resolve_against`]: pulls a gradient with
/// respect to the resolved unit back onto the binding parameters.
///
/// In hard mode the normal weight is structurally frozen, so its gradient
/// is identically zero.
pub fn resolve_backward_against(
    bg: &BoundGaussian,
    mesh: &TriangleMesh,
    mode: BindingMode,
    normal_scale: NormalScale,
    upstream: &UnitGrad,
) -> Result<BindingGrad> {
    let [v1, v2, v3] = mesh.face_vertices(bg.face_index);
    let frame = mesh.face_frame(bg.face_index)?;
    let area = mesh.face_area(bg.face_index);
    let h = normal_scale.h(area);

    let mut grad = BindingGrad::default();

    // Position -> barycentric logits through the softmax Jacobian.
    let alpha = bg.barycentric();
    let g_dot_v = [upstream.position.dot(v1), upstream.position.dot(v2), upstream.position.dot(v3)];
    let weighted: f64 = (0..3).map(|k| alpha[k] * g_dot_v[k]).sum();
    for j in 0..3 {
        grad.bary_logits[j] = alpha[j] * (g_dot_v[j] - weighted);
    }

    // Position -> normal weight (soft mode only).
    if mode == BindingMode::Soft {
        let alpha_n = bg.alpha_n();
        grad.normal_raw = upstream.position.dot(frame.n) * h * (1.0 - alpha_n * alpha_n);
    }

    // Rotation: q_total = normalize(L(q_face) · q_off). Both inputs are unit,
    // so the normalization contributes the tangent projection (I - qqᵀ).
    let q_face = frame.rotation();
    let q_total = q_face.multiply(bg.rotation_offset);
    let qt = [q_total.w, q_total.x, q_total.y, q_total.z];
    let up_rot = upstream.rotation;
    let dot: f64 = (0..4).map(|k| qt[k] * up_rot[k]).sum();
    let mut projected = [0.0; 4];
    for k in 0..4 {
        projected[k] = up_rot[k] - qt[k] * dot;
    }
    // L(q_face)ᵀ columns are rows of the left-multiplication matrix.
    let (pw, px, py, pz) = (q_face.w, q_face.x, q_face.y, q_face.z);
    let l = [
        [pw, -px, -py, -pz],
        [px, pw, -pz, py],
        [py, pz, pw, -px],
        [pz, -py, px, pw],
    ];
    for j in 0..4 {
        grad.rotation_offset[j] = (0..4).map(|i| l[i][j] * projected[i]).sum();
    }

    // Scale: s = clamp(exp(logit), lo, hi); zero gradient when clamped.
    let h_clamp = area.sqrt();
    let hi = MAX_SCALE_FACTOR * h_clamp;
    let up_scale = [upstream.scale.x, upstream.scale.y, upstream.scale.z];
    for k in 0..3 {
        let raw = bg.scale_logits[k].exp();
        grad.scale_logits[k] =
            if raw > MIN_SCALE && raw < hi { up_scale[k] * raw } else { 0.0 };
    }

    // Opacity through the logistic.
    let sigma = logistic(bg.opacity_logit);
    grad.opacity_logit = upstream.opacity * sigma * (1.0 - sigma);

    grad.color = upstream.color;

    Ok(grad)
}

/// Free-function spelling of [`BoundGaussianSet::resolve_backward`].
pub fn resolve_backward(
    set: &BoundGaussianSet,
    index: usize,
    upstream: &UnitGrad,
) -> Result<BindingGrad> {
    set.resolve_backward(index, upstream)
}
