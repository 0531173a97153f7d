use crate::{Result, SimError};
use geom_core::{PinholeCamera, RigidTransform, TriangleMesh, Vec3};
use splat_render::ImageRgb;
use std::sync::Arc;

/// A triangle mesh with per-vertex albedo colors.
#[derive(Debug, Clone)]
pub struct TexturedMesh {
    pub mesh: Arc<TriangleMesh>,
    pub vertex_colors: Vec<[f64; 3]>,
}

impl TexturedMesh {
    pub fn new(mesh: Arc<TriangleMesh>, vertex_colors: Vec<[f64; 3]>) -> Result<Self> {
        if vertex_colors.len() != mesh.vertex_count() {
            return Err(SimError::ColorCountMismatch {
                colors: vertex_colors.len(),
                vertices: mesh.vertex_count(),
            });
        }
        Ok(TexturedMesh { mesh, vertex_colors })
    }

    /// Bounding sphere in the canonical frame, used for soft shadows.
    pub fn bounding_sphere(&self) -> (Vec3, f64) {
        let (lo, hi) = self.mesh.bounds();
        let center = (lo + hi) * 0.5;
        let radius = (hi - lo).norm() * 0.5;
        (center, radius)
    }
}

/// One mesh placed in the world. `flat_color` overrides the vertex colors
/// (the flat-shaded baseline look). Shadow casters darken surfaces below.
#[derive(Debug, Clone)]
pub struct MeshInstance<'a> {
    pub mesh: &'a TexturedMesh,
    pub pose: RigidTransform,
    pub flat_color: Option<[f64; 3]>,
    pub casts_shadow: bool,
}

/// Lambertian shading settings shared by the mesh renderers.
#[derive(Debug, Clone, Copy)]
pub struct ShadingParams {
    /// Unit direction pointing *toward* the light.
    pub light_dir: Vec3,
    pub ambient: f64,
    pub diffuse: f64,
    /// Soft-shadow strength in [0, 1]; zero disables shadows.
    pub shadow_strength: f64,
}

impl Default for ShadingParams {
    fn default() -> Self {
        ShadingParams {
            light_dir: Vec3::new(0.25, -0.15, 1.0).normalized().unwrap(),
            ambient: 0.45,
            diffuse: 0.55,
            shadow_strength: 0.0,
        }
    }
}

impl ShadingParams {
    pub fn with_shadows(strength: f64) -> Self {
        ShadingParams { shadow_strength: strength, ..Default::default() }
    }
}

struct WorldTriangle {
    // screen coordinates plus camera depth per corner
    pts: [(f64, f64, f64); 3],
    colors: [[f64; 3]; 3],
    shade: f64, // Lambertian factor, flat per face
    world: [Vec3; 3],
}

/// Z-buffered rasterization of posed meshes with Gouraud-interpolated
/// albedo, flat Lambertian shading per face, and optional bounding-sphere
/// soft shadows from the casting instances.
pub fn rasterize(
    instances: &[MeshInstance<'_>],
    cam: &PinholeCamera,
    background: [f64; 3],
    shading: &ShadingParams,
) -> ImageRgb {
    let (w, h) = (cam.width, cam.height);
    let mut img = ImageRgb::filled(w, h, background);
    let mut zbuf = vec![f64::INFINITY; (w * h) as usize];
    // Shaded pixels that may receive shadows (world position per pixel).
    let mut world_buf = vec![Vec3::ZERO; (w * h) as usize];
    let mut covered = vec![false; (w * h) as usize];

    // Shadow casters as world-space bounding spheres.
    let casters: Vec<(Vec3, f64)> = if shading.shadow_strength > 0.0 {
        instances
            .iter()
            .filter(|inst| inst.casts_shadow)
            .map(|inst| {
                let (c, r) = inst.mesh.bounding_sphere();
                (inst.pose.apply(c), r)
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut triangles: Vec<WorldTriangle> = Vec::new();
    for inst in instances {
        let mesh = &inst.mesh.mesh;
        for (fi, face) in mesh.faces().iter().enumerate() {
            let wv = [
                inst.pose.apply(mesh.vertices()[face[0]]),
                inst.pose.apply(mesh.vertices()[face[1]]),
                inst.pose.apply(mesh.vertices()[face[2]]),
            ];
            let mut pts = [(0.0, 0.0, 0.0); 3];
            let mut ok = true;
            for (k, p) in wv.iter().enumerate() {
                match cam.project(*p) {
                    Ok(uvd) => pts[k] = uvd,
                    Err(_) => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let normal = inst.pose.rotation.rotate(mesh.normals()[fi]);
            // Two-sided shading: flip the normal toward the camera.
            let view = cam.center() - wv[0];
            let n = if normal.dot(view) < 0.0 { -normal } else { normal };
            let lambert = shading.ambient + shading.diffuse * n.dot(shading.light_dir).max(0.0);

            let colors = match inst.flat_color {
                Some(c) => [c, c, c],
                None => [
                    inst.mesh.vertex_colors[face[0]],
                    inst.mesh.vertex_colors[face[1]],
                    inst.mesh.vertex_colors[face[2]],
                ],
            };
            triangles.push(WorldTriangle { pts, colors, shade: lambert, world: wv });
        }
    }

    for tri in &triangles {
        let [(x0, y0, z0), (x1, y1, z1), (x2, y2, z2)] = tri.pts;
        let min_x = x0.min(x1).min(x2).floor().max(0.0) as i64;
        let max_x = (x0.max(x1).max(x2).ceil() as i64).min(w as i64 - 1);
        let min_y = y0.min(y1).min(y2).floor().max(0.0) as i64;
        let max_y = (y0.max(y1).max(y2).ceil() as i64).min(h as i64 - 1);
        if max_x < min_x || max_y < min_y {
            continue;
        }
        let area = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
        if area.abs() < 1e-12 {
            continue;
        }
        let inv_area = 1.0 / area;
        let inv_z = [1.0 / z0, 1.0 / z1, 1.0 / z2];

        for py in min_y..=max_y {
            let fy = py as f64 + 0.5;
            for px in min_x..=max_x {
                let fx = px as f64 + 0.5;
                // Barycentric coordinates in screen space.
                let w1 = ((fx - x0) * (y2 - y0) - (x2 - x0) * (fy - y0)) * inv_area;
                let w2 = ((x1 - x0) * (fy - y0) - (fx - x0) * (y1 - y0)) * inv_area;
                let w0 = 1.0 - w1 - w2;
                if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                    continue;
                }
                // Perspective-correct interpolation via 1/z.
                let zi = w0 * inv_z[0] + w1 * inv_z[1] + w2 * inv_z[2];
                let depth = 1.0 / zi;
                let idx = (py as u32 * w + px as u32) as usize;
                if depth >= zbuf[idx] {
                    continue;
                }
                zbuf[idx] = depth;
                let b0 = w0 * inv_z[0] * depth;
                let b1 = w1 * inv_z[1] * depth;
                let b2 = w2 * inv_z[2] * depth;
                let color = [
                    b0 * tri.colors[0][0] + b1 * tri.colors[1][0] + b2 * tri.colors[2][0],
                    b0 * tri.colors[0][1] + b1 * tri.colors[1][1] + b2 * tri.colors[2][1],
                    b0 * tri.colors[0][2] + b1 * tri.colors[1][2] + b2 * tri.colors[2][2],
                ];
                img.set_pixel(
                    px as u32,
                    py as u32,
                    [
                        (color[0] * tri.shade).clamp(0.0, 1.0),
                        (color[1] * tri.shade).clamp(0.0, 1.0),
                        (color[2] * tri.shade).clamp(0.0, 1.0),
                    ],
                );
                covered[idx] = true;
                world_buf[idx] = tri.world[0] * b0 + tri.world[1] * b1 + tri.world[2] * b2;
            }
        }
    }

    // Soft shadows: darken covered pixels whose ray toward the light passes
    // near a caster's bounding sphere.
    if shading.shadow_strength > 0.0 && !casters.is_empty() {
        for idx in 0..covered.len() {
            if !covered[idx] {
                continue;
            }
            let p = world_buf[idx];
            let mut occlusion: f64 = 0.0;
            for &(center, radius) in &casters {
                let to_center = center - p;
                let along = to_center.dot(shading.light_dir);
                // Skip the caster itself (surface point inside its sphere)
                // and casters on the dark side.
                if along <= 1e-6 || to_center.norm() < radius * 0.9 {
                    continue;
                }
                let perp = (to_center - shading.light_dir * along).norm();
                let soft_r = radius * 1.4;
                if perp < soft_r {
                    occlusion = occlusion.max(1.0 - perp / soft_r);
                }
            }
            if occlusion > 0.0 {
                let factor = 1.0 - shading.shadow_strength * occlusion;
                let x = (idx as u32) % cam.width;
                let y = (idx as u32) / cam.width;
                let c = img.pixel(x, y);
                img.set_pixel(x, y, [c[0] * factor, c[1] * factor, c[2] * factor]);
            }
        }
    }

    img
}
