use crate::env::{EnvConfig, ObjectAsset, SceneAssets, TabletopEnv, Task};
use crate::raster::TexturedMesh;
use geom_core::{TriangleMesh, Vec3};
use std::sync::Arc;

/// Axis-aligned box with its base at z = 0, centered in (x, y).
pub fn box_mesh(half_x: f64, half_y: f64, height: f64) -> Arc<TriangleMesh> {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let vertices = vec![
        v(-half_x, -half_y, 0.0),
        v(half_x, -half_y, 0.0),
        v(half_x, half_y, 0.0),
        v(-half_x, half_y, 0.0),
        v(-half_x, -half_y, height),
        v(half_x, -half_y, height),
        v(half_x, half_y, height),
        v(-half_x, half_y, height),
    ];
    let faces = vec![
        [0, 2, 1],
        [0, 3, 2], // bottom
        [4, 5, 6],
        [4, 6, 7], // top
        [0, 1, 5],
        [0, 5, 4], // -y
        [1, 2, 6],
        [1, 6, 5], // +x
        [2, 3, 7],
        [2, 7, 6], // +y
        [3, 0, 4],
        [3, 4, 7], // -x
    ];
    Arc::new(TriangleMesh::new(vertices, faces).unwrap())
}

pub fn test_assets() -> SceneAssets {
    let table_mesh = box_mesh(0.32, 0.32, 0.002);
    // Shift the table so its top sits at z = 0.
    let shifted = table_mesh
        .with_vertices(
            table_mesh.vertices().iter().map(|v| *v - Vec3::new(0.0, 0.0, 0.002)).collect(),
        )
        .unwrap();
    let table_mesh = Arc::new(shifted);
    let table =
        TexturedMesh::new(table_mesh.clone(), vec![[0.7, 0.68, 0.62]; table_mesh.vertex_count()])
            .unwrap();

    let cube_mesh = box_mesh(0.02, 0.02, 0.04);
    let cube =
        TexturedMesh::new(cube_mesh.clone(), vec![[0.85, 0.15, 0.1]; cube_mesh.vertex_count()])
            .unwrap();

    let plate_mesh = box_mesh(0.075, 0.075, 0.01);
    let plate =
        TexturedMesh::new(plate_mesh.clone(), vec![[0.9, 0.9, 0.95]; plate_mesh.vertex_count()])
            .unwrap();

    SceneAssets {
        table,
        table_flat_color: [0.5, 0.5, 0.5],
        objects: vec![
            ObjectAsset {
                name: "cube".into(),
                textured: cube,
                flat_color: [1.0, 0.0, 0.0],
                grasp_center: Vec3::new(0.0, 0.0, 0.02),
                movable: true,
            },
            ObjectAsset {
                name: "plate".into(),
                textured: plate,
                flat_color: [0.0, 0.0, 1.0],
                grasp_center: Vec3::new(0.0, 0.0, 0.005),
                movable: false,
            },
        ],
    }
}

pub fn grasp_env() -> TabletopEnv {
    TabletopEnv::new(EnvConfig::default(), test_assets()).unwrap()
}

pub fn pickplace_env() -> TabletopEnv {
    let config =
        EnvConfig { task: Task::PickPlace { target: "cube".into() }, ..Default::default() };
    TabletopEnv::new(config, test_assets()).unwrap()
}
