//! Foundational geometric types and exact operations shared by the rest of
//! the workspace: vectors, unit quaternions, rigid transforms, triangle
//! meshes and pinhole cameras.
//!
//! Conventions fixed here, once:
//! - Quaternions are stored `(w, x, y, z)`, Hamilton convention.
//! - Cameras look down +z in camera space; the image origin is top-left and
//!   `v` grows downward.
//! - World units are meters.
//!
//! All types are immutable values after construction and can be shared
//! freely between threads.

mod camera;
mod error;
mod mesh;
mod quat;
mod transform;
mod vec3;

pub use camera::{CameraRecord, PinholeCamera};
pub use error::GeomError;
pub use mesh::{FaceFrame, TriangleMesh};
pub use quat::UnitQuaternion;
pub use transform::{apply_transform, compose, RigidTransform};
pub use vec3::Vec3;

/// Result alias used across the crate.
pub type Result<T> = std::result::Result<T, GeomError>;
