//! Environments usable by the trainer: the point-mass reach sanity task and
//! the tabletop adapter.

mod point_mass;
mod tabletop;

pub use point_mass::PointMassEnv;
pub use tabletop::TabletopGymEnv;
