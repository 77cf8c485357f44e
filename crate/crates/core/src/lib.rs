//! Guiding-center dynamics as motion on a slow manifold in loop space.
//!
//! A charged particle in a strong magnetic field is lifted to a loop of
//! particles that is transported by the Lorentz flow while being spun in
//! phase. The loop splits into slow variables (mean position, parallel
//! velocity, adiabatic velocity, scaled phase) and fast fluctuations; the
//! slow manifold of that split carries guiding-center motion. The crate
//! also contains a full-orbit Lorentz integrator used as the reference
//! for every reduced quantity.

pub mod config;
pub mod error;
pub mod experiments;
pub mod fastslow;
pub mod fields;
pub mod fit;
pub mod guiding_center;
pub mod hamiltonian;
pub mod loopspace;
pub mod lorentz;
pub mod sampling;
pub mod slow_manifold;
pub mod spectral;

pub use error::{Error, Result};
pub use fields::{frame, FieldModel, FrameData, MagneticField, Mat3, Vec3};
