//! Simulation of a two-tablet drawing machine: a pen on a spinning tablet
//! draws on a spinning turntable, producing epicycloids, hypocycloids,
//! trochoids and ellipses depending on the knob settings.
//!
//! Lengths and frequencies are exact rationals; positions are `f64`.

pub mod api;
pub mod ellipse;
pub mod error;
pub mod exact;
pub mod kinematics;
pub mod linear;
pub mod machine;
pub mod render;
pub mod sliding;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{Exact, Frequency};
pub use kinematics::{classify, closure_period, CurveClass, Frame, Point2, Polarization, Rig};
