//! Ellipses drawn by a co-polarized rig running at `omega_pen = 2*omega_table`.
//!
//! With that ratio the pen traces `((a+b) cos Ωt, (a-b) sin Ωt)`, so the
//! semi-axes are `a+b` and `|a-b|`. Equal arms collapse the ellipse onto a
//! line segment; a zero center distance (or a zero pen radius) gives a
//! circle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{exact_int, to_f64};
use crate::kinematics::{Point2, Polarization, Rig};
use num_traits::Zero;

/// Note that `semi_major` here is an ellipse axis and has nothing to do with
/// the perturbed center distance used by the sliding operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseSpec {
    #[serde(rename = "A")]
    pub semi_major: f64,
    #[serde(rename = "B")]
    pub semi_minor: f64,
    #[serde(rename = "e")]
    pub eccentricity: f64,
}

/// Degenerate outcomes of an ellipse-generating rig.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Degenerate {
    /// `a = b`: the pen oscillates along the rotating x axis.
    LineSegment { half_length: f64 },
    /// `a = 0` or `b = 0`.
    Circle { radius: f64 },
}

impl EllipseSpec {
    /// Build from semi-axes; `eccentricity = sqrt(1 - B²/A²)`.
    pub fn from_axes(semi_major: f64, semi_minor: f64) -> Result<Self> {
        if !(semi_minor > 0.0 && semi_major >= semi_minor && semi_major.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "ellipse axes need A >= B > 0, got A = {semi_major}, B = {semi_minor}"
            )));
        }
        let ratio = semi_minor / semi_major;
        Ok(Self {
            semi_major,
            semi_minor,
            eccentricity: (1.0 - ratio * ratio).sqrt(),
        })
    }

    /// Build from the semi-major axis and eccentricity; `B = A sqrt(1 - e²)`.
    pub fn from_eccentricity(semi_major: f64, eccentricity: f64) -> Result<Self> {
        if !(semi_major > 0.0 && (0.0..1.0).contains(&eccentricity)) {
            return Err(Error::InvalidValue(format!(
                "need A > 0 and 0 <= e < 1, got A = {semi_major}, e = {eccentricity}"
            )));
        }
        Ok(Self {
            semi_major,
            semi_minor: semi_major * (1.0 - eccentricity * eccentricity).sqrt(),
            eccentricity,
        })
    }

    /// Distance from the center to either focus.
    pub fn focal_distance(&self) -> f64 {
        self.semi_major * self.eccentricity
    }

    pub fn foci(&self) -> (Point2, Point2) {
        let c = self.focal_distance();
        (Point2::new(c, 0.0), Point2::new(-c, 0.0))
    }
}

pub fn ellipse_from_rig(rig: &Rig) -> Result<EllipseSpec> {
    let doubled = rig.big_omega().value() * exact_int(2);
    if rig.polarization() != Polarization::Co || rig.small_omega().value() != &doubled {
        return Err(Error::NotEllipseRig);
    }
    let a = to_f64(rig.a());
    let b = to_f64(rig.b());
    if rig.a().is_zero() {
        return Err(Error::Degenerate(Degenerate::Circle { radius: b }));
    }
    if rig.b().is_zero() {
        return Err(Error::Degenerate(Degenerate::Circle { radius: a }));
    }
    if rig.a() == rig.b() {
        return Err(Error::Degenerate(Degenerate::LineSegment { half_length: a + b }));
    }
    let semi_minor = to_f64(&(rig.a() - rig.b())).abs();
    EllipseSpec::from_axes(a + b, semi_minor)
}

/// Radius measured from the focus at `(+Ae, 0)`, with the polar angle taken
/// from the +x direction: `A(1 - e²) / (1 + e cos ϑ)`.
pub fn ellipse_polar_focal(spec: &EllipseSpec, angle: f64) -> f64 {
    let e = spec.eccentricity;
    spec.semi_major * (1.0 - e * e) / (1.0 + e * angle.cos())
}

/// Point on the ellipse generated by [`ellipse_polar_focal`].
pub fn focal_polar_point(spec: &EllipseSpec, angle: f64) -> Point2 {
    let r = ellipse_polar_focal(spec, angle);
    let (focus, _) = spec.foci();
    focus + Point2::new(r * angle.cos(), r * angle.sin())
}

/// Radius measured from the center: `A sqrt((1 - e²) / (1 - e² cos²ϑ))`.
/// This `ϑ` is the central polar angle, unrelated to the focal one.
pub fn ellipse_polar_centered(spec: &EllipseSpec, angle: f64) -> f64 {
    let e2 = spec.eccentricity * spec.eccentricity;
    let c = angle.cos();
    spec.semi_major * ((1.0 - e2) / (1.0 - e2 * c * c)).sqrt()
}

/// `|x²/A² + y²/B² - 1|`.
pub fn on_ellipse_residual(p: Point2, spec: &EllipseSpec) -> f64 {
    let u = p.x / spec.semi_major;
    let v = p.y / spec.semi_minor;
    (u * u + v * v - 1.0).abs()
}
