//! The linear rig: a gear of radius `r` rolls on a straight rack while a
//! coaxial circle of radius `R` carries the pen. When `r != R` the pen circle
//! rolls and slides along the line at once.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{serde_exact, to_f64, Exact, Frequency};
use crate::kinematics::{Point2, SlideDirection};
use num_traits::{Signed, Zero};

/// Serialized as `{"r":"10","R":"10","omega":"1"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearRigDoc", into = "LinearRigDoc")]
pub struct LinearRig {
    gear_radius: Exact,
    pen_radius: Exact,
    omega: Frequency,
}

#[derive(Serialize, Deserialize)]
struct LinearRigDoc {
    #[serde(with = "serde_exact")]
    r: Exact,
    #[serde(rename = "R", with = "serde_exact")]
    big_r: Exact,
    omega: Frequency,
}

impl TryFrom<LinearRigDoc> for LinearRig {
    type Error = Error;

    fn try_from(doc: LinearRigDoc) -> Result<Self> {
        LinearRig::new(doc.r, doc.big_r, doc.omega)
    }
}

impl From<LinearRig> for LinearRigDoc {
    fn from(rig: LinearRig) -> Self {
        LinearRigDoc {
            r: rig.gear_radius,
            big_r: rig.pen_radius,
            omega: rig.omega,
        }
    }
}

impl LinearRig {
    pub fn new(gear_radius: Exact, pen_radius: Exact, omega: Frequency) -> Result<Self> {
        if gear_radius.is_negative() {
            return Err(Error::InvalidValue("gear radius r must be >= 0".into()));
        }
        if !pen_radius.is_positive() {
            return Err(Error::InvalidValue("pen radius R must be > 0".into()));
        }
        Ok(Self {
            gear_radius,
            pen_radius,
            omega,
        })
    }

    /// Speed form: translation speed `V = r*omega`.
    pub fn from_speed(speed: Exact, pen_radius: Exact, omega: Frequency) -> Result<Self> {
        let gear_radius = speed / omega.value();
        Self::new(gear_radius, pen_radius, omega)
    }

    pub fn gear_radius(&self) -> &Exact {
        &self.gear_radius
    }

    pub fn pen_radius(&self) -> &Exact {
        &self.pen_radius
    }

    pub fn omega(&self) -> &Frequency {
        &self.omega
    }

    /// Translation speed of the axis, `r*omega`.
    pub fn speed(&self) -> Exact {
        &self.gear_radius * self.omega.value()
    }

    pub fn velocity(&self, t: f64) -> Point2 {
        let r = to_f64(&self.gear_radius);
        let big_r = to_f64(&self.pen_radius);
        let w = self.omega.to_f64();
        let (s, c) = (w * t).sin_cos();
        Point2::new(r * w + big_r * w * c, -big_r * w * s)
    }
}

/// `(r*omega*t + R sin(omega*t), R + R cos(omega*t))`.
pub fn linear_pen_position(rig: &LinearRig, t: f64) -> Point2 {
    let r = to_f64(&rig.gear_radius);
    let big_r = to_f64(&rig.pen_radius);
    let w = rig.omega.to_f64();
    let angle = w * t;
    Point2::new(r * w * t + big_r * angle.sin(), big_r + big_r * angle.cos())
}

/// Fraction of the travel that is slip: `(r - R) / r`.
pub fn linear_slide_fraction(rig: &LinearRig) -> Result<Exact> {
    if rig.gear_radius.is_zero() {
        return Err(Error::InvalidValue(
            "slide fraction is undefined for r = 0 (the pen circle spins in place)".into(),
        ));
    }
    Ok((&rig.gear_radius - &rig.pen_radius) / &rig.gear_radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearClass {
    Cycloid,
    TrochoidForward,
    TrochoidBackward,
}

impl LinearClass {
    pub fn slide(self) -> SlideDirection {
        match self {
            LinearClass::Cycloid => SlideDirection::None,
            LinearClass::TrochoidForward => SlideDirection::Forward,
            LinearClass::TrochoidBackward => SlideDirection::Backward,
        }
    }
}

pub fn classify_linear(rig: &LinearRig) -> LinearClass {
    match rig.gear_radius.cmp(&rig.pen_radius) {
        std::cmp::Ordering::Equal => LinearClass::Cycloid,
        std::cmp::Ordering::Greater => LinearClass::TrochoidForward,
        std::cmp::Ordering::Less => LinearClass::TrochoidBackward,
    }
}
