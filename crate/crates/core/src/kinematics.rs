//! The two-tablet machine.
//!
//! Tablet 1 (the turntable) spins about the origin at `big_omega`; tablet 2
//! spins about a fixed lab point at distance `a` at `small_omega`, carrying
//! the pen at radius `b`. The figure is whatever the pen draws on the
//! turntable. With accumulated angles `theta = big_omega*t + phase_table` and
//! `phi = small_omega*t + phase_pen` and the polarization sign `s`:
//!
//! ```text
//! turntable: (a cos theta + b cos(theta + s phi), a sin theta + b sin(theta + s phi))
//! lab:       (a + b cos(s phi), b sin(s phi))
//! ```
//!
//! and the turntable position is the lab position rotated by `theta`.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    exact_int, format_exact, rational_gcd, serde_exact, to_f64, Exact, Frequency,
};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Counterclockwise rotation about the origin.
    pub fn rotated(self, angle: f64) -> Point2 {
        let (sin, cos) = angle.sin_cos();
        Point2::new(self.x * cos - self.y * sin, self.x * sin + self.y * cos)
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;

    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;

    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Relative spin direction of the two tablets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarization {
    /// Same spin direction: hypocycloid family and ellipses.
    Co,
    /// Opposite spin directions: epicycloid family.
    Anti,
}

impl Polarization {
    /// Sign applied to the tablet-2 angle in the position law.
    pub fn sign(self) -> i8 {
        match self {
            Polarization::Anti => 1,
            Polarization::Co => -1,
        }
    }

    pub fn sign_f64(self) -> f64 {
        f64::from(self.sign())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarization::Co => "co",
            Polarization::Anti => "anti",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "co" => Ok(Polarization::Co),
            "anti" => Ok(Polarization::Anti),
            other => Err(Error::Parse(format!(
                "polarization must be \"co\" or \"anti\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Co-rotating with the turntable; where the figure is drawn.
    #[serde(alias = "table")]
    Turntable,
    #[serde(alias = "lab")]
    Laboratory,
}

impl FromStr for Frame {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "table" | "turntable" => Ok(Frame::Turntable),
            "lab" | "laboratory" => Ok(Frame::Laboratory),
            other => Err(Error::Parse(format!(
                "frame must be \"table\" or \"lab\", got {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlideDirection {
    Forward,
    Backward,
    None,
}

/// Full description of the machine's knobs.
///
/// Serialized as a flat document:
/// `{"a":"12","b":"2","omega_table":"3","omega_pen":"15","polarization":"anti","phase_table":0.0,"phase_pen":0.0}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RigDoc", into = "RigDoc")]
pub struct Rig {
    a: Exact,
    b: Exact,
    big_omega: Frequency,
    small_omega: Frequency,
    polarization: Polarization,
    phase_table: f64,
    phase_pen: f64,
}

impl Rig {
    pub fn new(
        a: Exact,
        b: Exact,
        big_omega: Frequency,
        small_omega: Frequency,
        polarization: Polarization,
    ) -> Result<Self> {
        Self::with_phases(a, b, big_omega, small_omega, polarization, 0.0, 0.0)
    }

    pub fn with_phases(
        a: Exact,
        b: Exact,
        big_omega: Frequency,
        small_omega: Frequency,
        polarization: Polarization,
        phase_table: f64,
        phase_pen: f64,
    ) -> Result<Self> {
        validate_lengths(&a, &b)?;
        let phase_table = normalize_phase(phase_table)?;
        let phase_pen = normalize_phase(phase_pen)?;
        Ok(Self {
            a,
            b,
            big_omega,
            small_omega,
            polarization,
            phase_table,
            phase_pen,
        })
    }

    /// Shorthand for integer-valued rigs.
    pub fn from_ints(
        a: i64,
        b: i64,
        big_omega: i64,
        small_omega: i64,
        polarization: Polarization,
    ) -> Result<Self> {
        Self::new(
            exact_int(a),
            exact_int(b),
            Frequency::integer(big_omega)?,
            Frequency::integer(small_omega)?,
            polarization,
        )
    }

    pub fn a(&self) -> &Exact {
        &self.a
    }

    pub fn b(&self) -> &Exact {
        &self.b
    }

    pub fn big_omega(&self) -> &Frequency {
        &self.big_omega
    }

    pub fn small_omega(&self) -> &Frequency {
        &self.small_omega
    }

    pub fn polarization(&self) -> Polarization {
        self.polarization
    }

    pub fn phase_table(&self) -> f64 {
        self.phase_table
    }

    pub fn phase_pen(&self) -> f64 {
        self.phase_pen
    }

    pub fn with_a(&self, a: Exact) -> Result<Self> {
        validate_lengths(&a, &self.b)?;
        Ok(Self { a, ..self.clone() })
    }

    pub fn with_b(&self, b: Exact) -> Result<Self> {
        validate_lengths(&self.a, &b)?;
        Ok(Self { b, ..self.clone() })
    }

    pub fn with_big_omega(&self, big_omega: Frequency) -> Self {
        Self {
            big_omega,
            ..self.clone()
        }
    }

    pub fn with_small_omega(&self, small_omega: Frequency) -> Self {
        Self {
            small_omega,
            ..self.clone()
        }
    }

    pub fn with_polarization(&self, polarization: Polarization) -> Self {
        Self {
            polarization,
            ..self.clone()
        }
    }

    /// Floating-point view used for sampling.
    pub fn numeric(&self) -> NumericRig {
        NumericRig {
            a: to_f64(&self.a),
            b: to_f64(&self.b),
            big_omega: self.big_omega.to_f64(),
            small_omega: self.small_omega.to_f64(),
            sign: self.polarization.sign_f64(),
            phase_table: self.phase_table,
            phase_pen: self.phase_pen,
        }
    }

    /// Angular frequency of the `theta + s*phi` term: `big_omega + s*small_omega`.
    pub fn combined_omega(&self) -> Exact {
        match self.polarization {
            Polarization::Anti => self.big_omega.value() + self.small_omega.value(),
            Polarization::Co => self.big_omega.value() - self.small_omega.value(),
        }
    }
}

fn validate_lengths(a: &Exact, b: &Exact) -> Result<()> {
    if a.is_negative() || b.is_negative() {
        return Err(Error::InvalidValue(format!(
            "lengths must be non-negative (a = {}, b = {})",
            format_exact(a),
            format_exact(b)
        )));
    }
    if a.is_zero() && b.is_zero() {
        return Err(Error::InvalidValue("a and b cannot both be zero".into()));
    }
    Ok(())
}

/// Wrap a phase into `[0, 2pi)`.
fn normalize_phase(phase: f64) -> Result<f64> {
    if !phase.is_finite() {
        return Err(Error::InvalidValue(format!("phase must be finite, got {phase}")));
    }
    let wrapped = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    Ok(if wrapped >= TAU { 0.0 } else { wrapped })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RigDoc {
    #[serde(with = "serde_exact")]
    a: Exact,
    #[serde(with = "serde_exact")]
    b: Exact,
    omega_table: Frequency,
    omega_pen: Frequency,
    polarization: Polarization,
    #[serde(default)]
    phase_table: f64,
    #[serde(default)]
    phase_pen: f64,
}

impl TryFrom<RigDoc> for Rig {
    type Error = Error;

    fn try_from(doc: RigDoc) -> Result<Self> {
        Rig::with_phases(
            doc.a,
            doc.b,
            doc.omega_table,
            doc.omega_pen,
            doc.polarization,
            doc.phase_table,
            doc.phase_pen,
        )
    }
}

impl From<Rig> for RigDoc {
    fn from(rig: Rig) -> Self {
        RigDoc {
            a: rig.a,
            b: rig.b,
            omega_table: rig.big_omega,
            omega_pen: rig.small_omega,
            polarization: rig.polarization,
            phase_table: rig.phase_table,
            phase_pen: rig.phase_pen,
        }
    }
}

/// A rig converted to floats once, for tight sampling loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericRig {
    pub a: f64,
    pub b: f64,
    pub big_omega: f64,
    pub small_omega: f64,
    pub sign: f64,
    pub phase_table: f64,
    pub phase_pen: f64,
}

impl NumericRig {
    pub fn angles_at(&self, t: f64) -> (f64, f64) {
        (
            self.big_omega * t + self.phase_table,
            self.small_omega * t + self.phase_pen,
        )
    }

    pub fn table_from_angles(&self, theta: f64, phi: f64) -> Point2 {
        table_point(self.a, self.b, self.sign, theta, phi)
    }

    pub fn lab_from_angles(&self, phi: f64) -> Point2 {
        lab_point(self.a, self.b, self.sign, phi)
    }

    pub fn table_at(&self, t: f64) -> Point2 {
        let (theta, phi) = self.angles_at(t);
        self.table_from_angles(theta, phi)
    }

    pub fn lab_at(&self, t: f64) -> Point2 {
        let (_, phi) = self.angles_at(t);
        self.lab_from_angles(phi)
    }

    pub fn at(&self, frame: Frame, t: f64) -> Point2 {
        match frame {
            Frame::Turntable => self.table_at(t),
            Frame::Laboratory => self.lab_at(t),
        }
    }

    /// Time derivative of the pen position in the given frame.
    pub fn velocity(&self, frame: Frame, t: f64) -> Point2 {
        let (theta, phi) = self.angles_at(t);
        let combined_rate = self.big_omega + self.sign * self.small_omega;
        let pen_angle = theta + self.sign * phi;
        match frame {
            Frame::Turntable => {
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = pen_angle.sin_cos();
                Point2::new(
                    -self.a * self.big_omega * st - self.b * combined_rate * sp,
                    self.a * self.big_omega * ct + self.b * combined_rate * cp,
                )
            }
            Frame::Laboratory => {
                let rate = self.sign * self.small_omega;
                let (sp, cp) = (self.sign * phi).sin_cos();
                Point2::new(-self.b * rate * sp, self.b * rate * cp)
            }
        }
    }
}

/// Turntable-frame pen position from accumulated angles.
pub fn table_point(a: f64, b: f64, sign: f64, theta: f64, phi: f64) -> Point2 {
    let pen_angle = theta + sign * phi;
    Point2::new(
        a * theta.cos() + b * pen_angle.cos(),
        a * theta.sin() + b * pen_angle.sin(),
    )
}

/// Lab-frame pen position: tablet 2 is centered at `(a, 0)`.
pub fn lab_point(a: f64, b: f64, sign: f64, phi: f64) -> Point2 {
    let angle = sign * phi;
    Point2::new(a + b * angle.cos(), b * angle.sin())
}

pub fn pen_position_turntable(rig: &Rig, t: f64) -> Point2 {
    rig.numeric().table_at(t)
}

pub fn pen_position_lab(rig: &Rig, t: f64) -> Point2 {
    rig.numeric().lab_at(t)
}

/// Express a lab-frame point in turntable coordinates when the turntable
/// has turned through `angle`.
pub fn lab_to_table(p: Point2, angle: f64) -> Point2 {
    p.rotated(angle)
}

pub fn table_to_lab(p: Point2, angle: f64) -> Point2 {
    p.rotated(-angle)
}

/// Signed slip speed between the two virtual circles. Zero exactly when the
/// pen circle rolls without sliding.
///
/// Anti: `(a - b)*Omega - b*omega`. Co: `(a + b)*Omega - b*omega`.
pub fn rolling_residual(rig: &Rig) -> Exact {
    let big = rig.big_omega.value();
    let small = rig.small_omega.value();
    let arm = match rig.polarization {
        Polarization::Anti => &rig.a - &rig.b,
        Polarization::Co => &rig.a + &rig.b,
    };
    arm * big - &rig.b * small
}

/// Pure-rolling anti-polarized rig tracing an epicycloid with `n_e` cusps.
pub fn design_epicycloid(a: Exact, n_e: u32, omega: Frequency) -> Result<Rig> {
    if n_e == 0 {
        return Err(Error::InvalidValue("n_e must be at least 1".into()));
    }
    if !a.is_positive() {
        return Err(Error::InvalidValue("a must be positive".into()));
    }
    let n = exact_int(i64::from(n_e));
    let b = &a / (&n + Exact::one());
    let big_omega = Frequency::new(omega.value() / &n)?;
    Rig::new(a, b, big_omega, omega, Polarization::Anti)
}

/// Pure-rolling co-polarized rig tracing a hypocycloid with `n_h` cusps.
/// `n_h = 2` is the straight-line case `a = b`.
pub fn design_hypocycloid(a: Exact, n_h: u32, omega: Frequency) -> Result<Rig> {
    if n_h < 2 {
        return Err(Error::InvalidValue(format!(
            "n_h must be at least 2, got {n_h}"
        )));
    }
    if !a.is_positive() {
        return Err(Error::InvalidValue("a must be positive".into()));
    }
    let n = exact_int(i64::from(n_h));
    let b = &a / (&n - Exact::one());
    let big_omega = Frequency::new(omega.value() / &n)?;
    Rig::new(a, b, big_omega, omega, Polarization::Co)
}

/// Smallest positive time after which the traced figure repeats, stored as
/// an exact multiple of `2pi` seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosurePeriod {
    #[serde(with = "serde_exact")]
    pub over_two_pi: Exact,
}

impl ClosurePeriod {
    pub fn seconds(&self) -> f64 {
        TAU * to_f64(&self.over_two_pi)
    }
}

/// Both `theta` and `theta + s*phi` must complete whole turns, so the period
/// is `2pi / gcd(Omega, |Omega + s*omega|)` over the rationals.
pub fn closure_period(rig: &Rig) -> ClosurePeriod {
    let base = rational_gcd(rig.big_omega.value(), &rig.combined_omega());
    ClosurePeriod {
        over_two_pi: base.recip(),
    }
}

/// What the pen draws on the turntable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum CurveClass {
    /// `n` is `omega/Omega`; a non-integral `n` marks a rolling ratio whose
    /// figure closes only after several turntable turns.
    Epicycloid {
        #[serde(with = "serde_cusp_ratio")]
        n: Exact,
    },
    Hypocycloid {
        #[serde(with = "serde_cusp_ratio")]
        n: Exact,
    },
    Epitrochoid {
        slide: SlideDirection,
    },
    Hypotrochoid {
        slide: SlideDirection,
    },
    Ellipse {
        semi_major: f64,
        semi_minor: f64,
        eccentricity: f64,
    },
    LineSegment {
        half_length: f64,
    },
    Circle {
        radius: f64,
    },
}

impl CurveClass {
    pub fn tag(&self) -> &'static str {
        match self {
            CurveClass::Epicycloid { .. } => "epicycloid",
            CurveClass::Hypocycloid { .. } => "hypocycloid",
            CurveClass::Epitrochoid { .. } => "epitrochoid",
            CurveClass::Hypotrochoid { .. } => "hypotrochoid",
            CurveClass::Ellipse { .. } => "ellipse",
            CurveClass::LineSegment { .. } => "line_segment",
            CurveClass::Circle { .. } => "circle",
        }
    }

    /// Cusp count for integral rolling cases.
    pub fn cusps(&self) -> Option<u64> {
        use num_traits::ToPrimitive;
        match self {
            CurveClass::Epicycloid { n } | CurveClass::Hypocycloid { n } if n.is_integer() => {
                n.to_integer().to_u64()
            }
            _ => None,
        }
    }

    /// Fixed-key-order JSON for the CLI and golden tests.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("curve class serializes")
    }
}

/// Integral `n` is written as a JSON number, fractional `n` as `"p/q"`.
mod serde_cusp_ratio {
    use super::*;
    use num_bigint::BigInt;
    use num_traits::ToPrimitive;
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Exact, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match value.to_integer().to_u64() {
            Some(n) if value.is_integer() => serializer.serialize_u64(n),
            _ => serializer.serialize_str(&format_exact(value)),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Exact, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Ok(Exact::from_integer(BigInt::from(n))),
            Raw::Text(s) => crate::exact::parse_fraction(&s).map_err(de::Error::custom),
        }
    }
}

pub const DEFAULT_CLASSIFY_TOLERANCE: f64 = 1e-9;

/// Classify the rig's turntable figure. `tol` is relative to the tangential
/// speed scale `b*omega`.
pub fn classify(rig: &Rig, tol: f64) -> Result<CurveClass> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidValue(format!(
            "tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let a = to_f64(&rig.a);
    let b = to_f64(&rig.b);
    if rig.a.is_zero() {
        return Ok(CurveClass::Circle { radius: b });
    }
    if rig.b.is_zero() {
        return Ok(CurveClass::Circle { radius: a });
    }

    let two = exact_int(2);
    if rig.polarization == Polarization::Co
        && rig.small_omega.value() == &(rig.big_omega.value() * &two)
    {
        if rig.a == rig.b {
            return Ok(CurveClass::LineSegment { half_length: a + b });
        }
        let spec = crate::ellipse::ellipse_from_rig(rig)?;
        return Ok(CurveClass::Ellipse {
            semi_major: spec.semi_major,
            semi_minor: spec.semi_minor,
            eccentricity: spec.eccentricity,
        });
    }

    let residual = rolling_residual(rig);
    let speed_scale = b * rig.small_omega.to_f64();
    let rolling = residual.is_zero() || to_f64(&residual).abs() <= tol * speed_scale;
    if rolling {
        let n = rig.small_omega.value() / rig.big_omega.value();
        return Ok(match rig.polarization {
            Polarization::Anti => CurveClass::Epicycloid { n },
            Polarization::Co => CurveClass::Hypocycloid { n },
        });
    }

    let slide = if residual.is_positive() {
        SlideDirection::Forward
    } else {
        SlideDirection::Backward
    };
    Ok(match rig.polarization {
        Polarization::Anti => CurveClass::Epitrochoid { slide },
        Polarization::Co => CurveClass::Hypotrochoid { slide },
    })
}
