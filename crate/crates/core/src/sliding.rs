//! Controlled sliding.
//!
//! Starting from a pure-rolling rig, sliding is introduced either by moving
//! the tablet axes apart or together (`Stcp`, perturbs `a`) or by speeding up
//! or slowing down the turntable (`Stcf`, perturbs `Omega`). Either way the
//! pen circle slips along the base circle at a uniform rate, reported here in
//! cm per radian of turntable rotation.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    format_exact, parse_decimal_or_fraction, parse_fraction, serde_exact, to_f64, Exact,
    Frequency,
};
use crate::kinematics::{
    pen_position_turntable, rolling_residual, table_point, Point2, Rig, SlideDirection,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SlideMethod {
    /// Change the center distance `a`.
    Stcp,
    /// Change the turntable frequency `Omega`.
    Stcf,
}

impl FromStr for SlideMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stcp" => Ok(SlideMethod::Stcp),
            "stcf" => Ok(SlideMethod::Stcf),
            other => Err(Error::Parse(format!("method must be stcp or stcf, got {other:?}"))),
        }
    }
}

impl fmt::Display for SlideMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SlideMethod::Stcp => "stcp",
            SlideMethod::Stcf => "stcf",
        })
    }
}

/// Direction of an applied slide. Unlike [`SlideDirection`] it has no
/// neutral value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Forward,
    Backward,
}

impl Sense {
    /// `+magnitude` forward, `-magnitude` backward.
    pub fn apply(self, magnitude: &Exact) -> Exact {
        match self {
            Sense::Forward => magnitude.clone(),
            Sense::Backward => -magnitude.clone(),
        }
    }

    pub fn sign_f64(self) -> f64 {
        match self {
            Sense::Forward => 1.0,
            Sense::Backward => -1.0,
        }
    }
}

impl From<Sense> for SlideDirection {
    fn from(sense: Sense) -> Self {
        match sense {
            Sense::Forward => SlideDirection::Forward,
            Sense::Backward => SlideDirection::Backward,
        }
    }
}

/// Serialized as `{"method":"stcp","magnitude":"1/2","direction":"forward"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SlideOpDoc", into = "SlideOpDoc")]
pub struct SlideOp {
    method: SlideMethod,
    magnitude: Exact,
    direction: Sense,
}

impl SlideOp {
    pub fn new(method: SlideMethod, magnitude: Exact, direction: Sense) -> Result<Self> {
        if !magnitude.is_positive() {
            return Err(Error::InvalidValue(format!(
                "slide magnitude must be positive, got {}",
                format_exact(&magnitude)
            )));
        }
        Ok(Self {
            method,
            magnitude,
            direction,
        })
    }

    pub fn stcp(delta_a: Exact, direction: Sense) -> Result<Self> {
        Self::new(SlideMethod::Stcp, delta_a, direction)
    }

    pub fn stcf(delta_omega: Exact, direction: Sense) -> Result<Self> {
        Self::new(SlideMethod::Stcf, delta_omega, direction)
    }

    /// From a signed step: positive is forward, negative backward.
    pub fn from_signed(method: SlideMethod, step: &Exact) -> Result<Self> {
        let direction = if step.is_negative() { Sense::Backward } else { Sense::Forward };
        Self::new(method, step.abs(), direction)
    }

    pub fn method(&self) -> SlideMethod {
        self.method
    }

    pub fn magnitude(&self) -> &Exact {
        &self.magnitude
    }

    pub fn direction(&self) -> Sense {
        self.direction
    }

    pub fn signed_magnitude(&self) -> Exact {
        self.direction.apply(&self.magnitude)
    }

    /// Apply with whichever operator matches the method.
    pub fn apply(&self, rig: &Rig) -> Result<Rig> {
        match self.method {
            SlideMethod::Stcp => apply_stcp(rig, self),
            SlideMethod::Stcf => apply_stcf(rig, self),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SlideOpDoc {
    method: SlideMethod,
    magnitude: String,
    direction: Sense,
}

impl TryFrom<SlideOpDoc> for SlideOp {
    type Error = Error;

    fn try_from(doc: SlideOpDoc) -> Result<Self> {
        let magnitude = match doc.method {
            SlideMethod::Stcp => parse_decimal_or_fraction(&doc.magnitude)?,
            // frequency steps must keep the rig commensurable
            SlideMethod::Stcf => parse_fraction(&doc.magnitude)?,
        };
        SlideOp::new(doc.method, magnitude, doc.direction)
    }
}

impl From<SlideOp> for SlideOpDoc {
    fn from(op: SlideOp) -> Self {
        SlideOpDoc {
            method: op.method,
            magnitude: format_exact(&op.magnitude),
            direction: op.direction,
        }
    }
}

/// `a -> a ± Δa`, all other knobs unchanged.
pub fn apply_stcp(rig: &Rig, op: &SlideOp) -> Result<Rig> {
    if op.method != SlideMethod::Stcp {
        return Err(Error::WrongMethod { expected: "stcp" });
    }
    let a = rig.a() + op.signed_magnitude();
    if a.is_negative() {
        return Err(Error::InvalidValue(format!(
            "backward slide of {} would make a negative (a = {})",
            format_exact(&op.magnitude),
            format_exact(rig.a())
        )));
    }
    rig.with_a(a)
}

/// `Omega -> Omega ± ΔOmega`, all other knobs unchanged.
pub fn apply_stcf(rig: &Rig, op: &SlideOp) -> Result<Rig> {
    if op.method != SlideMethod::Stcf {
        return Err(Error::WrongMethod { expected: "stcf" });
    }
    let omega = rig.big_omega().value() + op.signed_magnitude();
    Ok(rig.with_big_omega(Frequency::new(omega)?))
}

/// Slip between the pen circle and the base circle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideReport {
    /// Slip speed, cm/s.
    #[serde(with = "serde_exact")]
    pub delta_v: Exact,
    /// Slip per radian of turntable rotation, cm/rad.
    #[serde(with = "serde_exact")]
    pub rate_per_radian: Exact,
    /// Slip per turntable revolution, cm. Always `2pi * rate_per_radian`.
    pub delta_s: f64,
    pub direction: SlideDirection,
}

impl SlideReport {
    /// The slip speed divided by the turntable frequency of the perturbed rig.
    fn from_perturbed(perturbed: &Rig) -> Self {
        let delta_v = rolling_residual(perturbed);
        let rate_per_radian = &delta_v / perturbed.big_omega().value();
        let direction = if rate_per_radian.is_zero() {
            SlideDirection::None
        } else if rate_per_radian.is_positive() {
            SlideDirection::Forward
        } else {
            SlideDirection::Backward
        };
        SlideReport {
            delta_s: TAU * to_f64(&rate_per_radian),
            delta_v,
            rate_per_radian,
            direction,
        }
    }
}

fn require_pure_rolling(base: &Rig) -> Result<()> {
    let residual = rolling_residual(base);
    if residual.is_zero() {
        Ok(())
    } else {
        Err(Error::NotPureRolling(format_exact(&residual)))
    }
}

fn differing_fields(base: &Rig, perturbed: &Rig) -> Vec<&'static str> {
    let mut fields = Vec::new();
    if base.a() != perturbed.a() {
        fields.push("a");
    }
    if base.b() != perturbed.b() {
        fields.push("b");
    }
    if base.big_omega() != perturbed.big_omega() {
        fields.push("omega_table");
    }
    if base.small_omega() != perturbed.small_omega() {
        fields.push("omega_pen");
    }
    if base.polarization() != perturbed.polarization() {
        fields.push("polarization");
    }
    if base.phase_table() != perturbed.phase_table() {
        fields.push("phase_table");
    }
    if base.phase_pen() != perturbed.phase_pen() {
        fields.push("phase_pen");
    }
    fields
}

fn require_only(base: &Rig, perturbed: &Rig, allowed: &str) -> Result<()> {
    let extra: Vec<_> = differing_fields(base, perturbed)
        .into_iter()
        .filter(|f| *f != allowed)
        .collect();
    if extra.is_empty() {
        Ok(())
    } else {
        Err(Error::PerturbationMismatch(extra.join(", ")))
    }
}

/// Slip of a center-distance perturbation. The rate per radian comes out as
/// exactly `±Δa`.
pub fn slide_report_stcp(base: &Rig, perturbed: &Rig) -> Result<SlideReport> {
    require_pure_rolling(base)?;
    require_only(base, perturbed, "a")?;
    Ok(SlideReport::from_perturbed(perturbed))
}

/// Slip of a turntable-frequency perturbation:
/// `b*omega*(Omega' - Omega) / (Omega*Omega')` per radian.
pub fn slide_report_stcf(base: &Rig, perturbed: &Rig) -> Result<SlideReport> {
    require_pure_rolling(base)?;
    require_only(base, perturbed, "omega_table")?;
    Ok(SlideReport::from_perturbed(perturbed))
}

/// Instantaneous configuration of the machine: knob lengths plus the two
/// accumulated spin angles. Rolling and sliding act on it as operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub a: f64,
    pub b: f64,
    pub sign: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Pose {
    pub fn initial(rig: &Rig) -> Self {
        let n = rig.numeric();
        Self {
            a: n.a,
            b: n.b,
            sign: n.sign,
            theta: n.phase_table,
            phi: n.phase_pen,
        }
    }

    pub fn position(&self) -> Point2 {
        table_point(self.a, self.b, self.sign, self.theta, self.phi)
    }

    /// Both tablets spin for `dt` at the given rates.
    pub fn roll(self, big_omega: f64, small_omega: f64, dt: f64) -> Self {
        Self {
            theta: self.theta + big_omega * dt,
            phi: self.phi + small_omega * dt,
            ..self
        }
    }

    /// Translate the tablet-2 center along the center line; angles frozen.
    pub fn slide_center(self, delta_a: f64) -> Self {
        Self {
            a: self.a + delta_a,
            ..self
        }
    }

    /// Turn the turntable alone through `angle` while tablet 2 holds still.
    pub fn slide_turntable(self, angle: f64) -> Self {
        Self {
            theta: self.theta + angle,
            ..self
        }
    }
}

/// Roll through `t`, then translate tablet 2 by `±Δa`.
pub fn roll_then_slide_stcp(rig: &Rig, t: f64, direction: Sense, delta_a: &Exact) -> Result<Point2> {
    check_stcp_slide(rig, direction, delta_a)?;
    let n = rig.numeric();
    let shift = direction.sign_f64() * to_f64(delta_a);
    Ok(Pose::initial(rig)
        .roll(n.big_omega, n.small_omega, t)
        .slide_center(shift)
        .position())
}

/// Translate tablet 2 by `±Δa`, then roll through `t`.
pub fn slide_then_roll_stcp(rig: &Rig, t: f64, direction: Sense, delta_a: &Exact) -> Result<Point2> {
    check_stcp_slide(rig, direction, delta_a)?;
    let n = rig.numeric();
    let shift = direction.sign_f64() * to_f64(delta_a);
    Ok(Pose::initial(rig)
        .slide_center(shift)
        .roll(n.big_omega, n.small_omega, t)
        .position())
}

fn check_stcp_slide(rig: &Rig, direction: Sense, delta_a: &Exact) -> Result<()> {
    if delta_a.is_negative() {
        return Err(Error::InvalidValue("Δa must not be negative".into()));
    }
    if (rig.a() + direction.apply(delta_a)).is_negative() {
        return Err(Error::InvalidValue("slide would make a negative".into()));
    }
    Ok(())
}

/// Distance between the two orders of rolling and sliding.
///
/// For STCP the slide is a translation of tablet 2 by the op's signed
/// magnitude and `t2` is unused. For STCF the slide turns the turntable
/// alone through `Omega' * t2`, with `Omega'` the perturbed frequency.
pub fn commutator_residual(rig: &Rig, op: &SlideOp, t1: f64, t2: f64) -> Result<f64> {
    let n = rig.numeric();
    let start = Pose::initial(rig);
    let roll = |p: Pose| p.roll(n.big_omega, n.small_omega, t1);
    let (rs, sr) = match op.method() {
        SlideMethod::Stcp => {
            let shift = to_f64(&op.signed_magnitude());
            (
                roll(start).slide_center(shift),
                roll(start.slide_center(shift)),
            )
        }
        SlideMethod::Stcf => {
            let perturbed = apply_stcf(rig, op)?;
            let angle = perturbed.big_omega().to_f64() * t2;
            (
                roll(start).slide_turntable(angle),
                roll(start.slide_turntable(angle)),
            )
        }
    };
    Ok(rs.position().distance(sr.position()))
}

/// Evaluate the STCF-perturbed rig directly and as the base figure carried
/// round by an extra rotation `±ΔOmega * t`. The two must agree for any
/// base rig, rolling or not.
pub fn stcf_rotation_identity(
    rig: &Rig,
    delta_omega: &Frequency,
    direction: Sense,
    t: f64,
) -> Result<(Point2, Point2)> {
    let op = SlideOp::stcf(delta_omega.value().clone(), direction)?;
    let perturbed = apply_stcf(rig, &op)?;
    let direct = pen_position_turntable(&perturbed, t);
    let rotated = pen_position_turntable(rig, t).rotated(direction.sign_f64() * delta_omega.to_f64() * t);
    Ok((direct, rotated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact, exact_int};
    use crate::kinematics::Polarization;

    fn reference_rig(pol: Polarization) -> Rig {
        Rig::from_ints(12, 2, 3, 15, pol).unwrap()
    }

    #[test]
    fn stcp_moves_only_a() {
        let rig = reference_rig(Polarization::Anti);
        let fwd = apply_stcp(&rig, &SlideOp::stcp(exact_int(1), Sense::Forward).unwrap()).unwrap();
        assert_eq!(fwd.a(), &exact_int(13));
        assert_eq!(fwd.with_a(exact_int(12)).unwrap(), rig);
        let back = apply_stcp(&rig, &SlideOp::stcp(exact_int(1), Sense::Backward).unwrap()).unwrap();
        assert_eq!(back.a(), &exact_int(11));
        let too_far = SlideOp::stcp(exact_int(13), Sense::Backward).unwrap();
        assert!(apply_stcp(&rig, &too_far).is_err());
        let stcf = SlideOp::stcf(exact_int(1), Sense::Forward).unwrap();
        assert_eq!(apply_stcp(&rig, &stcf), Err(Error::WrongMethod { expected: "stcp" }));
    }

    #[test]
    fn zero_magnitude_is_rejected() {
        assert!(SlideOp::stcp(Exact::zero(), Sense::Forward).is_err());
        assert!(SlideOp::stcf(exact_int(-1), Sense::Forward).is_err());
    }

    #[test]
    fn null_stcp_slide_leaves_position() {
        let rig = reference_rig(Polarization::Anti);
        let p = roll_then_slide_stcp(&rig, 0.37, Sense::Forward, &Exact::zero()).unwrap();
        assert_eq!(p, pen_position_turntable(&rig, 0.37));
    }

    #[test]
    fn stcf_moves_only_omega() {
        let rig = reference_rig(Polarization::Anti);
        let up = apply_stcf(&rig, &SlideOp::stcf(exact_int(1), Sense::Forward).unwrap()).unwrap();
        assert_eq!(up.big_omega(), &Frequency::integer(4).unwrap());
        let down = apply_stcf(&rig, &SlideOp::stcf(exact_int(1), Sense::Backward).unwrap()).unwrap();
        assert_eq!(down.big_omega(), &Frequency::integer(2).unwrap());
        let stop = SlideOp::stcf(exact_int(3), Sense::Backward).unwrap();
        assert!(apply_stcf(&rig, &stop).is_err());
    }

    #[test]
    fn stcp_rate_is_delta_a() {
        let base = reference_rig(Polarization::Anti);
        let up = base.with_a(exact_int(13)).unwrap();
        let report = slide_report_stcp(&base, &up).unwrap();
        assert_eq!(report.rate_per_radian, exact_int(1));
        assert_eq!(report.delta_v, exact_int(3));
        assert_eq!(report.direction, SlideDirection::Forward);
        // independent route: A - b(1 + ω/Ω) with A = 13
        let via_29 = exact_int(13) - exact_int(2) * (exact_int(1) + exact(15, 3));
        assert_eq!(via_29, report.rate_per_radian);

        let down = base.with_a(exact_int(11)).unwrap();
        let report = slide_report_stcp(&base, &down).unwrap();
        assert_eq!(report.rate_per_radian, exact_int(-1));
        assert_eq!(report.direction, SlideDirection::Backward);
        assert!((report.delta_s + 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn stcp_rate_co() {
        let base = Rig::from_ints(12, 3, 3, 15, Polarization::Co).unwrap();
        let up = base.with_a(exact(25, 2)).unwrap();
        let report = slide_report_stcp(&base, &up).unwrap();
        assert_eq!(report.rate_per_radian, exact(1, 2));
    }

    #[test]
    fn stcp_report_rejects_bad_inputs() {
        let slid = Rig::from_ints(13, 2, 3, 15, Polarization::Anti).unwrap();
        assert!(matches!(
            slide_report_stcp(&slid, &slid),
            Err(Error::NotPureRolling(_))
        ));
        let base = reference_rig(Polarization::Anti);
        let other = base.with_a(exact_int(13)).unwrap().with_b(exact_int(3)).unwrap();
        assert_eq!(
            slide_report_stcp(&base, &other),
            Err(Error::PerturbationMismatch("b".into()))
        );
    }

    #[test]
    fn stcf_rates_match_closed_form() {
        let base = reference_rig(Polarization::Anti);
        let up = base.with_big_omega(Frequency::integer(4).unwrap());
        let report = slide_report_stcf(&base, &up).unwrap();
        assert_eq!(report.rate_per_radian, exact(5, 2));
        assert_eq!(report.rate_per_radian, exact(15, 6));
        assert_eq!(report.direction, SlideDirection::Forward);

        let down = base.with_big_omega(Frequency::integer(2).unwrap());
        let report = slide_report_stcf(&base, &down).unwrap();
        assert_eq!(report.rate_per_radian, exact_int(-5));
        assert_eq!(report.direction, SlideDirection::Backward);

        let same = slide_report_stcf(&base, &base).unwrap();
        assert!(same.rate_per_radian.is_zero());
        assert_eq!(same.direction, SlideDirection::None);
    }

    #[test]
    fn stcf_report_rejects_other_changes() {
        let base = reference_rig(Polarization::Anti);
        let moved = base.with_a(exact_int(13)).unwrap();
        assert!(matches!(
            slide_report_stcf(&base, &moved),
            Err(Error::PerturbationMismatch(_))
        ));
    }

    #[test]
    fn roll_slide_orders_agree() {
        let co = reference_rig(Polarization::Co);
        let da = exact(7, 10);
        let rs = roll_then_slide_stcp(&co, 0.3, Sense::Forward, &da).unwrap();
        let sr = slide_then_roll_stcp(&co, 0.3, Sense::Forward, &da).unwrap();
        assert!(rs.distance(sr) < 1e-12);

        let anti = reference_rig(Polarization::Anti);
        let t = 0.81;
        let p = roll_then_slide_stcp(&anti, t, Sense::Forward, &da).unwrap();
        let base = pen_position_turntable(&anti, t);
        let want = base + Point2::new(0.7 * (3.0 * t).cos(), 0.7 * (3.0 * t).sin());
        assert!(p.distance(want) < 1e-12);
    }

    #[test]
    fn commutators_vanish() {
        let rig = reference_rig(Polarization::Anti);
        let stcp = SlideOp::stcp(exact_int(1), Sense::Backward).unwrap();
        let stcf = SlideOp::stcf(exact_int(1), Sense::Forward).unwrap();
        assert_eq!(commutator_residual(&rig, &stcp, 0.0, 0.0).unwrap(), 0.0);
        assert_eq!(commutator_residual(&rig, &stcf, 0.0, 0.0).unwrap(), 0.0);
        assert!(commutator_residual(&rig, &stcp, 1.7, 0.0).unwrap() < 1e-9);
        assert!(commutator_residual(&rig, &stcf, 1.7, 0.4).unwrap() < 1e-9);
    }

    #[test]
    fn stcf_is_a_rotation_of_the_base_figure() {
        let anti = reference_rig(Polarization::Anti);
        let one = Frequency::integer(1).unwrap();
        let (direct, rotated) = stcf_rotation_identity(&anti, &one, Sense::Forward, 0.0).unwrap();
        assert_eq!(direct, rotated);
        assert_eq!(direct, pen_position_turntable(&anti, 0.0));

        let (direct, rotated) = stcf_rotation_identity(&anti, &one, Sense::Forward, 1.0).unwrap();
        let closed = Point2::new(12.0 * 4f64.cos() + 2.0 * 19f64.cos(), 12.0 * 4f64.sin() + 2.0 * 19f64.sin());
        assert!(direct.distance(closed) < 1e-12);
        assert!(direct.distance(rotated) < 1e-9);

        let co = reference_rig(Polarization::Co);
        let (direct, rotated) = stcf_rotation_identity(&co, &one, Sense::Backward, 1.0).unwrap();
        let closed = Point2::new(12.0 * 2f64.cos() + 2.0 * 13f64.cos(), 12.0 * 2f64.sin() - 2.0 * 13f64.sin());
        assert!(direct.distance(closed) < 1e-12);
        assert!(direct.distance(rotated) < 1e-9);
    }

    #[test]
    fn slide_op_document() {
        let op = SlideOp::stcp(exact(1, 2), Sense::Backward).unwrap();
        let json = serde_json::to_string(&op).unwrap();
        assert_eq!(json, r#"{"method":"stcp","magnitude":"1/2","direction":"backward"}"#);
        assert_eq!(serde_json::from_str::<SlideOp>(&json).unwrap(), op);
        let decimal: SlideOp =
            serde_json::from_str(r#"{"method":"stcp","magnitude":"0.25","direction":"forward"}"#).unwrap();
        assert_eq!(decimal.magnitude(), &exact(1, 4));
        assert!(serde_json::from_str::<SlideOp>(
            r#"{"method":"stcf","magnitude":"0.5","direction":"forward"}"#
        )
        .is_err());
        assert!(serde_json::from_str::<SlideOp>(
            r#"{"method":"stcp","magnitude":"0","direction":"forward"}"#
        )
        .is_err());
    }
}
