//! Sampling rigs into traces, closure, cusp counting, and family sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{to_f64, Exact};
use crate::kinematics::{closure_period, Frame, NumericRig, Point2, Rig};
use crate::linear::{linear_pen_position, LinearRig};
use crate::sliding::{SlideMethod, SlideOp};

pub const DEFAULT_SAMPLES_PER_CLOSURE: usize = 4096;
pub const MIN_SAMPLES_PER_CLOSURE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub p: Point2,
}

/// The machine a trace came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rig", rename_all = "snake_case")]
pub enum RigSnapshot {
    Centered(Rig),
    Linear(LinearRig),
}

/// Time-stamped polyline of pen positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    frame: Frame,
    samples: Vec<Sample>,
    rig: RigSnapshot,
    closed: bool,
}

/// Everything about a trace except its samples; written as the CSV sidecar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub frame: Frame,
    pub closed: bool,
    pub samples: usize,
    #[serde(flatten)]
    pub rig: RigSnapshot,
}

impl Trace {
    /// Timestamps must be finite and strictly increasing.
    pub fn new(frame: Frame, samples: Vec<Sample>, rig: RigSnapshot, closed: bool) -> Result<Self> {
        if let Some(bad) = samples.iter().find(|s| !(s.t.is_finite() && s.p.is_finite())) {
            return Err(Error::InvalidValue(format!("non-finite sample at t = {}", bad.t)));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidValue(format!(
                "timestamps must increase strictly ({} then {})",
                w[0].t, w[1].t
            )));
        }
        Ok(Self {
            frame,
            samples,
            rig,
            closed,
        })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.samples.iter().map(|s| s.p)
    }

    pub fn rig(&self) -> &RigSnapshot {
        &self.rig
    }

    pub fn centered_rig(&self) -> Option<&Rig> {
        match &self.rig {
            RigSnapshot::Centered(rig) => Some(rig),
            RigSnapshot::Linear(_) => None,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            frame: self.frame,
            closed: self.closed,
            samples: self.samples.len(),
            rig: self.rig.clone(),
        }
    }

    /// Distance between the first and last samples.
    pub fn closure_gap(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(first), Some(last)) => first.p.distance(last.p),
            _ => 0.0,
        }
    }
}

/// One closure period, `samples_per_closure` intervals, both endpoints kept
/// so the last sample repeats the first.
pub fn sample_trace(rig: &Rig, frame: Frame, samples_per_closure: usize) -> Result<Trace> {
    if samples_per_closure < MIN_SAMPLES_PER_CLOSURE {
        return Err(Error::InvalidValue(format!(
            "need at least {MIN_SAMPLES_PER_CLOSURE} samples per closure, got {samples_per_closure}"
        )));
    }
    let period = closure_period(rig).seconds();
    let numeric = rig.numeric();
    let n = samples_per_closure as f64;
    let samples = (0..=samples_per_closure)
        .map(|k| {
            let t = period * (k as f64 / n);
            Sample {
                t,
                p: numeric.at(frame, t),
            }
        })
        .collect();
    Trace::new(frame, samples, RigSnapshot::Centered(rig.clone()), true)
}

/// Samples at `t = k*dt` for `k = 0..count`, the grid a fixed-tick machine
/// walks on.
pub fn sample_uniform(rig: &Rig, frame: Frame, dt: f64, count: usize) -> Result<Trace> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidValue(format!("dt must be positive, got {dt}")));
    }
    let numeric = rig.numeric();
    let samples = (0..count)
        .map(|k| {
            let t = k as f64 * dt;
            Sample {
                t,
                p: numeric.at(frame, t),
            }
        })
        .collect();
    Trace::new(frame, samples, RigSnapshot::Centered(rig.clone()), false)
}

/// `n` evenly spaced samples on `[0, t_end]`.
pub fn sample_linear(rig: &LinearRig, t_end: f64, n: usize) -> Result<Trace> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidValue(format!("t_end must be positive, got {t_end}")));
    }
    if n < 2 {
        return Err(Error::InvalidValue(format!("need at least 2 samples, got {n}")));
    }
    let last = (n - 1) as f64;
    let samples = (0..n)
        .map(|k| {
            let t = t_end * (k as f64 / last);
            Sample {
                t,
                p: linear_pen_position(rig, t),
            }
        })
        .collect();
    Trace::new(Frame::Laboratory, samples, RigSnapshot::Linear(rig.clone()), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinimumKind {
    /// The pen stops: a cusp.
    Cusp,
    /// A speed minimum where the pen keeps moving: a trochoid tooth.
    Tooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedMinimum {
    pub t: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspCount {
    /// Cusps when any minimum reaches zero speed, otherwise all speed minima.
    pub count: usize,
    pub kind: MinimumKind,
    /// Set when some minimum lies within a factor of 10 of the threshold.
    pub ambiguous: bool,
    pub threshold: f64,
    pub minima: Vec<SpeedMinimum>,
}

/// Count pen stops (or, for sliding rigs, speed minima) over the trace.
///
/// Candidates are discrete minima of the analytic speed at the sample times;
/// each is then refined by golden-section search between its neighbours, so
/// a cusp that falls between samples still reaches zero speed.
pub fn count_cusps(trace: &Trace) -> Result<CuspCount> {
    let mut times: Vec<f64> = trace.samples.iter().map(|s| s.t).collect();
    if trace.closed && times.len() > 1 {
        times.pop();
    }
    if times.len() < 3 {
        return Err(Error::InvalidValue("need at least 3 distinct samples".into()));
    }
    let (speed, threshold): (Box<dyn Fn(f64) -> f64>, f64) = match &trace.rig {
        RigSnapshot::Centered(rig) => {
            let numeric: NumericRig = rig.numeric();
            let frame = trace.frame;
            let scale = (numeric.a + numeric.b) * numeric.big_omega.max(numeric.small_omega);
            (Box::new(move |t| numeric.velocity(frame, t).norm()), 1e-6 * scale)
        }
        RigSnapshot::Linear(rig) => {
            let rig = rig.clone();
            let scale = (to_f64(rig.gear_radius()) + to_f64(rig.pen_radius())) * rig.omega().to_f64();
            (Box::new(move |t| rig.velocity(t).norm()), 1e-6 * scale)
        }
    };

    let speeds: Vec<f64> = times.iter().map(|&t| speed(t)).collect();
    let n = speeds.len();
    let (lo, hi) = speeds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
    let mut minima = Vec::new();
    // constant speed: rounding noise only, no minima
    if hi - lo > 1e-9 * hi.max(threshold) {
        let step = if trace.closed {
            trace.samples.last().map(|s| s.t).unwrap_or(0.0) - times[n - 1]
        } else {
            0.0
        };
        for i in 0..n {
            let (prev, next) = if trace.closed {
                ((i + n - 1) % n, (i + 1) % n)
            } else if i == 0 || i == n - 1 {
                continue;
            } else {
                (i - 1, i + 1)
            };
            if !(speeds[i] < speeds[prev] && speeds[i] <= speeds[next]) {
                continue;
            }
            let left = if i == 0 { times[0] - step } else { times[prev] };
            let right = if i == n - 1 { times[n - 1] + step } else { times[next] };
            let (t, s) = golden_section_min(&speed, left, right);
            minima.push(SpeedMinimum { t, speed: s });
        }
    }

    let cusps = minima.iter().filter(|m| m.speed < threshold).count();
    let ambiguous = minima
        .iter()
        .any(|m| m.speed >= threshold / 10.0 && m.speed <= threshold * 10.0);
    let (count, kind) = if cusps > 0 {
        (cusps, MinimumKind::Cusp)
    } else {
        (minima.len(), MinimumKind::Tooth)
    };
    Ok(CuspCount {
        count,
        kind,
        ambiguous,
        threshold,
        minima,
    })
}

fn golden_section_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()).max(1.0) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// A base rig and a list of signed perturbations, one curve per step.
/// A zero step draws the base rig itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub base: Rig,
    pub method: SlideMethod,
    #[serde(with = "serde_steps")]
    pub steps: Vec<Exact>,
}

mod serde_steps {
    use super::*;
    use crate::exact::{format_exact, parse_decimal_or_fraction};
    use serde::{de, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(steps: &[Exact], serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(steps.iter().map(format_exact))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Vec<Exact>, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(i64),
            Float(f64),
            Text(String),
        }
        Vec::<Raw>::deserialize(deserializer)?
            .into_iter()
            .map(|raw| match raw {
                Raw::Int(n) => Ok(crate::exact::exact_int(n)),
                Raw::Float(x) => crate::exact::exact_from_f64(x),
                Raw::Text(s) => parse_decimal_or_fraction(&s),
            })
            .collect::<Result<_>>()
            .map_err(de::Error::custom)
    }
}

impl FamilySpec {
    pub fn rigs(&self) -> Result<Vec<Rig>> {
        if self.steps.is_empty() {
            return Err(Error::Empty("family steps"));
        }
        self.steps
            .iter()
            .enumerate()
            .map(|(index, step)| {
                let wrap = |source: Error| Error::FamilyStep {
                    index,
                    source: Box::new(source),
                };
                if num_traits::Zero::is_zero(step) {
                    return Ok(self.base.clone());
                }
                SlideOp::from_signed(self.method, step)
                    .and_then(|op| op.apply(&self.base))
                    .map_err(wrap)
            })
            .collect()
    }
}

/// One trace per step, in step order.
pub fn sweep_family(spec: &FamilySpec, frame: Frame, samples: usize) -> Result<Vec<Trace>> {
    spec.rigs()?
        .iter()
        .map(|rig| sample_trace(rig, frame, samples))
        .collect()
}
