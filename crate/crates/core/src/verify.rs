//! Seeded property suites, runnable from the command line.
//!
//! Each suite draws its own random cases from a generator seeded by the run
//! seed and the suite's position, so running one suite alone gives the same
//! cases as running it inside the full set.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::ellipse::{ellipse_from_rig, on_ellipse_residual};
use crate::error::{Error, Result};
use crate::exact::{exact, Exact, Frequency};
use crate::kinematics::{
    design_epicycloid, design_hypocycloid, lab_to_table, pen_position_lab, pen_position_turntable, Polarization,
    Rig,
};
use crate::sliding::{apply_stcp, commutator_residual, slide_report_stcp, stcf_rotation_identity, Sense, SlideOp};

pub const SUITES: [&str; 6] = [
    "t1-equivalence",
    "t2-ellipse",
    "t3-commutator",
    "t5-stcp-rate",
    "t7-stcp-rate-hypo",
    "t8-stcf-size",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed error; 0 for exact suites.
    pub max_error: f64,
    /// Allowed error; 0 means exact equality.
    pub tolerance: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub suites: Vec<SuiteResult>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(SuiteResult::passed)
    }

    /// Fixed-width text table, one row per suite.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<20} {:>6} {:>8} {:>12} {:>10}  result\n",
            "suite", "cases", "failures", "max_error", "tolerance"
        );
        for s in &self.suites {
            out.push_str(&format!(
                "{:<20} {:>6} {:>8} {:>12.3e} {:>10.0e}  {}\n",
                s.name,
                s.cases,
                s.failures,
                s.max_error,
                s.tolerance,
                if s.passed() { "PASS" } else { "FAIL" }
            ));
        }
        out
    }
}

/// Run the named suites (all of them when `names` is empty).
pub fn run_suites(seed: u64, names: &[String]) -> Result<VerifyReport> {
    for name in names {
        if !SUITES.contains(&name.as_str()) {
            return Err(Error::InvalidValue(format!(
                "unknown suite {name:?}; known suites: {}",
                SUITES.join(", ")
            )));
        }
    }
    let suites = SUITES
        .iter()
        .enumerate()
        .filter(|(_, name)| names.is_empty() || names.iter().any(|n| n == *name))
        .map(|(index, name)| {
            let mut rng = StdRng::seed_from_u64(seed.wrapping_add(0x9e37_79b9_7f4a_7c15u64.wrapping_mul(index as u64 + 1)));
            run_suite(name, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyReport { seed, suites })
}

fn run_suite(name: &str, rng: &mut StdRng) -> Result<SuiteResult> {
    match name {
        "t1-equivalence" => equivalence(rng),
        "t2-ellipse" => ellipse(rng),
        "t3-commutator" => commutator(rng),
        "t5-stcp-rate" => stcp_rate(rng, Polarization::Anti),
        "t7-stcp-rate-hypo" => stcp_rate(rng, Polarization::Co),
        "t8-stcf-size" => stcf_size(rng),
        other => Err(Error::InvalidValue(format!("unknown suite {other:?}"))),
    }
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: usize,
    max_error: f64,
    tolerance: f64,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            max_error: 0.0,
            tolerance,
        }
    }

    fn error(&mut self, err: f64) {
        self.cases += 1;
        self.max_error = self.max_error.max(err);
        if err.is_nan() || err >= self.tolerance {
            self.failures += 1;
        }
    }

    fn exact(&mut self, ok: bool) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
        }
    }

    fn finish(self) -> SuiteResult {
        SuiteResult {
            name: self.name.to_string(),
            cases: self.cases,
            failures: self.failures,
            max_error: self.max_error,
            tolerance: self.tolerance,
        }
    }
}

fn random_length(rng: &mut StdRng) -> Exact {
    exact(rng.random_range(1..=400), rng.random_range(1..=20))
}

fn random_frequency(rng: &mut StdRng) -> Frequency {
    Frequency::from_ratio(rng.random_range(1..=30), rng.random_range(1..=6)).expect("positive ratio")
}

fn random_polarization(rng: &mut StdRng) -> Polarization {
    if rng.random_bool(0.5) {
        Polarization::Anti
    } else {
        Polarization::Co
    }
}

fn random_rig(rng: &mut StdRng) -> Result<Rig> {
    let a = random_length(rng);
    let b = random_length(rng);
    let phase_table = rng.random_range(0.0..std::f64::consts::TAU);
    let phase_pen = rng.random_range(0.0..std::f64::consts::TAU);
    Rig::with_phases(
        a,
        b,
        random_frequency(rng),
        random_frequency(rng),
        random_polarization(rng),
        phase_table,
        phase_pen,
    )
}

fn random_pure_rolling(rng: &mut StdRng, polarization: Polarization) -> Result<Rig> {
    let a = random_length(rng);
    let omega = random_frequency(rng);
    match polarization {
        Polarization::Anti => design_epicycloid(a, rng.random_range(1..=12), omega),
        Polarization::Co => design_hypocycloid(a, rng.random_range(2..=12), omega),
    }
}

fn random_sense(rng: &mut StdRng) -> Sense {
    if rng.random_bool(0.5) {
        Sense::Forward
    } else {
        Sense::Backward
    }
}

/// A slide that keeps the rig valid: backward STCP never reaches `a = 0`,
/// backward STCF never reaches `Omega = 0`.
fn random_op(rng: &mut StdRng, rig: &Rig) -> Result<SlideOp> {
    let direction = random_sense(rng);
    if rng.random_bool(0.5) {
        let fraction = exact(rng.random_range(1..100), 100);
        SlideOp::stcp(rig.a() * fraction, direction)
    } else {
        let fraction = exact(rng.random_range(1..100), 100);
        SlideOp::stcf(rig.big_omega().value() * fraction, direction)
    }
}

fn equivalence(rng: &mut StdRng) -> Result<SuiteResult> {
    let mut tally = Tally::new("t1-equivalence", 1e-9);
    for _ in 0..100 {
        let rig = random_rig(rng)?;
        let numeric = rig.numeric();
        for _ in 0..100 {
            let t = rng.random_range(0.0..20.0);
            let (theta, _) = numeric.angles_at(t);
            let composed = lab_to_table(pen_position_lab(&rig, t), theta);
            tally.error(composed.distance(pen_position_turntable(&rig, t)));
        }
    }
    Ok(tally.finish())
}

fn ellipse(rng: &mut StdRng) -> Result<SuiteResult> {
    let mut tally = Tally::new("t2-ellipse", 1e-9);
    let mut rigs = 0;
    while rigs < 50 {
        let a = random_length(rng);
        let b = random_length(rng);
        if a == b {
            continue;
        }
        let big = random_frequency(rng);
        let small = Frequency::new(big.value() * exact(2, 1))?;
        let rig = Rig::new(a, b, big, small, Polarization::Co)?;
        let spec = ellipse_from_rig(&rig)?;
        for _ in 0..200 {
            let t = rng.random_range(0.0..20.0);
            tally.error(on_ellipse_residual(pen_position_turntable(&rig, t), &spec));
        }
        rigs += 1;
    }
    Ok(tally.finish())
}

fn commutator(rng: &mut StdRng) -> Result<SuiteResult> {
    let mut tally = Tally::new("t3-commutator", 1e-9);
    for _ in 0..100 {
        let rig = random_rig(rng)?;
        let op = random_op(rng, &rig)?;
        let t1 = rng.random_range(0.0..10.0);
        let t2 = rng.random_range(0.0..10.0);
        tally.error(commutator_residual(&rig, &op, t1, t2)?);
    }
    Ok(tally.finish())
}

fn stcp_rate(rng: &mut StdRng, polarization: Polarization) -> Result<SuiteResult> {
    let name = match polarization {
        Polarization::Anti => "t5-stcp-rate",
        Polarization::Co => "t7-stcp-rate-hypo",
    };
    let mut tally = Tally::new(name, 0.0);
    for _ in 0..100 {
        let base = random_pure_rolling(rng, polarization)?;
        let delta_a = base.a() * exact(rng.random_range(1..1000), 1000);
        let direction = random_sense(rng);
        let perturbed = apply_stcp(&base, &SlideOp::stcp(delta_a.clone(), direction)?)?;
        let report = slide_report_stcp(&base, &perturbed)?;
        tally.exact(report.rate_per_radian == direction.apply(&delta_a));
    }
    Ok(tally.finish())
}

fn stcf_size(rng: &mut StdRng) -> Result<SuiteResult> {
    let mut tally = Tally::new("t8-stcf-size", 1e-9);
    for _ in 0..100 {
        let polarization = random_polarization(rng);
        let rig = random_pure_rolling(rng, polarization)?;
        let direction = random_sense(rng);
        let delta = rig.big_omega().value() * exact(rng.random_range(1..100), 100);
        let delta = Frequency::new(delta)?;
        for _ in 0..20 {
            let t = rng.random_range(0.0..10.0);
            let (direct, rotated) = stcf_rotation_identity(&rig, &delta, direction, t)?;
            tally.error(direct.distance(rotated));
        }
    }
    Ok(tally.finish())
}
