use std::f64::consts::TAU;

use proptest::prelude::*;

use trochoid_core::ellipse::{
    ellipse_from_rig, ellipse_polar_centered, focal_polar_point, on_ellipse_residual, EllipseSpec,
};
use trochoid_core::exact::{exact, exact_int, to_f64, Exact, Frequency};
use trochoid_core::kinematics::{
    classify, closure_period, design_epicycloid, design_hypocycloid, lab_to_table, pen_position_lab,
    pen_position_turntable, rolling_residual, Frame, Point2, Polarization, Rig,
};
use trochoid_core::linear::{linear_pen_position, LinearRig};
use trochoid_core::render::{read_csv_samples, to_csv, to_svg, RenderStyle};
use trochoid_core::sliding::{
    apply_stcf, apply_stcp, commutator_residual, slide_report_stcf, slide_report_stcp, stcf_rotation_identity,
    Sense, SlideOp,
};
use trochoid_core::trace::{sample_trace, FamilySpec};
use trochoid_core::sliding::SlideMethod;

fn length() -> impl Strategy<Value = Exact> {
    (1i64..=200, 1i64..=10).prop_map(|(n, d)| exact(n, d))
}

fn frequency() -> impl Strategy<Value = Frequency> {
    (1i64..=12, 1i64..=4).prop_map(|(n, d)| Frequency::from_ratio(n, d).unwrap())
}

fn polarization() -> impl Strategy<Value = Polarization> {
    prop_oneof![Just(Polarization::Anti), Just(Polarization::Co)]
}

fn sense() -> impl Strategy<Value = Sense> {
    prop_oneof![Just(Sense::Forward), Just(Sense::Backward)]
}

fn rig() -> impl Strategy<Value = Rig> {
    (length(), length(), frequency(), frequency(), polarization(), 0.0..TAU, 0.0..TAU).prop_map(
        |(a, b, big, small, pol, pt, pp)| Rig::with_phases(a, b, big, small, pol, pt, pp).unwrap(),
    )
}

fn zero_phase_rig() -> impl Strategy<Value = Rig> {
    (length(), length(), frequency(), frequency(), polarization())
        .prop_map(|(a, b, big, small, pol)| Rig::new(a, b, big, small, pol).unwrap())
}

fn pure_rolling() -> impl Strategy<Value = Rig> {
    (length(), frequency(), polarization(), 1u32..=10).prop_map(|(a, omega, pol, n)| match pol {
        Polarization::Anti => design_epicycloid(a, n, omega).unwrap(),
        Polarization::Co => design_hypocycloid(a, n + 1, omega).unwrap(),
    })
}

fn ellipse_rig() -> impl Strategy<Value = Rig> {
    (length(), length(), frequency())
        .prop_filter("a = b is a line segment", |(a, b, _)| a != b)
        .prop_map(|(a, b, big)| {
            let small = Frequency::new(big.value() * exact_int(2)).unwrap();
            Rig::new(a, b, big, small, Polarization::Co).unwrap()
        })
}

/// `(a cos(Θ) + b cos(Θ + sΦ), a sin(Θ) + b sin(Θ + sΦ))` written out.
fn oracle_table(rig: &Rig, t: f64) -> Point2 {
    let a = to_f64(rig.a());
    let b = to_f64(rig.b());
    let s = match rig.polarization() {
        Polarization::Anti => 1.0,
        Polarization::Co => -1.0,
    };
    let theta = rig.big_omega().to_f64() * t + rig.phase_table();
    let phi = rig.small_omega().to_f64() * t + rig.phase_pen();
    Point2::new(
        a * theta.cos() + b * (theta + s * phi).cos(),
        a * theta.sin() + b * (theta + s * phi).sin(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn lab_rotated_by_table_angle_is_table_position(rig in rig(), t in 0.0..50.0f64) {
        let theta = rig.big_omega().to_f64() * t + rig.phase_table();
        let composed = lab_to_table(pen_position_lab(&rig, t), theta);
        prop_assert!(composed.distance(oracle_table(&rig, t)) < 1e-9);
        prop_assert!(pen_position_turntable(&rig, t).distance(oracle_table(&rig, t)) < 1e-9);
    }

    #[test]
    fn zero_phase_start_is_a_plus_b(rig in zero_phase_rig()) {
        let start = Point2::new(to_f64(rig.a()) + to_f64(rig.b()), 0.0);
        prop_assert!(pen_position_turntable(&rig, 0.0).distance(start) < 1e-12);
        prop_assert!(pen_position_lab(&rig, 0.0).distance(start) < 1e-12);
    }

    #[test]
    fn turntable_figure_repeats_after_closure_period(rig in rig(), t in 0.0..10.0f64) {
        let period = closure_period(&rig).seconds();
        let p = pen_position_turntable(&rig, t);
        let q = pen_position_turntable(&rig, t + period);
        prop_assert!(p.distance(q) < 1e-9, "period {period}: {p:?} vs {q:?}");
    }

    #[test]
    fn closure_period_is_minimal(rig in zero_phase_rig()) {
        // half the period must not bring both angles round unless the curve is a circle
        let over = closure_period(&rig).over_two_pi;
        for divisor in [2i64, 3, 5] {
            let shorter = &over / exact_int(divisor);
            let turns_table = rig.big_omega().value() * &shorter;
            let turns_pen = rig.combined_omega() * &shorter;
            prop_assert!(!(turns_table.is_integer() && turns_pen.is_integer()));
        }
    }

    #[test]
    fn ellipse_rigs_stay_on_their_ellipse(rig in ellipse_rig(), t in 0.0..50.0f64) {
        let spec = ellipse_from_rig(&rig).unwrap();
        let p = oracle_table(&rig, t);
        let big_a = to_f64(rig.a()) + to_f64(rig.b());
        let big_b = (to_f64(rig.a()) - to_f64(rig.b())).abs();
        let residual = (p.x * p.x / (big_a * big_a) + p.y * p.y / (big_b * big_b) - 1.0).abs();
        prop_assert!(residual < 1e-9);
        prop_assert!(on_ellipse_residual(pen_position_turntable(&rig, t), &spec) < 1e-9);
    }

    #[test]
    fn designed_rigs_roll_exactly(a in length(), omega in frequency(), n in 1u32..=20) {
        let epi = design_epicycloid(a.clone(), n, omega.clone()).unwrap();
        prop_assert_eq!(rolling_residual(&epi), Exact::from_integer(0.into()));
        let hypo = design_hypocycloid(a, n + 1, omega).unwrap();
        prop_assert_eq!(rolling_residual(&hypo), Exact::from_integer(0.into()));
    }

    #[test]
    fn classification_ignores_time_scale(rig in rig(), num in 1i64..=9, den in 1i64..=9) {
        let k = exact(num, den);
        let scaled = rig
            .with_big_omega(Frequency::new(rig.big_omega().value() * &k).unwrap())
            .with_small_omega(Frequency::new(rig.small_omega().value() * &k).unwrap());
        let before = classify(&rig, 1e-9).unwrap();
        let after = classify(&scaled, 1e-9).unwrap();
        prop_assert_eq!(before.tag(), after.tag());
    }

    #[test]
    fn double_speed_splits_by_polarization(a in length(), b in length(), big in frequency()) {
        prop_assume!(a != b);
        let small = Frequency::new(big.value() * exact_int(2)).unwrap();
        let anti = Rig::new(a, b, big, small, Polarization::Anti).unwrap();
        let co = anti.with_polarization(Polarization::Co);
        let anti_tag = classify(&anti, 1e-9).unwrap().tag();
        let co_tag = classify(&co, 1e-9).unwrap().tag();
        prop_assert!(anti_tag.starts_with("epi"));
        prop_assert_eq!(co_tag, "ellipse");
    }

    #[test]
    fn stcp_rate_is_the_change_in_a(base in pure_rolling(), frac in 1i64..1000, dir in sense()) {
        let delta = base.a() * exact(frac, 1000);
        let perturbed = apply_stcp(&base, &SlideOp::stcp(delta.clone(), dir).unwrap()).unwrap();
        let report = slide_report_stcp(&base, &perturbed).unwrap();
        let signed = match dir { Sense::Forward => delta.clone(), Sense::Backward => -delta.clone() };
        prop_assert_eq!(&report.rate_per_radian, &signed);
        prop_assert_eq!(report.delta_v, signed * base.big_omega().value());
    }

    #[test]
    fn stcf_rate_formula(base in pure_rolling(), frac in 1i64..100, dir in sense()) {
        let delta = base.big_omega().value() * exact(frac, 100);
        let perturbed = apply_stcf(&base, &SlideOp::stcf(delta, dir).unwrap()).unwrap();
        let report = slide_report_stcf(&base, &perturbed).unwrap();
        let (big, big2) = (base.big_omega().value(), perturbed.big_omega().value());
        let expected = base.b() * base.small_omega().value() * (big2 - big) / (big * big2);
        prop_assert_eq!(report.rate_per_radian, expected);
    }

    #[test]
    fn roll_and_slide_commute(rig in rig(), frac in 1i64..100, dir in sense(), stcp in any::<bool>(),
                              t1 in 0.0..20.0f64, t2 in 0.0..20.0f64) {
        let op = if stcp {
            SlideOp::stcp(rig.a() * exact(frac, 100), dir).unwrap()
        } else {
            SlideOp::stcf(rig.big_omega().value() * exact(frac, 100), dir).unwrap()
        };
        prop_assert!(commutator_residual(&rig, &op, t1, t2).unwrap() < 1e-9);
    }

    #[test]
    fn stcf_keeps_the_figure_size(base in pure_rolling(), frac in 1i64..100, dir in sense(), t in 0.0..20.0f64) {
        let delta = Frequency::new(base.big_omega().value() * exact(frac, 100)).unwrap();
        let (direct, rotated) = stcf_rotation_identity(&base, &delta, dir, t).unwrap();
        prop_assert!(direct.distance(rotated) < 1e-9);
        // same distance from the center, hence same dimensions
        prop_assert!((direct.norm() - oracle_table(&base, t).norm()).abs() < 1e-9);
    }

    #[test]
    fn stcp_moves_the_curve_at_most_delta_a(base in pure_rolling(), frac in 1i64..1000, dir in sense(), t in 0.0..20.0f64) {
        let delta = base.a() * exact(frac, 1000);
        let perturbed = apply_stcp(&base, &SlideOp::stcp(delta.clone(), dir).unwrap()).unwrap();
        let gap = pen_position_turntable(&perturbed, t).distance(pen_position_turntable(&base, t));
        prop_assert!(gap <= to_f64(&delta) * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn focal_points_sum_to_major_axis(semi_major in 0.1..100.0f64, e in 0.0..0.99f64, angle in 0.0..TAU) {
        let spec = EllipseSpec::from_eccentricity(semi_major, e).unwrap();
        let p = focal_polar_point(&spec, angle);
        let (f1, f2) = spec.foci();
        prop_assert!((p.distance(f1) + p.distance(f2) - 2.0 * semi_major).abs() < 1e-12 * semi_major.max(1.0) * 10.0);
        let r = ellipse_polar_centered(&spec, angle);
        prop_assert!(on_ellipse_residual(Point2::new(r * angle.cos(), r * angle.sin()), &spec) < 1e-12);
    }

    #[test]
    fn eccentricity_moves_with_a(b in 1i64..50, a in 1i64..200, step in 1i64..20) {
        prop_assume!(a != b && a + step != b);
        let spec = |a: i64| {
            let rig = Rig::from_ints(a, b, 1, 2, Polarization::Co).unwrap();
            ellipse_from_rig(&rig).unwrap()
        };
        let (before, after) = (spec(a), spec(a + step));
        // the figure always grows in both axes while a > b
        if a > b {
            prop_assert!(after.semi_major > before.semi_major && after.semi_minor > before.semi_minor);
            prop_assert!(after.eccentricity < before.eccentricity);
        } else if a + step < b {
            prop_assert!(after.eccentricity > before.eccentricity);
        }
    }

    #[test]
    fn linear_rig_hangs_between_zero_and_2r(r in 0i64..40, big_r in 1i64..40, w in 1i64..5, t in 0.0..50.0f64) {
        let rig = LinearRig::new(exact_int(r), exact_int(big_r), Frequency::integer(w).unwrap()).unwrap();
        let p = linear_pen_position(&rig, t);
        prop_assert!(p.y >= -1e-12 && p.y <= 2.0 * big_r as f64 + 1e-12);
        let period = std::f64::consts::TAU / w as f64;
        let q = linear_pen_position(&rig, t + period);
        let shift = std::f64::consts::TAU * r as f64;
        prop_assert!((q.x - p.x - shift).abs() < 1e-9 * (1.0 + shift) && (q.y - p.y).abs() < 1e-9);
    }

    #[test]
    fn csv_round_trips(rig in rig(), n in 16usize..300) {
        let trace = sample_trace(&rig, Frame::Turntable, n).unwrap();
        let back = read_csv_samples(&to_csv(&trace)).unwrap();
        prop_assert_eq!(back.as_slice(), trace.samples());
    }

    #[test]
    fn svg_is_well_formed_and_deterministic(base in pure_rolling(), steps in proptest::collection::vec(1i64..5, 1..4)) {
        let spec = FamilySpec {
            base,
            method: SlideMethod::Stcp,
            steps: steps.iter().map(|s| exact(*s, 2)).collect(),
        };
        let traces: Vec<_> = spec
            .rigs()
            .unwrap()
            .iter()
            .map(|r| sample_trace(r, Frame::Turntable, 64).unwrap())
            .collect();
        let svg = to_svg(&traces, &RenderStyle::default()).unwrap();
        prop_assert_eq!(&svg, &to_svg(&traces, &RenderStyle::default()).unwrap());
        let mut reader = quick_xml::Reader::from_str(&svg);
        let mut paths = 0;
        loop {
            match reader.read_event() {
                Ok(quick_xml::events::Event::Eof) => break,
                Ok(quick_xml::events::Event::Empty(e)) if e.name().as_ref() == b"path" => paths += 1,
                Ok(_) => {}
                Err(e) => return Err(TestCaseError::fail(format!("bad xml: {e}"))),
            }
        }
        prop_assert_eq!(paths, traces.len());
    }
}
