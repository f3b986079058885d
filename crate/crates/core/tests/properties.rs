use ds2sc_core::artifact::{extract_artifacts, ArtifactOrigin, ExtractOptions, GeneratedArtifact};
use ds2sc_core::oracles::{
    dft, fit_smoothness, la_transfer, rapp_pout_dbm, roundtrip_error, ComplexSample, CurvePoint,
    LaParams, RappParams,
};
use ds2sc_core::verdicts::{parse_report, Report, ReportCheck, Verdict};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn complex() -> impl Strategy<Value = ComplexSample> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(re, im)| ComplexSample::new(re, im))
}

proptest! {
    #[test]
    fn dft_is_linear(
        x in prop::collection::vec(complex(), 16),
        y in prop::collection::vec(complex(), 16),
        a in -5.0..5.0f64,
        b in -5.0..5.0f64,
    ) {
        let combo: Vec<_> = x.iter().zip(&y).map(|(p, q)| p.scale(a) + q.scale(b)).collect();
        let lhs = dft(&combo, false).unwrap();
        let fx = dft(&x, false).unwrap();
        let fy = dft(&y, false).unwrap();
        for k in 0..16 {
            let rhs = fx[k].scale(a) + fy[k].scale(b);
            prop_assert!(lhs[k].max_component_diff(&rhs) <= 1e-10);
        }
    }

    #[test]
    fn parseval_holds(x in prop::collection::vec(complex(), 1..48)) {
        let n = x.len() as f64;
        let time: f64 = x.iter().map(ComplexSample::norm_sqr).sum();
        let freq: f64 = dft(&x, false).unwrap().iter().map(ComplexSample::norm_sqr).sum::<f64>() / n;
        prop_assert!((time - freq).abs() <= 1e-9 * time.max(1e-300));
    }

    #[test]
    fn random_roundtrip_64(x in prop::collection::vec(complex(), 64)) {
        prop_assert!(roundtrip_error(&x) <= 1e-10);
    }

    #[test]
    fn la_output_is_bounded(
        gain in 0.1..200.0f64,
        lo in -5.0..-0.01f64,
        hi in 0.01..5.0f64,
        q in 0.0..1.0f64,
        v in -10.0..10.0f64,
    ) {
        let p = LaParams { gain, v_out_min: lo, v_out_max: hi, quiescent: lo + q * (hi - lo) * 0.98 + (hi - lo) * 0.01, enabled: true };
        prop_assume!(p.validate().is_ok());
        let out = la_transfer(v, &p);
        prop_assert!(out >= lo && out <= hi);
        prop_assert_eq!(la_transfer(v, &p.with_enabled(false)), p.quiescent);
    }

    #[test]
    fn rapp_monotone_and_bounded(
        g in -10.0..40.0f64,
        psat in -10.0..60.0f64,
        s in 0.2..10.0f64,
        a in -100.0..100.0f64,
        d in 0.0..20.0f64,
    ) {
        let p = RappParams::new(g, psat, s);
        let lo = rapp_pout_dbm(a, &p);
        let hi = rapp_pout_dbm(a + d, &p);
        prop_assert!(hi >= lo);
        prop_assert!(hi <= psat);
    }

    #[test]
    fn report_roundtrip(
        pass in any::<bool>(),
        checks in prop::collection::vec(("[a-z][a-z0-9_]{0,10}", any::<bool>(), prop::option::of("[a-z0-9][a-z0-9 .=]{0,20}[a-z0-9]")), 0..5),
        notes in prop::collection::vec("[a-z0-9][a-z0-9 .=]{0,20}", 0..3),
    ) {
        let report = Report {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            checks: checks.into_iter().map(|(name, passed, detail)| ReportCheck { name, passed, detail }).collect(),
            notes: notes.into_iter().map(|n| format!("note {}", n.trim())).collect(),
        };
        prop_assert_eq!(parse_report(&report.render()).unwrap(), report);
    }

    #[test]
    fn artifact_render_extract_roundtrip(lines in prop::collection::vec("[ -~]{0,40}", 1..20)) {
        let content: String = lines.iter().map(|l| format!("{l}\n")).collect();
        prop_assume!(!content.trim().is_empty());
        prop_assume!(!lines.iter().any(|l| l.starts_with("```")));
        let a = GeneratedArtifact::new("chiplet_core.h", content, ArtifactOrigin::Fixture).unwrap();
        let opts = ExtractOptions { allow_partial: true, ..Default::default() };
        let back = extract_artifacts(&a.render(), None, ArtifactOrigin::Fixture, opts).unwrap();
        prop_assert_eq!(back, vec![a]);
    }
}

#[test]
fn la_exhaustive_grid() {
    let p = LaParams { gain: 10.0, v_out_max: 0.4, v_out_min: -0.4, quiescent: 0.0, enabled: true };
    for i in -1000..=1000 {
        let v = i as f64 * 1e-3;
        let out = la_transfer(v, &p);
        assert!((-0.4..=0.4).contains(&out));
        if v.abs() < 0.04 {
            assert!((out - 10.0 * v).abs() <= 1e-12);
        }
        assert_eq!(la_transfer(v, &p.with_enabled(false)), 0.0);
    }
}

fn sample(params: &RappParams, pins: impl Iterator<Item = f64>) -> Vec<CurvePoint> {
    pins.map(|pin| CurvePoint::new(pin, rapp_pout_dbm(pin, params))).collect()
}

#[test]
fn fit_recovers_s_over_grid() {
    for i in 0..=15 {
        let s_true = 0.5 + 0.5 * i as f64;
        let p = RappParams::new(20.0, 43.0, s_true);
        let pts = sample(&p, (0..=80).map(|k| p.knee_pin_dbm() - 20.0 + 0.5 * k as f64));
        let s = fit_smoothness(&pts, 20.0, 43.0).unwrap();
        assert!((s - s_true).abs() <= 1e-3, "s*={s_true} fitted {s}");
    }
}

#[test]
fn fit_tolerates_measurement_noise() {
    let p = RappParams::new(20.0, 43.0, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..20 {
        let pts: Vec<_> = sample(&p, (0..8).map(|i| 5.0 * i as f64))
            .into_iter()
            .map(|pt| CurvePoint::new(pt.pin_dbm, pt.pout_dbm + rng.random_range(-0.05..=0.05)))
            .collect();
        let s = fit_smoothness(&pts, 20.0, 43.0).unwrap();
        assert!((1.8..=2.2).contains(&s), "{s}");
    }
}
