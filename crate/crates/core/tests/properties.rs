use std::sync::Arc;

use chemo_core::dynamics::{mass_audit, run, step, RunOptions, State, StepControl};
use chemo_core::functionals::{mean_value_violation, phi, riccati_blowup_bound, MomentConfig, MomentRegime};
use chemo_core::grid::{Accumulated, RadialGrid};
use chemo_core::model::{
    chi_threshold_bounded, classify_regime, select_lp_exponent, ModelParams, SignalKind, Species, Verdict,
};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = f64> {
    prop_oneof![Just(2.0), 2.0..4.0, 1.05..2.0]
}

prop_compose! {
    fn model()(
        n in 2usize..8,
        chi1 in 0.01..20.0, chi2 in 0.01..20.0,
        mu1 in 0.05..5.0, mu2 in 0.05..5.0,
        a1 in 0.05..5.0, a2 in 0.05..5.0,
        alpha in 0.05..5.0, beta in 0.05..5.0, d3 in 0.05..5.0,
        kappa1 in exponent(), kappa2 in exponent(), lambda1 in exponent(), lambda2 in exponent(),
        jl in any::<bool>(),
    ) -> ModelParams<f64> {
        let mut p = ModelParams::unit(n);
        p.chi1 = chi1; p.chi2 = chi2; p.mu1 = mu1; p.mu2 = mu2; p.a1 = a1; p.a2 = a2;
        p.alpha = alpha; p.beta = beta; p.d3 = d3;
        p.kappa1 = kappa1; p.kappa2 = kappa2; p.lambda1 = lambda1; p.lambda2 = lambda2;
        if jl { p.signal = SignalKind::JaegerLuckhaus; }
        p
    }
}

fn increments(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..2.0, len)
}

fn accumulation(n: usize, incs: &[f64]) -> Accumulated<f64> {
    let nodes: Vec<f64> = (0..=incs.len()).map(|i| i as f64 / incs.len() as f64).collect();
    let mut values = vec![0.0];
    for d in incs {
        values.push(values.last().unwrap() + d);
    }
    Accumulated::from_nodes(n, nodes, values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lp_feasibility_matches_threshold(p in model()) {
        for (species, chi) in [(Species::First, p.chi1), (Species::Second, p.chi2)] {
            let feasible = select_lp_exponent(&p, species).is_some();
            prop_assert_eq!(feasible, chi_threshold_bounded(&p, species).admits(chi));
            if let Some(q) = select_lp_exponent(&p, species) {
                prop_assert!(q > p.n as f64 / 2.0);
            }
        }
    }

    #[test]
    fn bounded_and_blowup_conditions_exclusive(p in model()) {
        let r = classify_regime(&p);
        let holds = |name: &str| r.condition(name).unwrap().satisfied;
        let bounded = holds("bdd.chi1") && holds("bdd.chi2");
        let ks = holds("ks.signal") && holds("ks.dimension") && holds("ks.exponents");
        let jl = holds("jl.signal") && holds("jl.dimension") && holds("jl.lambda") && holds("jl.kappa")
            && holds("jl.mu1") && holds("jl.mu2")
            && ((holds("jl.chi1") && holds("jl.chi2")) || (holds("jl.swapped.chi1") && holds("jl.swapped.chi2")));
        prop_assert!(!(bounded && ks));
        prop_assert!(!(bounded && jl));
        prop_assert!(!(ks && jl));
        let expected = if bounded { Verdict::BoundedByThm31 } else if ks { Verdict::KSBlowupEligible }
            else if jl { Verdict::JLBlowupEligible } else { Verdict::Unclassified };
        prop_assert_eq!(r.verdict, expected);
    }

    #[test]
    fn boundedness_monotone_in_mu_and_n(p in model(), factor in 1.0..4.0) {
        let bounded = |q: &ModelParams<f64>| classify_regime(q).verdict == Verdict::BoundedByThm31;
        if bounded(&p) {
            let mut q = p.clone();
            q.mu1 *= factor;
            q.mu2 *= factor;
            prop_assert!(bounded(&q));
            if p.n > 2 {
                let mut q = p.clone();
                q.n -= 1;
                prop_assert!(bounded(&q));
            }
        }
    }

    #[test]
    fn phi_monotone_in_u(incs in increments(1..30), extra in increments(1..30), s0 in 0.05..1.0, b in -0.5..1.9) {
        let len = incs.len().min(extra.len());
        let low = accumulation(3, &incs[..len]);
        let bigger: Vec<f64> = incs[..len].iter().zip(&extra[..len]).map(|(a, e)| a + e).collect();
        let high = accumulation(3, &bigger);
        let cfg = MomentConfig { s0, b, regime: MomentRegime::KellerSegel };
        prop_assert!(phi(&low, &cfg).unwrap() <= phi(&high, &cfg).unwrap() * (1.0 + 1e-14));
    }

    #[test]
    fn riccati_bound_decreasing(a in 0.1..5.0, b in 0.0..5.0, phi0 in 0.1..10.0, da in 0.0..2.0, dphi in 0.0..2.0) {
        if let Some(t) = riccati_blowup_bound(a, b, phi0).unwrap() {
            let later = riccati_blowup_bound(a, b, phi0 + dphi).unwrap().unwrap();
            prop_assert!(later <= t * (1.0 + 1e-12));
            let stronger = riccati_blowup_bound(a + da, b, phi0).unwrap().unwrap();
            prop_assert!(stronger <= t * (1.0 + 1e-12));
        }
    }

    #[test]
    fn mean_value_inequality_for_concave(mut slopes in prop::collection::vec(0.0f64..3.0, 2..40)) {
        // nonincreasing slopes: concave nondecreasing U
        slopes.sort_by(|a: &f64, b: &f64| b.total_cmp(a));
        slopes[0] += 0.1;
        let h = 1.0 / slopes.len() as f64;
        let incs: Vec<f64> = slopes.iter().map(|s| s * h).collect();
        let u = accumulation(4, &incs);
        prop_assert!(mean_value_violation(&u) <= 1e-10);
    }

    #[test]
    fn accumulate_slope_round_trip(values in prop::collection::vec(0.0..5.0, 3..40), n in 2usize..6) {
        let g = Arc::new(RadialGrid::uniform(n, 1.3, values.len()).unwrap());
        let f = g.field(values.clone()).unwrap();
        let acc = f.accumulate();
        let s = g.face_s();
        for (i, v) in values.iter().enumerate() {
            let mid = 0.5 * (s[i] + s[i + 1]);
            let slope = acc.slope(mid).unwrap();
            prop_assert!((slope * n as f64 - v).abs() <= 1e-9 * v.abs().max(1.0));
        }
        prop_assert!((acc.total() * g.omega() - f.mass()).abs() <= 1e-12 * f.mass().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn step_preserves_positivity(values in prop::collection::vec(0.0..50.0, 30), other in prop::collection::vec(0.0..50.0, 30),
                                 chi in 0.0..10.0, jl in any::<bool>()) {
        let mut p = ModelParams::unit(3);
        p.chi1 = chi;
        p.chi2 = 0.5 * chi;
        if jl { p.signal = SignalKind::JaegerLuckhaus; }
        let g = Arc::new(RadialGrid::uniform(3, 1.0, 30).unwrap());
        let mut s = State::new(&p, g.field(values).unwrap(), g.field(other).unwrap()).unwrap();
        let c = StepControl::new(1.0);
        for _ in 0..5 {
            s = step(&p, &s, &c).unwrap();
            prop_assert!(s.u.values.iter().chain(&s.v.values).all(|x| *x >= 0.0));
        }
    }

    #[test]
    fn no_taxis_comparison_bound(mut values in prop::collection::vec(0.0f64..3.0, 25), mut other in prop::collection::vec(0.0f64..3.0, 25)) {
        values.sort_by(|a: &f64, b: &f64| b.total_cmp(a));
        other.sort_by(|a: &f64, b: &f64| b.total_cmp(a));
        let mut p = ModelParams::unit(3);
        p.chi1 = 0.0;
        p.chi2 = 0.0;
        let g = Arc::new(RadialGrid::uniform(3, 1.0, 25).unwrap());
        let u0 = g.field(values).unwrap();
        let v0 = g.field(other).unwrap();
        let (cap_u, cap_v) = (u0.sup().max(1.0) + 1e-6, v0.sup().max(1.0) + 1e-6);
        let mut s = State::new(&p, u0, v0).unwrap();
        let c = StepControl::new(0.5);
        while s.t < c.t_end {
            s = step(&p, &s, &c).unwrap();
            prop_assert!(s.u.sup() <= cap_u && s.v.sup() <= cap_v);
        }
    }

    #[test]
    fn mass_bound_along_runs(values in prop::collection::vec(0.0..20.0, 30), chi in 0.0..5.0, mu in 0.1..3.0) {
        let mut p = ModelParams::unit(3);
        p.chi1 = chi;
        p.chi2 = chi;
        p.mu1 = mu;
        p.mu2 = 0.5 * mu;
        let g = Arc::new(RadialGrid::uniform(3, 1.0, 30).unwrap());
        let u0 = g.field(values.clone()).unwrap();
        let v0 = g.field(values.iter().map(|x| 0.5 * x).collect()).unwrap();
        let s = State::new(&p, u0, v0).unwrap();
        let mut opts = RunOptions::new(3);
        opts.sample_stride = 1;
        let rec = run(&p, s, &StepControl::new(0.3), &opts).unwrap();
        prop_assert!(mass_audit(&rec, &p).passed);
    }
}
