use branchmc_core::basis::{BasisSpec, BasisVars};
use branchmc_core::quadrature::simpson;
use branchmc_core::resample::{branch_step, effective_count, is_kept, plan_branching, stratified_uniforms};
use branchmc_core::rng::{Purpose, StepKey};
use branchmc_core::sa::ExerciseGrid;
use branchmc_core::*;
use proptest::prelude::*;

fn small_run(params: HestonParams, particles: usize, steps: usize, seed: u64, mode: ResampleMode) -> SimOutput {
    let mut cfg = SimConfig::new(params, particles, steps, seed);
    cfg.dt = 0.02;
    cfg.substeps = 6;
    cfg.epsilon = 1e-5;
    cfg.resample = mode;
    cfg.record_history = true;
    simulate(&cfg).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn effective_count_is_scale_invariant(
        w in proptest::collection::vec(0.0f64..10.0, 1..40),
        c in 1e-3f64..1e3,
    ) {
        prop_assume!(w.iter().any(|&x| x > 0.0));
        let a = effective_count(w.iter().copied()).unwrap();
        let b = effective_count(w.iter().map(|x| c * x)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a);
        prop_assert!(a >= 1.0 - 1e-12 && a <= w.len() as f64 + 1e-12);
    }

    #[test]
    fn simpson_is_exact_on_cubics(
        c in proptest::array::uniform4(-5.0f64..5.0),
        half in 1usize..10,
        dt in 0.01f64..3.0,
    ) {
        let m = 2 * half;
        let f = |x: f64| c[0] + c[1] * x + c[2] * x * x + c[3] * x * x * x;
        let values: Vec<f64> = (0..=m).map(|k| f(dt * k as f64 / m as f64)).collect();
        let exact = c[0] * dt + c[1] * dt.powi(2) / 2.0 + c[2] * dt.powi(3) / 3.0 + c[3] * dt.powi(4) / 4.0;
        let got = simpson(&values, m, dt).unwrap();
        let scale = 1.0 + c.iter().map(|x| x.abs()).sum::<f64>() * dt.max(1.0).powi(4);
        prop_assert!((got - exact).abs() <= 1e-12 * scale, "{} vs {}", got, exact);
    }

    #[test]
    fn running_average_matches_direct_mean(path in proptest::collection::vec(1.0f64..200.0, 1..60)) {
        let mut r = 0.0;
        for (t, &s) in path.iter().enumerate() {
            r = running_average_update(r, s, t + 1).unwrap();
        }
        let direct = path.iter().sum::<f64>() / path.len() as f64;
        prop_assert!((r - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn basis_evaluation_is_stable(s in 0.0f64..300.0, v in 0.0f64..2.0, r in 0.0f64..300.0, per in 1usize..5) {
        let spec = BasisSpec::new(per, BasisVars::PriceVarianceAverage, 100.0).unwrap();
        let a = spec.eval(s, v, r);
        let b = spec.eval(s, v, r);
        prop_assert_eq!(a.len(), per * per * per);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn branching_keeps_band_and_conserves_expected_weight(
        w in proptest::collection::vec(0.0f64..5.0, 1..60),
        r in 1.01f64..3.0,
        seed in any::<u64>(),
    ) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let average = total / w.len() as f64;
        let mut rng = StepKey::new(seed, 1, Purpose::Resample).stream(0);
        let plan = plan_branching(&w, average, r, &mut rng);
        // Conditional expectation of the offspring weight equals the parent weight.
        for (&j, &u) in plan.branched.iter().zip(&plan.uniforms) {
            let ratio = w[j] / average;
            prop_assert!(!is_kept(w[j], average, r));
            prop_assert!((0.0..1.0).contains(&u));
            let copies = plan.offspring[plan.branched.iter().position(|&k| k == j).unwrap()];
            prop_assert!(copies as f64 >= ratio.floor() && copies as f64 <= ratio.floor() + 1.0);
        }
        let mut hits = vec![0usize; plan.branched.len()];
        for &u in &plan.uniforms {
            hits[(u * plan.branched.len() as f64) as usize] += 1;
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
        let mut sys = ParticleSystem::from_weights(&w, 2);
        branch_step(&mut sys, r, seed).unwrap_or_else(|_| unreachable!());
        for (i, p) in sys.particles().iter().enumerate() {
            let parent = sys.parents()[i] as usize;
            if is_kept(w[parent], average, r) {
                prop_assert_eq!(p.weight, w[parent]);
            } else {
                prop_assert_eq!(p.weight, average);
            }
        }
    }

    #[test]
    fn stratified_uniforms_one_per_stratum(k in 1usize..500, seed in any::<u64>()) {
        let mut rng = StepKey::new(seed, 3, Purpose::Resample).stream(0);
        let u = stratified_uniforms(k, &mut rng);
        let mut hits = vec![0usize; k];
        for x in u {
            hits[(x * k as f64) as usize] += 1;
        }
        prop_assert!(hits.iter().all(|&h| h == 1));
    }
}

#[test]
fn variance_is_a_sum_of_squares_everywhere() {
    let out = small_run(HestonParams::PS3, 300, 10, 4, ResampleMode::Effective { c_eff: 1.045, c_noneff: 1.5 });
    let h = out.history.unwrap();
    for rec in h.steps() {
        assert!(rec.variance.iter().all(|&v| v >= 0.0 && v.is_finite()));
    }
    for (i, p) in out.system.particles().iter().enumerate() {
        let v: f64 = out.system.factors_of(i).iter().map(|y| y * y).sum();
        assert_eq!(p.variance, v);
    }
}

#[test]
fn maturity_only_exercise_equals_weighted_price() {
    let out = small_run(HestonParams::PS2, 400, 8, 11, ResampleMode::Combined { r: 1.05 });
    let payoff =
        PayoffSpec { kind: PayoffKind::AsianCallEarly, strike: 100.0, maturity_steps: 8, dt: 0.02, rate: 0.02 };
    let basis = BasisSpec::new(3, BasisVars::PriceVarianceAverage, 100.0).unwrap();
    let mut sa = SaConfig::new(1.0, 0.05);
    sa.grid = ExerciseGrid::MaturityOnly;
    let o = sa_dp_price(out.history.as_ref().unwrap(), &payoff, &basis, &sa).unwrap();
    assert_eq!(o.price, weighted_price(out.system.particles(), &payoff).unwrap());

    // Payoffs without early exercise ignore the grid.
    let euro = PayoffSpec { kind: PayoffKind::EuropeanStraddle, ..payoff };
    let o = sa_dp_price(out.history.as_ref().unwrap(), &euro, &basis, &SaConfig::new(1.0, 0.05)).unwrap();
    assert_eq!(o.price, weighted_price(out.system.particles(), &euro).unwrap());
    assert!(o.coefficients.is_empty());
}

#[test]
fn dominating_immediate_payoff_is_exercised_at_once() {
    let out = small_run(HestonParams::PS2, 2000, 10, 3, ResampleMode::None);
    let payoff = PayoffSpec { kind: PayoffKind::AmericanPut, strike: 1e4, maturity_steps: 10, dt: 0.02, rate: 0.02 };
    let basis = BasisSpec::new(2, BasisVars::PriceVariance, 1e4).unwrap();
    let o = sa_dp_price(out.history.as_ref().unwrap(), &payoff, &basis, &SaConfig::new(0.25, 0.5)).unwrap();
    assert_eq!(o.price, 1e4 - 100.0);
    assert_eq!(o.coefficients.last().unwrap().step, 0);
    assert_eq!(o.coefficients.last().unwrap().exercised, 2000);
}

#[test]
fn doubling_every_price_doubles_the_early_exercise_price() {
    let payoff = PayoffSpec { kind: PayoffKind::AmericanPut, strike: 100.0, maturity_steps: 10, dt: 0.02, rate: 0.02 };
    let mut p = HestonParams::PS3;
    let base = small_run(p, 1000, 10, 21, ResampleMode::None);
    p.spot *= 2.0;
    let doubled = small_run(p, 1000, 10, 21, ResampleMode::None);
    let b1 = BasisSpec::new(3, BasisVars::PriceVariance, 100.0).unwrap();
    let b2 = BasisSpec::new(3, BasisVars::PriceVariance, 200.0).unwrap();
    let cfg = SaConfig::new(0.5, 0.1);
    let a = sa_dp_price(base.history.as_ref().unwrap(), &payoff, &b1, &cfg).unwrap();
    let d = sa_dp_price(doubled.history.as_ref().unwrap(), &PayoffSpec { strike: 200.0, ..payoff }, &b2, &cfg).unwrap();
    assert_eq!(d.price, 2.0 * a.price);
    for (x, y) in a.coefficients.iter().zip(&d.coefficients) {
        assert_eq!(x.exercised, y.exercised);
    }
}

#[test]
fn integer_feller_ratio_gives_unit_weights_and_idle_branching() {
    let mut p = HestonParams::PS2;
    p.variance_drift = 3.0 * p.vol_of_vol * p.vol_of_vol / 4.0;
    let out = small_run(p, 500, 20, 8, ResampleMode::Combined { r: 1.05 });
    for rec in out.history.as_ref().unwrap().steps() {
        assert!(rec.weight.iter().all(|&w| w == 1.0));
        assert!(rec.parent.iter().enumerate().all(|(i, &j)| i == j as usize));
    }
    assert!(out.diagnostics.iter().all(|d| d.branched_fraction == 0.0 && d.count == 500));
}

#[test]
fn same_seed_same_paths_for_any_thread_count() {
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            small_run(HestonParams::PS2, 3000, 6, 99, ResampleMode::Effective { c_eff: 1.05, c_noneff: 2.0 })
        })
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a.system.particles(), b.system.particles());
    assert_eq!(a.history, b.history);
}
