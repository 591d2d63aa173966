use belief::inference::{precision_zero_check, precision_zero_check_population};
use belief::simharness::{
    double_limit, fit_belief, fit_logistic_irls, interaction_design, rate_check, rng_from_seed,
    DoubleLimitSetup,
};
use belief::{
    aggregate, fit_lse, generate, run_comparison, significant_slopes, BeliefError, BitLabel,
    BitPanel, Correction, Scenario,
};
use rand::Rng;

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

#[test]
fn scenario_marginals() {
    let n = 100_000;
    let linear = generate(Scenario::Linear, n, 11).unwrap();
    assert!(linear.x1.iter().chain(&linear.x2).all(|x| x.abs() <= 1.0));
    // Symmetric covariates and odd log-odds give P(B = 1) = 1/2.
    assert!(mean(linear.b.iter().map(|&b| f64::from(b))).abs() < 0.015);

    let quad = generate(Scenario::Quadratic, n, 12).unwrap();
    let p_plus = mean(quad.b.iter().map(|&b| f64::from(u8::from(b == 1))));
    assert!(p_plus > 0.7, "{p_plus}");
    assert!((mean(quad.x1.iter().map(|x| x * x)) - 1.0).abs() < 0.02);

    let circ = generate(Scenario::Circular, n, 13).unwrap();
    let radius2 = mean(circ.x1.iter().zip(&circ.x2).map(|(a, b)| a * a + b * b));
    assert!((radius2 - 1.08).abs() < 0.01, "{radius2}");
}

#[test]
fn generation_is_seeded() {
    let a = generate(Scenario::Circular, 500, 5).unwrap();
    assert_eq!(a, generate(Scenario::Circular, 500, 5).unwrap());
    assert_ne!(a, generate(Scenario::Circular, 500, 6).unwrap());
    assert_eq!(
        generate(Scenario::Linear, 0, 1),
        Err(BeliefError::EmptyData)
    );
}

#[test]
fn logistic_irls_recovers_the_linear_scenario() {
    let d = generate(Scenario::Linear, 20_000, 21).unwrap();
    let fit = fit_logistic_irls(&interaction_design(&d.x1, &d.x2), &d.b).unwrap();
    assert!(fit.converged && !fit.suspected_separation);
    for ((c, se), truth) in fit
        .coefficients
        .iter()
        .zip(&fit.std_errors)
        .zip([0.0, 2.0, 1.0, 0.0])
    {
        assert!((c - truth).abs() < 3.0 * se, "{c} vs {truth} (se {se})");
    }
}

#[test]
fn logistic_irls_flags_separation_and_rank_deficiency() {
    let x: Vec<[f64; 2]> = (0..40).map(|i| [1.0, f64::from(i) - 19.5]).collect();
    let y: Vec<i8> = x.iter().map(|r| if r[1] > 0.0 { 1 } else { -1 }).collect();
    assert!(fit_logistic_irls(&x, &y).unwrap().suspected_separation);

    let collinear: Vec<[f64; 3]> = (0..40)
        .map(|i| [1.0, f64::from(i), 2.0 * f64::from(i)])
        .collect();
    let noisy: Vec<i8> = (0..40).map(|i| if i % 3 == 0 { 1 } else { -1 }).collect();
    assert!(matches!(
        fit_logistic_irls(&collinear, &noisy),
        Err(BeliefError::Singular(_))
    ));
}

#[test]
fn bonferroni_controls_the_familywise_rate_under_the_null() {
    let alpha = 0.05;
    let reps = 200;
    let mut rejections = 0;
    for seed in 0..reps {
        let mut rng = rng_from_seed(9000 + seed);
        let n = 2000;
        let cells: Vec<u32> = (0..n).map(|_| rng.random_range(0..16)).collect();
        let b: Vec<i8> = (0..n)
            .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
            .collect();
        let labels: Vec<BitLabel> = (0..4)
            .map(|k| BitLabel {
                variable: k / 2,
                depth: k % 2 + 1,
            })
            .collect();
        let panel = BitPanel::from_cells(cells, 4, labels.clone());
        let table = aggregate(&panel, &b).unwrap();
        let fit = fit_lse(&table).unwrap();
        let tests =
            significant_slopes(&fit, &table, alpha, Correction::Bonferroni, &labels).unwrap();
        if tests.iter().any(|t| t.significant) {
            rejections += 1;
        }
    }
    let rate = f64::from(rejections) / reps as f64;
    let slack = 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();
    assert!(rate <= alpha + slack, "familywise rate {rate}");
}

#[test]
fn deeper_expansions_help_the_nonlinear_scenarios() {
    for scenario in [Scenario::Quadratic, Scenario::Circular] {
        let c = run_comparison(scenario, &[1, 3], 6000, 3000, 31).unwrap();
        let d1 = c.auc("belief-d1").unwrap();
        let d3 = c.auc("belief-d3").unwrap();
        let logit = c.auc("logistic").unwrap();
        assert!(d3 > d1 + 0.05, "{scenario}: d1 {d1}, d3 {d3}");
        assert!(d3 > logit + 0.05, "{scenario}: d3 {d3}, logistic {logit}");
    }
}

#[test]
fn lipschitz_rate_halves_per_depth() {
    let rows = rate_check(|u| u[0].sin() * 0.8, 1, 8, 100_000, 41).unwrap();
    for r in rows.iter().skip(2) {
        let ratio = r.ratio.unwrap();
        assert!(
            (ratio - 0.5).abs() < 0.05,
            "depth {}: ratio {ratio}",
            r.depth
        );
    }
}

#[test]
fn double_limit_error_shrinks_as_both_depths_grow() {
    let setup = DoubleLimitSetup {
        p: 1,
        noise: 0.3,
        n_train: 1 << 17,
        n_eval: 4000,
        seed: 51,
    };
    let rows = double_limit(|u| 0.7 * u[0].tanh(), setup, &[(1, 1), (2, 3), (4, 6)]).unwrap();
    assert!(rows[0].l2_error > rows[1].l2_error);
    assert!(rows[1].l2_error > rows[2].l2_error);
    assert!(rows[2].l2_error < 0.05, "{rows:?}");
}

#[test]
fn precision_and_slope_zeros_agree() {
    // P = 3 bits, B depends on bit 0 only through A0 and A0 A1.
    let probs = [0.10, 0.15, 0.12, 0.13, 0.14, 0.11, 0.09, 0.16];
    let beta = [0.1, 0.3, 0.0, -0.2, 0.0, 0.0, 0.0, 0.0];
    let expect: Vec<f64> = (0..8)
        .map(|t| {
            (0..8)
                .map(|m| f64::from(belief::hadamard_entry(t, m)) * beta[m])
                .sum()
        })
        .collect();
    for bit in 0..3 {
        let pop = precision_zero_check_population(&probs, &expect, bit).unwrap();
        assert!(pop.equivalent, "{pop:?}");
    }

    let mut rng = rng_from_seed(61);
    let cumulative: Vec<f64> = probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let n = 200_000;
    let mut cells = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let t = cumulative.iter().position(|&c| u < c).unwrap_or(7);
        cells.push(t as u32);
        b.push(if rng.random::<f64>() < (1.0 + expect[t]) / 2.0 {
            1
        } else {
            -1
        });
    }
    let panel = BitPanel::from_cells(cells, 3, vec![]);
    let sample = precision_zero_check(&panel, &b, 0).unwrap();
    assert!(sample.equivalent, "{sample:?}");
    assert_eq!(sample.slope_zero, vec![false, false, true, true]);
}

#[test]
fn scenario_fit_exposes_labels_and_table() {
    let d = generate(Scenario::Quadratic, 4096, 71).unwrap();
    let s = fit_belief(&d, 2).unwrap();
    assert_eq!(s.labels.len(), 4);
    assert_eq!(s.table.n(), 4096);
    assert_eq!(s.fit.beta.len(), 16);
    assert!(s.fit.l2_norm() <= 1.0);
}
