//! Simulation scenarios, the logistic-regression baseline, ROC analysis and
//! approximation-rate experiments.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)`, so every
//! routine here is reproducible bit for bit from its arguments.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::bitalgebra::BitLabel;
use crate::error::{BeliefError, Result};
use crate::estimator::{aggregate, fit_mp, predict, BeliefFit, CellTable};
use crate::expansion::{
    binary_expand, Expander, ExpansionConfig, RawColumn, VariableSpec, MAX_TOTAL_BITS,
};
use crate::special::integrate;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Scenario {
    /// `X ~ Unif(-1, 1)^2`, `logit P(B = 1) = 2 X1 + X2`.
    Linear,
    /// `X ~ N(0, 1)^2`, `logit P(B = 1) = X1^2 + X2^2`.
    Quadratic,
    /// `X = (cos t, sin t) + 0.2 eps`, `logit P(B = 1) = 3 cos(pi (X1 + X2))`.
    Circular,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Linear, Scenario::Quadratic, Scenario::Circular];

    pub fn id(self) -> u8 {
        match self {
            Scenario::Linear => 1,
            Scenario::Quadratic => 2,
            Scenario::Circular => 3,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Scenario::Linear),
            2 => Ok(Scenario::Quadratic),
            3 => Ok(Scenario::Circular),
            other => Err(BeliefError::Config(format!(
                "unknown scenario {other}; expected 1, 2 or 3"
            ))),
        }
    }

    /// Log-odds of `B = 1` at `(x1, x2)`.
    pub fn log_odds(self, x1: f64, x2: f64) -> f64 {
        match self {
            Scenario::Linear => 2.0 * x1 + x2,
            Scenario::Quadratic => x1 * x1 + x2 * x2,
            Scenario::Circular => 3.0 * (std::f64::consts::PI * (x1 + x2)).cos(),
        }
    }
}

impl TryFrom<u8> for Scenario {
    type Error = BeliefError;
    fn try_from(id: u8) -> Result<Self> {
        Scenario::from_id(id)
    }
}

impl From<Scenario> for u8 {
    fn from(s: Scenario) -> u8 {
        s.id()
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimData {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub b: Vec<i8>,
}

impl SimData {
    pub fn len(&self) -> usize {
        self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.b.is_empty()
    }

    pub fn columns(&self) -> Vec<RawColumn> {
        vec![
            RawColumn::numeric("x1", self.x1.clone()),
            RawColumn::numeric("x2", self.x2.clone()),
        ]
    }

    /// Rows `[from, to)`.
    pub fn slice(&self, from: usize, to: usize) -> SimData {
        SimData {
            x1: self.x1[from..to].to_vec(),
            x2: self.x2[from..to].to_vec(),
            b: self.b[from..to].to_vec(),
        }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate(scenario: Scenario, n: usize, seed: u64) -> Result<SimData> {
    if n == 0 {
        return Err(BeliefError::EmptyData);
    }
    let mut rng = rng_from_seed(seed);
    let mut data = SimData {
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
    };
    for _ in 0..n {
        let (x1, x2) = match scenario {
            Scenario::Linear => (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Scenario::Quadratic => (rng.sample(StandardNormal), rng.sample(StandardNormal)),
            Scenario::Circular => {
                let theta: f64 = rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI);
                let e1: f64 = rng.sample(StandardNormal);
                let e2: f64 = rng.sample(StandardNormal);
                (theta.cos() + 0.2 * e1, theta.sin() + 0.2 * e2)
            }
        };
        let p = logistic(scenario.log_odds(x1, x2));
        let b = if rng.random::<f64>() < p { 1 } else { -1 };
        data.x1.push(x1);
        data.x2.push(x2);
        data.b.push(b);
    }
    Ok(data)
}

/// Two-variable ECDF expansion of `x1`, `x2` at a common depth.
pub fn ecdf_config(depth: usize) -> Result<ExpansionConfig> {
    ExpansionConfig::new(vec![
        VariableSpec::ecdf("x1", depth),
        VariableSpec::ecdf("x2", depth),
    ])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFit {
    pub fit: BeliefFit,
    pub table: CellTable,
    pub labels: Vec<BitLabel>,
}

/// Moore-Penrose BELIEF fit of a whole simulated sample on ECDF bits.
pub fn fit_belief(data: &SimData, depth: usize) -> Result<ScenarioFit> {
    let config = ecdf_config(depth)?;
    let columns = data.columns();
    let expander = Expander::fit(&columns, &config)?;
    let panel = expander.panel(&columns)?;
    let table = aggregate(&panel, &data.b)?;
    let fit = fit_mp(&table)?;
    Ok(ScenarioFit {
        fit,
        table,
        labels: panel.labels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub suspected_separation: bool,
    pub deviance: f64,
}

impl LogisticFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, c)| x * c).sum()
    }
}

/// Rows `[1, x1, x2, x1 x2]`.
pub fn interaction_design(x1: &[f64], x2: &[f64]) -> Vec<[f64; 4]> {
    x1.iter()
        .zip(x2)
        .map(|(&a, &b)| [1.0, a, b, a * b])
        .collect()
}

const IRLS_TOL: f64 = 1e-8;
const IRLS_MAX_ITER: usize = 100;
const FITTED_EDGE: f64 = 1e-10;

/// Logistic regression by iteratively reweighted least squares.
///
/// `y` is coded `+/-1`. Failure to converge is reported through the flags,
/// not as an error; a rank-deficient design is an error.
pub fn fit_logistic_irls<R: AsRef<[f64]>>(design: &[R], y: &[i8]) -> Result<LogisticFit> {
    let n = design.len();
    if n == 0 {
        return Err(BeliefError::EmptyData);
    }
    if y.len() != n {
        return Err(BeliefError::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    let k = design[0].as_ref().len();
    let x = DMatrix::from_fn(n, k, |i, j| design[i].as_ref()[j]);
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(BeliefError::NonFinite { index: i });
    }
    let t = DVector::from_iterator(
        n,
        y.iter()
            .enumerate()
            .map(|(row, &v)| match v {
                1 => Ok(1.0),
                -1 => Ok(0.0),
                other => Err(BeliefError::InvalidResponse {
                    row,
                    value: other as i64,
                }),
            })
            .collect::<Result<Vec<f64>>>()?,
    );

    let deviance_at = |eta: &DVector<f64>| -> f64 {
        eta.iter()
            .zip(t.iter())
            .map(|(&e, &ti)| {
                // -2 log-likelihood with log(1 + exp(e)) computed stably.
                let softplus = if e > 0.0 {
                    e + (-e).exp().ln_1p()
                } else {
                    e.exp().ln_1p()
                };
                2.0 * (softplus - ti * e)
            })
            .sum()
    };

    let mut beta = DVector::zeros(k);
    let mut eta = &x * &beta;
    let mut deviance = deviance_at(&eta);
    let mut converged = false;
    let mut separation = false;
    let mut iterations = 0;
    let mut info = DMatrix::zeros(k, k);
    while iterations < IRLS_MAX_ITER {
        iterations += 1;
        let mu: Vec<f64> = eta.iter().map(|&e| logistic(e)).collect();
        let w: Vec<f64> = mu.iter().map(|m| (m * (1.0 - m)).max(1e-300)).collect();
        let xw = DMatrix::from_fn(n, k, |i, j| x[(i, j)] * w[i]);
        info = x.transpose() * &xw;
        let score =
            x.transpose() * DVector::from_iterator(n, t.iter().zip(&mu).map(|(ti, m)| ti - m));
        let chol = info
            .clone()
            .cholesky()
            .filter(|c| {
                let d = c.l_dirty().diagonal();
                d.min() > 1e-7 * d.max()
            })
            .ok_or_else(|| BeliefError::Singular("logistic design is rank deficient".into()))?;
        let step = chol.solve(&score);
        beta += &step;
        eta = &x * &beta;
        let new_deviance = deviance_at(&eta);
        let change = step.amax();
        let saturated = eta
            .iter()
            .map(|&e| logistic(e))
            .all(|m| !(FITTED_EDGE..=1.0 - FITTED_EDGE).contains(&m));
        if saturated || (new_deviance < 1e-6 && beta.amax() > 10.0) {
            separation = true;
            deviance = new_deviance;
            break;
        }
        deviance = new_deviance;
        if change < IRLS_TOL {
            converged = true;
            break;
        }
        if !beta.iter().all(|b| b.is_finite()) {
            separation = true;
            break;
        }
    }
    if !converged && beta.amax() > 20.0 {
        separation = true;
    }
    let std_errors = match info.clone().try_inverse() {
        Some(inv) => (0..k).map(|j| inv[(j, j)].max(0.0).sqrt()).collect(),
        None => vec![f64::INFINITY; k],
    };
    Ok(LogisticFit {
        coefficients: beta.iter().copied().collect(),
        std_errors,
        iterations,
        converged: converged && !separation,
        suspected_separation: separation,
        deviance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// ROC curve of `scores` against `+/-1` labels, sweeping the threshold over
/// the distinct scores. Tied scores give a single diagonal step, so the
/// trapezoidal area equals the Mann-Whitney statistic.
pub fn roc_auc(scores: &[f64], labels: &[i8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(BeliefError::LengthMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(BeliefError::NonFinite { index });
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.iter().filter(|&&l| l == -1).count();
    if pos + neg != labels.len() {
        let row = labels.iter().position(|&l| l != 1 && l != -1).unwrap_or(0);
        return Err(BeliefError::InvalidResponse {
            row,
            value: labels[row] as i64,
        });
    }
    if pos == 0 || neg == 0 {
        return Err(BeliefError::InvalidArgument(
            "ROC needs both classes".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        auc += (fp - fp0) as f64 * (tp + tp0) as f64 / 2.0;
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(RocCurve {
        points,
        auc: auc / (pos as f64 * neg as f64),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub auc: f64,
    pub roc: RocCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub methods: Vec<MethodResult>,
    pub logistic_converged: bool,
}

impl Comparison {
    pub fn auc(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .find(|m| m.method == method)
            .map(|m| m.auc)
    }
}

pub fn belief_method_name(depth: usize) -> String {
    format!("belief-d{depth}")
}

pub const LOGISTIC_METHOD: &str = "logistic";

/// Trains BELIEF at each depth and the logistic baseline on the first
/// `n_train` rows of one simulated sample, and scores the remaining `n_test`.
pub fn run_comparison(
    scenario: Scenario,
    depths: &[usize],
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<Comparison> {
    if n_train == 0 || n_test == 0 {
        return Err(BeliefError::EmptyData);
    }
    if let Some(&d) = depths.iter().find(|&&d| d == 0 || 2 * d > MAX_TOTAL_BITS) {
        return Err(BeliefError::Config(format!(
            "depth {d} is outside 1..={}",
            MAX_TOTAL_BITS / 2
        )));
    }
    let data = generate(scenario, n_train + n_test, seed)?;
    let train = data.slice(0, n_train);
    let test = data.slice(n_train, n_train + n_test);
    let train_cols = train.columns();
    let test_cols = test.columns();

    let mut methods = Vec::new();
    for &depth in depths {
        let expander = Expander::fit(&train_cols, &ecdf_config(depth)?)?;
        let table = aggregate(&expander.panel(&train_cols)?, &train.b)?;
        let fit = fit_mp(&table)?;
        let panel = expander.panel(&test_cols)?;
        let scores = panel
            .cells
            .iter()
            .map(|&c| {
                let p = predict(&fit, c as usize)?.prob_plus;
                if !(0.0..=1.0).contains(&p) {
                    return Err(BeliefError::InvalidArgument(format!(
                        "probability {p} outside [0, 1]"
                    )));
                }
                Ok(p)
            })
            .collect::<Result<Vec<f64>>>()?;
        let roc = roc_auc(&scores, &test.b)?;
        methods.push(MethodResult {
            method: belief_method_name(depth),
            auc: roc.auc,
            roc,
        });
    }

    let logit = fit_logistic_irls(&interaction_design(&train.x1, &train.x2), &train.b)?;
    let scores: Vec<f64> = interaction_design(&test.x1, &test.x2)
        .iter()
        .map(|row| logit.linear_predictor(row))
        .collect();
    let roc = roc_auc(&scores, &test.b)?;
    methods.push(MethodResult {
        method: LOGISTIC_METHOD.to_string(),
        auc: roc.auc,
        roc,
    });

    Ok(Comparison {
        scenario,
        seed,
        n_train,
        n_test,
        methods,
        logistic_converged: logit.converged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub depth: usize,
    /// 0.95-quantile of `|g(U) - g(U_D)|`.
    pub quantile: f64,
    /// `quantile / previous quantile`; `None` at the first depth.
    pub ratio: Option<f64>,
}

/// Monte Carlo truncation error of `g` at depths `1..=max_depth`, with
/// `U ~ Unif(-1, 1)^p` and `U_D` its depth-`D` dyadic truncation.
pub fn rate_check<G: Fn(&[f64]) -> f64>(
    g: G,
    p: usize,
    max_depth: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<RateRow>> {
    if p == 0 || max_depth == 0 || n == 0 {
        return Err(BeliefError::InvalidArgument(
            "p, max_depth and n must be positive".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let mut errors = vec![Vec::with_capacity(n); max_depth];
    let mut u = vec![0.0; p];
    let mut partial = vec![vec![0.0; p]; max_depth];
    for _ in 0..n {
        for (j, uj) in u.iter_mut().enumerate() {
            *uj = rng.random_range(-1.0..1.0);
            let bits = binary_expand(*uj, max_depth)?;
            let mut acc = 0.0;
            let mut step = 0.5;
            for (d, &a) in bits.iter().enumerate() {
                acc += f64::from(a) * step;
                step *= 0.5;
                partial[d][j] = acc;
            }
        }
        let gu = g(&u);
        for d in 0..max_depth {
            errors[d].push((gu - g(&partial[d])).abs());
        }
    }
    let mut rows: Vec<RateRow> = Vec::with_capacity(max_depth);
    for (d, mut e) in errors.into_iter().enumerate() {
        e.sort_by(f64::total_cmp);
        let idx = ((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1;
        let quantile = e[idx];
        let ratio = rows.last().map(|r| quantile / r.quantile);
        rows.push(RateRow {
            depth: d + 1,
            quantile,
            ratio,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitSetup {
    /// Number of uniform covariates.
    pub p: usize,
    /// Standard deviation of the Gaussian noise added before clamping.
    pub noise: f64,
    pub n_train: usize,
    pub n_eval: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitRow {
    pub d1: usize,
    pub d2: usize,
    /// Root mean squared error against `E[V | U]`.
    pub l2_error: f64,
}

/// `E[clamp(m + noise Z, -1, 1)]` for standard normal `Z`.
fn clamped_normal_mean(m: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        return m.clamp(-1.0, 1.0);
    }
    let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // Integration pieces end at the clamping kinks.
    let mut knots = [
        -9.0,
        9.0,
        ((-1.0 - m) / noise).clamp(-9.0, 9.0),
        ((1.0 - m) / noise).clamp(-9.0, 9.0),
    ];
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| {
            integrate(
                |z| (m + noise * z).clamp(-1.0, 1.0) * phi(z),
                w[0],
                w[1],
                12,
                12,
            )
        })
        .sum()
}

/// Approximates `E[V | U]` for `V = clamp(g(U) + noise Z, -1, 1)` by
/// BELIEF fits of the first `d2` bits of `V` on the depth-`d1` bits of `U`,
/// for every pair in `pairs`.
pub fn double_limit<G: Fn(&[f64]) -> f64>(
    g: G,
    setup: DoubleLimitSetup,
    pairs: &[(usize, usize)],
) -> Result<Vec<DoubleLimitRow>> {
    let DoubleLimitSetup {
        p,
        noise,
        n_train,
        n_eval,
        seed,
    } = setup;
    if p == 0 || n_train == 0 || n_eval == 0 {
        return Err(BeliefError::InvalidArgument(
            "p, n_train and n_eval must be positive".into(),
        ));
    }
    let mut rng = rng_from_seed(seed);
    let draw_u = |rng: &mut ChaCha8Rng, n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let u_train = draw_u(&mut rng, n_train);
    let v_train: Vec<f64> = u_train
        .iter()
        .map(|u| {
            let z: f64 = rng.sample(StandardNormal);
            (g(u) + noise * z).clamp(-1.0, 1.0)
        })
        .collect();
    let u_eval = draw_u(&mut rng, n_eval);
    let truth: Vec<f64> = u_eval
        .iter()
        .map(|u| clamped_normal_mean(g(u), noise))
        .collect();

    let mut rows = Vec::with_capacity(pairs.len());
    for &(d1, d2) in pairs {
        if d1 == 0 || d2 == 0 || p * d1 > MAX_TOTAL_BITS {
            return Err(BeliefError::Config(format!("invalid depths ({d1}, {d2})")));
        }
        let specs = (0..p)
            .map(|j| VariableSpec::known_range(format!("u{j}"), -1.0, 1.0, d1))
            .collect();
        let config = ExpansionConfig::new(specs)?;
        let to_columns = |us: &[Vec<f64>]| -> Vec<RawColumn> {
            (0..p)
                .map(|j| RawColumn::numeric(format!("u{j}"), us.iter().map(|u| u[j]).collect()))
                .collect()
        };
        let expander = Expander::fit(&to_columns(&u_train), &config)?;
        let train_panel = expander.panel(&to_columns(&u_train))?;
        let eval_panel = expander.panel(&to_columns(&u_eval))?;
        let v_bits: Vec<Vec<i8>> = v_train
            .iter()
            .map(|&v| binary_expand(v, d2))
            .collect::<Result<_>>()?;
        let mut prediction = vec![0.0; n_eval];
        let mut weight = 0.5;
        for d in 0..d2 {
            let response: Vec<i8> = v_bits.iter().map(|b| b[d]).collect();
            let fit = fit_mp(&aggregate(&train_panel, &response)?)?;
            for (pred, &c) in prediction.iter_mut().zip(&eval_panel.cells) {
                *pred += weight * fit.cell_values[c as usize];
            }
            weight *= 0.5;
        }
        let mse = prediction
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n_eval as f64;
        rows.push(DoubleLimitRow {
            d1,
            d2,
            l2_error: mse.sqrt(),
        });
    }
    Ok(rows)
}
