//! Significance of slopes, conditional independence statements and the
//! precision-matrix characterisation of vanishing slopes.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bitalgebra::{
    hadamard_entry, inverse_wht, log2_len, BitLabel, InteractionMask, Subgroup,
};
use crate::error::{BeliefError, Result};
use crate::estimator::{aggregate, covariance, fit_lse, BeliefFit, CellTable};
use crate::expansion::BitPanel;
use crate::special::norm_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correction {
    #[default]
    Bonferroni,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeTest {
    pub mask: InteractionMask,
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero.
    pub z: Option<f64>,
    pub adjusted_alpha: f64,
    pub significant: bool,
    pub ci_low: f64,
    pub ci_high: f64,
    /// The covariance gave no usable variance for this slope.
    pub degenerate: bool,
}

/// Wald tests of every slope, with intervals at the adjusted level.
pub fn significant_slopes(
    fit: &BeliefFit,
    table: &CellTable,
    alpha: f64,
    correction: Correction,
    labels: &[BitLabel],
) -> Result<Vec<SlopeTest>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BeliefError::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let cov = match &fit.covariance {
        Some(c) => c.clone(),
        None => covariance(fit, table)?,
    };
    let cells = fit.num_cells();
    let adjusted_alpha = match correction {
        Correction::Bonferroni => alpha / cells as f64,
        Correction::None => alpha,
    };
    let crit = norm_quantile(1.0 - adjusted_alpha / 2.0);
    let se = cov.std_error();
    let usable = se.is_finite() && se > 0.0;
    Ok(fit
        .beta
        .iter()
        .enumerate()
        .map(|(m, &estimate)| {
            let mask = InteractionMask(m as u32);
            let z = usable.then(|| estimate / se);
            let half = if usable { crit * se } else { 0.0 };
            SlopeTest {
                mask,
                label: mask.label(labels),
                estimate,
                std_error: se,
                z,
                adjusted_alpha,
                significant: usable && (estimate - half > 0.0 || estimate + half < 0.0),
                ci_low: estimate - half,
                ci_high: estimate + half,
                degenerate: !usable,
            }
        })
        .collect())
}

/// Non-constant masks whose test rejected zero.
pub fn nonzero_masks(tests: &[SlopeTest]) -> Vec<InteractionMask> {
    tests
        .iter()
        .filter(|t| t.significant && !t.mask.is_constant())
        .map(|t| t.mask)
        .collect()
}

/// Masks of a population slope vector with `|beta| > 1e-12`, constant excluded.
pub fn population_nonzero(beta: &[f64]) -> Vec<InteractionMask> {
    beta.iter()
        .enumerate()
        .skip(1)
        .filter(|(_, b)| b.abs() > POPULATION_ZERO)
        .map(|(m, _)| InteractionMask(m as u32))
        .collect()
}

const POPULATION_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondIndepStatement {
    pub subgroup: Subgroup,
    pub generators: Vec<InteractionMask>,
    pub generator_labels: Vec<String>,
    pub order: u64,
    /// Minimal number of generators.
    pub k: usize,
    pub statement: String,
}

/// `B` is independent of all bits given the subgroup spanned by the masks
/// with nonzero slope.
pub fn independence_report(
    masks_nonzero: &[InteractionMask],
    labels: &[BitLabel],
) -> Result<CondIndepStatement> {
    let bits = labels.len();
    if let Some(m) = masks_nonzero.iter().find(|m| bits < 32 && m.0 >> bits != 0) {
        return Err(BeliefError::InvalidArgument(format!(
            "mask {} exceeds {bits} bits",
            m.0
        )));
    }
    let subgroup = Subgroup::span(masks_nonzero.iter().copied().filter(|m| !m.is_constant()));
    let generators = subgroup.minimal_generators();
    let generator_labels: Vec<String> = generators.iter().map(|g| g.label(labels)).collect();
    let all_bits = labels
        .iter()
        .map(|l| l.to_string())
        .collect::<Vec<_>>()
        .join(",");
    let statement = match generator_labels.len() {
        0 => format!("B ⫫ ({all_bits})"),
        1 => format!("B ⫫ ({all_bits}) | {}", generator_labels[0]),
        _ => format!("B ⫫ ({all_bits}) | ({})", generator_labels.join(", ")),
    };
    Ok(CondIndepStatement {
        order: subgroup.order(),
        k: generators.len(),
        subgroup,
        generators,
        generator_labels,
        statement,
    })
}

/// Largest total-variation distance between the law of `B` given all bits
/// and the law of `B` given only the values of the subgroup's generators.
///
/// `probs[t]` is the probability of cell `t`, `expect[t]` is `E[B | t]`.
pub fn subgroup_sufficiency_gap(probs: &[f64], expect: &[f64], subgroup: &Subgroup) -> Result<f64> {
    if probs.len() != expect.len() {
        return Err(BeliefError::LengthMismatch {
            expected: probs.len(),
            actual: expect.len(),
        });
    }
    log2_len(probs.len())?;
    let gens = subgroup.minimal_generators();
    let signature = |t: usize| -> usize {
        gens.iter().enumerate().fold(0, |acc, (i, g)| {
            acc | (((t & g.index()).count_ones() as usize & 1) << i)
        })
    };
    let classes = 1usize << gens.len();
    let mut mass = vec![0.0; classes];
    let mut weighted = vec![0.0; classes];
    for t in 0..probs.len() {
        let s = signature(t);
        mass[s] += probs[t];
        weighted[s] += probs[t] * expect[t];
    }
    Ok((0..probs.len())
        .filter(|&t| probs[t] > 0.0)
        .map(|t| {
            let s = signature(t);
            (expect[t] - weighted[s] / mass[s]).abs() / 2.0
        })
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrecisionCheck {
    pub bit: usize,
    /// Masks containing `bit`.
    pub masks: Vec<InteractionMask>,
    pub slopes: Vec<f64>,
    /// `[Cov(C)^-1]_{m, B}` for each mask.
    pub precision: Vec<f64>,
    pub slope_zero: Vec<bool>,
    pub precision_zero: Vec<bool>,
    pub equivalent: bool,
}

/// Covariance of `C = (B, A_1, ..., A_{2^P - 1})` from a cell distribution.
fn joint_covariance(probs: &[f64], expect: &[f64]) -> DMatrix<f64> {
    let cells = probs.len();
    let mean_a: Vec<f64> = (0..cells)
        .map(|m| {
            (0..cells)
                .map(|t| probs[t] * hadamard_entry(t, m) as f64)
                .sum()
        })
        .collect();
    let mean_b: f64 = (0..cells).map(|t| probs[t] * expect[t]).sum();
    // Index 0 is B; index m >= 1 is the interaction with mask m.
    DMatrix::from_fn(cells, cells, |i, j| match (i, j) {
        (0, 0) => 1.0 - mean_b * mean_b,
        (0, m) | (m, 0) => {
            (0..cells)
                .map(|t| probs[t] * expect[t] * hadamard_entry(t, m) as f64)
                .sum::<f64>()
                - mean_b * mean_a[m]
        }
        (a, b) => mean_a[a ^ b] - mean_a[a] * mean_a[b],
    })
}

fn masks_with_bit(cells: usize, bit: usize) -> Result<Vec<InteractionMask>> {
    if cells >> bit <= 1 {
        return Err(BeliefError::InvalidArgument(format!(
            "bit {bit} out of range"
        )));
    }
    Ok((1..cells)
        .map(|m| InteractionMask(m as u32))
        .filter(|m| m.contains_bit(bit))
        .collect())
}

fn first_column_of_inverse(cov: DMatrix<f64>) -> Result<Vec<f64>> {
    let cells = cov.nrows();
    let chol = cov.cholesky().ok_or_else(|| {
        BeliefError::Singular("covariance of (B, interactions) is not positive definite".into())
    })?;
    let mut e0 = DMatrix::zeros(cells, 1);
    e0[(0, 0)] = 1.0;
    Ok(chol.solve(&e0).column(0).iter().copied().collect())
}

/// Population version: compares zero patterns of the slopes and of the
/// precision matrix on every mask containing `bit`, to `1e-8`.
pub fn precision_zero_check_population(
    probs: &[f64],
    expect: &[f64],
    bit: usize,
) -> Result<PrecisionCheck> {
    if probs.len() != expect.len() {
        return Err(BeliefError::LengthMismatch {
            expected: probs.len(),
            actual: expect.len(),
        });
    }
    let cells = probs.len();
    log2_len(cells)?;
    if probs.iter().any(|&p| p.is_nan() || p <= 0.0) {
        return Err(BeliefError::Singular(
            "every cell needs positive probability".into(),
        ));
    }
    if expect.iter().any(|e| e.is_nan() || e.abs() >= 1.0) {
        return Err(BeliefError::Singular("a cell is deterministic".into()));
    }
    let masks = masks_with_bit(cells, bit)?;
    let beta = inverse_wht(expect)?;
    let column = first_column_of_inverse(joint_covariance(probs, expect))?;
    let tol = 1e-8;
    let slopes: Vec<f64> = masks.iter().map(|m| beta[m.index()]).collect();
    let precision: Vec<f64> = masks.iter().map(|m| column[m.index()]).collect();
    let slope_zero: Vec<bool> = slopes.iter().map(|s| s.abs() < tol).collect();
    let precision_zero: Vec<bool> = precision.iter().map(|s| s.abs() < tol).collect();
    Ok(PrecisionCheck {
        bit,
        equivalent: slope_zero == precision_zero,
        masks,
        slopes,
        precision,
        slope_zero,
        precision_zero,
    })
}

/// Sample version. Slopes are judged zero by a two-sided z-test at level
/// 0.01. The precision entry for mask `m` equals `-beta_m / sigma^2`, with
/// `sigma^2` the residual variance of `B` given all interactions, so it is
/// tested with standard error `SE(beta_m) / sigma^2`.
pub fn precision_zero_check(
    panel: &BitPanel,
    response: &[i8],
    bit: usize,
) -> Result<PrecisionCheck> {
    let table = aggregate(panel, response)?;
    let fit = fit_lse(&table)?;
    let cov = covariance(&fit, &table)?;
    let n = table.n() as f64;
    let probs: Vec<f64> = table.counts().iter().map(|&c| c as f64 / n).collect();
    let masks = masks_with_bit(table.num_cells(), bit)?;
    let column = first_column_of_inverse(joint_covariance(&probs, &fit.cell_values))?;
    let sigma2 = 1.0 / column[0];
    let se = cov.std_error();
    if se.is_nan() || se <= 0.0 {
        return Err(BeliefError::Singular("slope variance is zero".into()));
    }
    let crit = norm_quantile(0.995);
    let slopes: Vec<f64> = masks.iter().map(|m| fit.beta[m.index()]).collect();
    let precision: Vec<f64> = masks.iter().map(|m| column[m.index()]).collect();
    let slope_zero: Vec<bool> = slopes.iter().map(|b| (b / se).abs() < crit).collect();
    let precision_zero: Vec<bool> = precision
        .iter()
        .map(|w| (w * sigma2 / se).abs() < crit)
        .collect();
    Ok(PrecisionCheck {
        bit,
        equivalent: slope_zero == precision_zero,
        masks,
        slopes,
        precision,
        slope_zero,
        precision_zero,
    })
}
