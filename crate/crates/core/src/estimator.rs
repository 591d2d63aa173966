//! Slope estimation from per-cell sufficient statistics.
//!
//! With `A` the `n x 2^P` matrix of observed interaction rows, `A'A` equals
//! `H diag(n_t) H` and `A'B` equals `H s`. Every estimator below therefore
//! reduces to choosing a fitted expectation `w_t` per cell and returning
//! `beta = 2^-P H w`:
//!
//! * least squares: `w_t = s_t / n_t` (requires every cell occupied);
//! * Moore-Penrose: the same, with `w_t = 0` on empty cells;
//! * ridge: `w_t = s_t / (n_t + lambda 2^-P)`.
//!
//! None of them ever materialises the design matrix.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bitalgebra::{inverse_wht, log2_len, wht, XorKernelMatrix};
use crate::error::{BeliefError, Result};
use crate::expansion::{BitPanel, MAX_TOTAL_BITS};

/// Default tolerance for declaring a fit separated.
pub const SEPARATION_TOL: f64 = 1e-8;
/// Tolerance used by [`check_bounds`].
pub const BOUND_TOL: f64 = 1e-9;
/// `1 - fitted^2` at or below this is treated as a deterministic cell.
const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Observation counts and response sums per cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellTable {
    bits: usize,
    counts: Vec<u64>,
    sums: Vec<i64>,
}

impl CellTable {
    pub fn empty(bits: usize) -> Result<Self> {
        if bits > MAX_TOTAL_BITS {
            return Err(BeliefError::Config(format!(
                "total bits {bits} exceeds the cap of {MAX_TOTAL_BITS}"
            )));
        }
        Ok(CellTable {
            bits,
            counts: vec![0; 1 << bits],
            sums: vec![0; 1 << bits],
        })
    }

    pub fn from_parts(counts: Vec<u64>, sums: Vec<i64>) -> Result<Self> {
        let bits = log2_len(counts.len())?;
        if sums.len() != counts.len() {
            return Err(BeliefError::LengthMismatch {
                expected: counts.len(),
                actual: sums.len(),
            });
        }
        for (t, (&c, &s)) in counts.iter().zip(&sums).enumerate() {
            if s.unsigned_abs() > c || (c - s.unsigned_abs()) % 2 != 0 {
                return Err(BeliefError::InvalidArgument(format!(
                    "cell {t}: sum {s} is not attainable with {c} responses of +/-1"
                )));
            }
        }
        Ok(CellTable { bits, counts, sums })
    }

    /// Adds one observation with response `b` in cell `cell`.
    pub fn push(&mut self, cell: usize, b: i8) {
        self.counts[cell] += 1;
        self.sums[cell] += i64::from(b);
    }

    /// Adds the statistics of `other`; aggregation over disjoint row sets is additive.
    pub fn merge(&mut self, other: &CellTable) -> Result<()> {
        if other.bits != self.bits {
            return Err(BeliefError::LengthMismatch {
                expected: self.num_cells(),
                actual: other.num_cells(),
            });
        }
        for t in 0..self.num_cells() {
            self.counts[t] += other.counts[t];
            self.sums[t] += other.sums[t];
        }
        Ok(())
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn num_cells(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn sums(&self) -> &[i64] {
        &self.sums
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self, cell: usize) -> Option<f64> {
        (self.counts[cell] > 0).then(|| self.sums[cell] as f64 / self.counts[cell] as f64)
    }

    /// Cell means with empty cells set to 0.
    pub fn means_or_zero(&self) -> Vec<f64> {
        (0..self.num_cells())
            .map(|t| self.mean(t).unwrap_or(0.0))
            .collect()
    }

    pub fn empty_cells(&self) -> Vec<usize> {
        (0..self.num_cells())
            .filter(|&t| self.counts[t] == 0)
            .collect()
    }

    /// Occupied cells whose responses are all equal.
    pub fn deterministic_cells(&self) -> Vec<usize> {
        (0..self.num_cells())
            .filter(|&t| self.counts[t] > 0 && self.sums[t].unsigned_abs() == self.counts[t])
            .collect()
    }
}

/// Reduces a panel and `+/-1` responses to per-cell counts and sums.
pub fn aggregate(panel: &BitPanel, response: &[i8]) -> Result<CellTable> {
    if response.len() != panel.n {
        return Err(BeliefError::LengthMismatch {
            expected: panel.n,
            actual: response.len(),
        });
    }
    let mut table = CellTable::empty(panel.total_bits)?;
    for (row, (&cell, &b)) in panel.cells.iter().zip(response).enumerate() {
        if b != 1 && b != -1 {
            return Err(BeliefError::InvalidResponse {
                row,
                value: i64::from(b),
            });
        }
        table.push(cell as usize, b);
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Lse,
    MoorePenrose,
    Ridge,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimatorKind::Lse => "lse",
            EstimatorKind::MoorePenrose => "moore-penrose",
            EstimatorKind::Ridge => "ridge",
        })
    }
}

/// Asymptotic covariance of the slopes, `2^-2P H diag(D) H / n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeCovariance {
    pub matrix: XorKernelMatrix,
    /// Common variance of every slope, `tr(D) / (2^2P n)`.
    pub per_slope_variance: f64,
    /// Plug-in `D_t = (1 - fitted_t^2) / (n_t / n)`.
    pub plug_in: Vec<f64>,
    /// Cells with a deterministic response; their `D_t` is 0.
    pub degenerate_cells: Vec<usize>,
}

impl SlopeCovariance {
    pub fn std_error(&self) -> f64 {
        self.per_slope_variance.sqrt()
    }

    pub fn is_degenerate(&self) -> bool {
        !self.degenerate_cells.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefFit {
    pub bits: usize,
    pub kind: EstimatorKind,
    pub lambda: f64,
    /// Slopes indexed by interaction mask.
    pub beta: Vec<f64>,
    /// Fitted expectation per cell, `H beta`; exactly 0 on empty cells.
    pub cell_values: Vec<f64>,
    pub empty_cells: Vec<usize>,
    pub n: u64,
    pub covariance: Option<SlopeCovariance>,
}

impl BeliefFit {
    fn from_cell_values(
        kind: EstimatorKind,
        lambda: f64,
        cell_values: Vec<f64>,
        table: &CellTable,
    ) -> Result<Self> {
        let beta = inverse_wht(&cell_values)?;
        Ok(BeliefFit {
            bits: table.bits(),
            kind,
            lambda,
            beta,
            cell_values,
            empty_cells: table.empty_cells(),
            n: table.n(),
            covariance: None,
        })
    }

    /// Rebuilds a fit from stored slopes (e.g. a persisted model).
    pub fn from_beta(
        kind: EstimatorKind,
        lambda: f64,
        beta: Vec<f64>,
        empty_cells: Vec<usize>,
        n: u64,
    ) -> Result<Self> {
        let bits = log2_len(beta.len())?;
        let mut cell_values = wht(&beta)?;
        for &t in &empty_cells {
            if t >= cell_values.len() {
                return Err(BeliefError::InvalidArgument(format!(
                    "empty cell {t} out of range"
                )));
            }
            if matches!(kind, EstimatorKind::MoorePenrose | EstimatorKind::Ridge) {
                cell_values[t] = 0.0;
            }
        }
        Ok(BeliefFit {
            bits,
            kind,
            lambda,
            beta,
            cell_values,
            empty_cells,
            n,
            covariance: None,
        })
    }

    pub fn num_cells(&self) -> usize {
        self.beta.len()
    }

    pub fn l2_norm(&self) -> f64 {
        self.beta.iter().map(|b| b * b).sum::<f64>().sqrt()
    }

    pub fn with_covariance(mut self, cov: SlopeCovariance) -> Self {
        self.covariance = Some(cov);
        self
    }
}

/// Ordinary least squares; fails when any cell is empty.
pub fn fit_lse(table: &CellTable) -> Result<BeliefFit> {
    let empty = table.empty_cells();
    if !empty.is_empty() {
        return Err(BeliefError::SingularDesign { cells: empty });
    }
    BeliefFit::from_cell_values(EstimatorKind::Lse, 0.0, table.means_or_zero(), table)
}

/// Minimum-norm least squares; empty cells predict expectation 0.
pub fn fit_mp(table: &CellTable) -> Result<BeliefFit> {
    if table.n() == 0 {
        return Err(BeliefError::EmptyData);
    }
    BeliefFit::from_cell_values(
        EstimatorKind::MoorePenrose,
        0.0,
        table.means_or_zero(),
        table,
    )
}

/// Ridge regression with penalty `lambda * ||beta||^2`.
pub fn fit_ridge(table: &CellTable, lambda: f64) -> Result<BeliefFit> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(BeliefError::InvalidLambda(lambda));
    }
    let shrink = lambda / table.num_cells() as f64;
    let w = table
        .counts()
        .iter()
        .zip(table.sums())
        .map(|(&c, &s)| s as f64 / (c as f64 + shrink))
        .collect();
    BeliefFit::from_cell_values(EstimatorKind::Ridge, lambda, w, table)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub expectation: f64,
    pub prob_plus: f64,
}

/// Fitted `E[B | cell]` and `P(B = +1 | cell) = (1 + E) / 2`.
pub fn predict(fit: &BeliefFit, cell: usize) -> Result<Prediction> {
    let e = *fit
        .cell_values
        .get(cell)
        .ok_or_else(|| BeliefError::InvalidArgument(format!("cell {cell} out of range")))?;
    Ok(Prediction {
        expectation: e,
        prob_plus: (1.0 + e) / 2.0,
    })
}

/// Plug-in asymptotic covariance of the slopes.
pub fn covariance(fit: &BeliefFit, table: &CellTable) -> Result<SlopeCovariance> {
    covariance_from_counts(fit, table.counts())
}

/// Same as [`covariance`], using only the cell counts and the fitted cell
/// expectations; cells fitted at `+/-1` get `D_t = 0`.
pub fn covariance_from_counts(fit: &BeliefFit, counts: &[u64]) -> Result<SlopeCovariance> {
    if fit.num_cells() != counts.len() {
        return Err(BeliefError::LengthMismatch {
            expected: counts.len(),
            actual: fit.num_cells(),
        });
    }
    let empty: Vec<usize> = (0..counts.len()).filter(|&t| counts[t] == 0).collect();
    if !empty.is_empty() {
        return Err(BeliefError::SingularDesign { cells: empty });
    }
    let n = counts.iter().sum::<u64>() as f64;
    let mut degenerate = Vec::new();
    let plug_in: Vec<f64> = counts
        .iter()
        .zip(&fit.cell_values)
        .enumerate()
        .map(|(t, (&c, &f))| {
            let v = 1.0 - f * f;
            if v <= DEGENERATE_VARIANCE {
                degenerate.push(t);
                0.0
            } else {
                v / (c as f64 / n)
            }
        })
        .collect();
    let cells = counts.len() as f64;
    let scale = 1.0 / (cells * cells * n);
    let matrix = XorKernelMatrix::from_diagonal(&plug_in, scale)?;
    let per_slope_variance = plug_in.iter().sum::<f64>() * scale;
    Ok(SlopeCovariance {
        matrix,
        per_slope_variance,
        plug_in,
        degenerate_cells: degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    /// `||H beta||_inf`.
    pub cell_max: f64,
    /// `||A beta||_inf` over the observed rows.
    pub row_max: f64,
    pub l2_norm: f64,
    /// `1 - value` for the three bounds, in the order above.
    pub slack: [f64; 3],
    /// Whether each bound holds within [`BOUND_TOL`]. The norm bound is only
    /// claimed for least-squares type fits and always passes for ridge.
    pub holds: [bool; 3],
}

impl BoundsReport {
    pub fn all_hold(&self) -> bool {
        self.holds.iter().all(|&h| h)
    }
}

/// Checks `||H beta||_inf <= 1`, `||A beta||_inf <= 1` and `||beta||_2 <= 1`.
pub fn check_bounds(fit: &BeliefFit, panel: &BitPanel) -> Result<BoundsReport> {
    let cell_values = wht(&fit.beta)?;
    let cell_max = cell_values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let row_max = panel
        .cells
        .iter()
        .map(|&c| cell_values.get(c as usize).copied().map(f64::abs))
        .try_fold(0.0f64, |m, v| v.map(|v| m.max(v)))
        .ok_or_else(|| BeliefError::InvalidArgument("panel does not match the fit".into()))?;
    let l2_norm = fit.l2_norm();
    let norm_claimed = fit.kind != EstimatorKind::Ridge;
    Ok(BoundsReport {
        cell_max,
        row_max,
        l2_norm,
        slack: [1.0 - cell_max, 1.0 - row_max, 1.0 - l2_norm],
        holds: [
            cell_max <= 1.0 + BOUND_TOL,
            row_max <= 1.0 + BOUND_TOL,
            !norm_claimed || l2_norm <= 1.0 + BOUND_TOL,
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    /// `||beta||_2 >= 1 - tol`.
    pub separated: bool,
    pub l2_norm: f64,
    /// `max_t | 1 - |(H beta)_t| |`: distance of the fitted cells from a vertex.
    pub vertex_gap: f64,
    pub at_vertex: bool,
    /// Cells predicting `+1` when separated; `B = +1` exactly on this event.
    pub event_cells: Vec<usize>,
}

/// Detects perfect separation of the sample from the slope vector.
pub fn detect_separation(fit: &BeliefFit, tol: f64) -> Result<SeparationReport> {
    let l2_norm = fit.l2_norm();
    let cell_values = wht(&fit.beta)?;
    let vertex_gap = cell_values
        .iter()
        .fold(0.0f64, |m, v| m.max((1.0 - v.abs()).abs()));
    let separated = l2_norm >= 1.0 - tol;
    let event_cells = if separated {
        cell_values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0.0)
            .map(|(t, _)| t)
            .collect()
    } else {
        Vec::new()
    };
    Ok(SeparationReport {
        separated,
        l2_norm,
        vertex_gap,
        at_vertex: vertex_gap <= tol,
        event_cells,
    })
}

/// Whether the fit reproduces every observed response, i.e. all occupied
/// cells are deterministic and fitted exactly.
pub fn fits_exactly(fit: &BeliefFit, table: &CellTable, tol: f64) -> bool {
    (0..table.num_cells()).all(|t| match table.mean(t) {
        None => true,
        Some(m) => m.abs() == 1.0 && (fit.cell_values[t] - m).abs() <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DegeneracyCase {
    /// Every cell observed and no cell deterministic.
    Regular,
    /// Every cell observed, some cell has a deterministic response.
    DeterministicCells,
    /// Some cell unobserved in the sample.
    EmptyCells,
}

impl DegeneracyCase {
    pub fn number(self) -> u8 {
        match self {
            DegeneracyCase::Regular => 1,
            DegeneracyCase::DeterministicCells => 2,
            DegeneracyCase::EmptyCells => 3,
        }
    }
}

pub const STRUCTURAL_ZERO_NOTE: &str = "an empty sample cell cannot be told apart from a cell with zero \
population probability (case 4); slopes are then identified only under the convention that such cells \
have expectation 0, which the Moore-Penrose and ridge fits adopt";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyReport {
    pub case: DegeneracyCase,
    pub separated_cells: Vec<usize>,
    pub empty_cells: Vec<usize>,
    pub note: Option<String>,
}

pub fn classify_degeneracy(table: &CellTable) -> DegeneracyReport {
    let empty_cells = table.empty_cells();
    let separated_cells = table.deterministic_cells();
    let case = if !empty_cells.is_empty() {
        DegeneracyCase::EmptyCells
    } else if !separated_cells.is_empty() {
        DegeneracyCase::DeterministicCells
    } else {
        DegeneracyCase::Regular
    };
    let note = (case == DegeneracyCase::EmptyCells).then(|| STRUCTURAL_ZERO_NOTE.to_string());
    DegeneracyReport {
        case,
        separated_cells,
        empty_cells,
        note,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitalgebra::hadamard_entry;

    fn table(counts: &[u64], sums: &[i64]) -> CellTable {
        CellTable::from_parts(counts.to_vec(), sums.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn aggregate_small_panel() {
        let panel = BitPanel::from_sign_rows(&[vec![1], vec![1], vec![-1]], 1).unwrap();
        let t = aggregate(&panel, &[1, 1, -1]).unwrap();
        assert_eq!(t.counts(), &[2, 1]);
        assert_eq!(t.sums(), &[2, -1]);
    }

    #[test]
    fn aggregate_errors_and_empty_panel() {
        let panel = BitPanel::from_sign_rows(&[vec![1], vec![-1]], 1).unwrap();
        assert!(matches!(
            aggregate(&panel, &[1]),
            Err(BeliefError::LengthMismatch { .. })
        ));
        assert_eq!(
            aggregate(&panel, &[1, 0]),
            Err(BeliefError::InvalidResponse { row: 1, value: 0 })
        );

        let empty = BitPanel::from_cells(vec![], 2, vec![]);
        let t = aggregate(&empty, &[]).unwrap();
        assert_eq!(t.n(), 0);
        assert!(matches!(
            fit_lse(&t),
            Err(BeliefError::SingularDesign { .. })
        ));
        assert_eq!(fit_mp(&t), Err(BeliefError::EmptyData));
    }

    #[test]
    fn aggregate_is_additive() {
        let cells = vec![0u32, 3, 1, 1, 2, 0, 3];
        let b = vec![1i8, -1, 1, 1, -1, -1, 1];
        let whole = aggregate(&BitPanel::from_cells(cells.clone(), 2, vec![]), &b).unwrap();
        let mut first = aggregate(
            &BitPanel::from_cells(cells[..3].to_vec(), 2, vec![]),
            &b[..3],
        )
        .unwrap();
        let second = aggregate(
            &BitPanel::from_cells(cells[3..].to_vec(), 2, vec![]),
            &b[3..],
        )
        .unwrap();
        first.merge(&second).unwrap();
        assert_eq!(first, whole);
    }

    #[test]
    fn lse_worked_example() {
        // cell means (1, 0.5, -0.5, -1)
        let t = table(&[2, 4, 4, 2], &[2, 2, -2, -2]);
        let fit = fit_lse(&t).unwrap();
        assert!(close(&fit.beta, &[0.0, 0.25, 0.75, 0.0], 1e-15));
        let p = predict(&fit, 0).unwrap();
        assert_eq!(p.expectation, 1.0);
        assert_eq!(p.prob_plus, 1.0);
    }

    #[test]
    fn lse_single_bit_cases() {
        let fit = fit_lse(&table(&[3, 3], &[3, -3])).unwrap();
        assert!(close(&fit.beta, &[0.0, 1.0], 0.0));
        assert_eq!(fit.l2_norm(), 1.0);
        assert_eq!(predict(&fit, 0).unwrap().prob_plus, 1.0);
        assert_eq!(predict(&fit, 1).unwrap().prob_plus, 0.0);

        let fit = fit_lse(&table(&[5, 10], &[1, 2])).unwrap();
        assert!(close(&fit.beta, &[0.2, 0.0], 1e-15));
    }

    #[test]
    fn lse_rejects_empty_cells() {
        assert_eq!(
            fit_lse(&table(&[5, 0], &[3, 0])),
            Err(BeliefError::SingularDesign { cells: vec![1] })
        );
    }

    #[test]
    fn mp_empty_cell_is_agnostic() {
        let fit = fit_mp(&table(&[5, 0], &[3, 0])).unwrap();
        assert!(close(&fit.beta, &[0.3, 0.3], 1e-15));
        assert_eq!(predict(&fit, 1).unwrap().prob_plus, 0.5);
        assert_eq!(fit.empty_cells, vec![1]);
    }

    #[test]
    fn mp_equals_lse_on_full_tables() {
        let t = table(&[3, 5, 2, 7], &[1, -3, 2, 5]);
        assert_eq!(fit_mp(&t).unwrap().beta, fit_lse(&t).unwrap().beta);
    }

    #[test]
    fn ridge_examples() {
        let t = table(&[2, 2], &[2, -2]);
        let fit = fit_ridge(&t, 2.0).unwrap();
        assert!(close(&fit.beta, &[0.0, 2.0 / 3.0], 1e-15));

        let t = table(&[3, 5, 2, 7], &[1, -3, 2, 5]);
        let lse = fit_lse(&t).unwrap();
        assert!(close(&fit_ridge(&t, 1e-12).unwrap().beta, &lse.beta, 1e-12));
        let heavy = fit_ridge(&t, 1e12).unwrap();
        assert!(heavy.beta.iter().all(|b| b.abs() < 1e-10));
        assert!((0..4).all(|c| (predict(&heavy, c).unwrap().prob_plus - 0.5).abs() < 1e-10));

        assert_eq!(fit_ridge(&t, 0.0), Err(BeliefError::InvalidLambda(0.0)));
        assert!(fit_ridge(&t, -1.0).is_err());
    }

    #[test]
    fn ridge_empty_cell_predicts_half() {
        let fit = fit_ridge(&table(&[4, 0, 1, 3], &[2, 0, 1, -3]), 0.7).unwrap();
        assert_eq!(predict(&fit, 1).unwrap().prob_plus, 0.5);
    }

    #[test]
    fn predict_zero_beta() {
        let fit = BeliefFit::from_beta(EstimatorKind::Lse, 0.0, vec![0.0; 4], vec![], 0).unwrap();
        assert_eq!(
            predict(&fit, 2).unwrap(),
            Prediction {
                expectation: 0.0,
                prob_plus: 0.5
            }
        );
    }

    #[test]
    fn covariance_has_equal_diagonal() {
        let t = table(&[10, 20, 30, 40], &[2, -4, 10, 0]);
        let fit = fit_lse(&t).unwrap();
        let cov = covariance(&fit, &t).unwrap();
        let d = cov.matrix.to_dense();
        for (i, row) in d.iter().enumerate() {
            assert!((row[i] - cov.per_slope_variance).abs() < 1e-18);
        }
        let n = 100.0;
        for (a, row) in d.iter().enumerate() {
            for (b, &entry) in row.iter().enumerate() {
                let direct: f64 = (0..4)
                    .map(|c| {
                        let m = t.mean(c).unwrap();
                        let dd = (1.0 - m * m) / (t.counts()[c] as f64 / n);
                        f64::from(hadamard_entry(c, a)) * dd * f64::from(hadamard_entry(c, b))
                    })
                    .sum::<f64>()
                    / (16.0 * n);
                assert!((entry - direct).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn covariance_balanced_single_bit() {
        let t = table(&[50, 50], &[0, 0]);
        let cov = covariance(&fit_lse(&t).unwrap(), &t).unwrap();
        assert_eq!(cov.plug_in, vec![2.0, 2.0]);
        assert!((cov.per_slope_variance - 1.0 / 100.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_at_vertex_is_zero() {
        let t = table(&[4, 6], &[4, -6]);
        let cov = covariance(&fit_lse(&t).unwrap(), &t).unwrap();
        assert!(cov.matrix.kernel().iter().all(|&v| v == 0.0));
        assert_eq!(cov.degenerate_cells, vec![0, 1]);
    }

    #[test]
    fn covariance_requires_full_table() {
        let t = table(&[4, 0], &[2, 0]);
        let fit = fit_mp(&t).unwrap();
        assert!(matches!(
            covariance(&fit, &t),
            Err(BeliefError::SingularDesign { .. })
        ));
    }

    #[test]
    fn bounds_for_zero_beta() {
        let fit = BeliefFit::from_beta(EstimatorKind::Lse, 0.0, vec![0.0; 4], vec![], 0).unwrap();
        let panel = BitPanel::from_cells(vec![0, 1, 2, 3], 2, vec![]);
        let r = check_bounds(&fit, &panel).unwrap();
        assert_eq!(r.slack, [1.0, 1.0, 1.0]);
        assert!(r.all_hold());
    }

    #[test]
    fn separation_of_single_bit() {
        let t = table(&[3, 4, 2, 5], &[3, -4, 2, -5]);
        let fit = fit_lse(&t).unwrap();
        let s = detect_separation(&fit, SEPARATION_TOL).unwrap();
        assert!(s.separated && s.at_vertex);
        assert_eq!(s.event_cells, vec![0, 2]);
        assert!(close(&fit.beta, &[0.0, 1.0, 0.0, 0.0], 1e-15));
        assert!(fits_exactly(&fit, &t, SEPARATION_TOL));
    }

    #[test]
    fn noisy_data_not_separated() {
        let t = table(&[10, 10], &[8, -6]);
        let s = detect_separation(&fit_lse(&t).unwrap(), SEPARATION_TOL).unwrap();
        assert!(!s.separated && !s.at_vertex);
        assert!(s.event_cells.is_empty());
    }

    #[test]
    fn degeneracy_cases() {
        assert_eq!(
            classify_degeneracy(&table(&[5, 5], &[3, -1])).case,
            DegeneracyCase::Regular
        );
        let r = classify_degeneracy(&table(&[5, 5], &[5, -1]));
        assert_eq!(r.case, DegeneracyCase::DeterministicCells);
        assert_eq!(r.separated_cells, vec![0]);
        let r = classify_degeneracy(&table(&[5, 0], &[3, 0]));
        assert_eq!(r.case.number(), 3);
        assert_eq!(r.empty_cells, vec![1]);
        assert!(r.note.is_some());
    }

    #[test]
    fn from_parts_validation() {
        assert!(CellTable::from_parts(vec![1, 2, 3], vec![0, 0, 1]).is_err());
        assert!(CellTable::from_parts(vec![1, 2], vec![2, 0]).is_err());
        assert!(CellTable::from_parts(vec![2, 2], vec![1, 0]).is_err());
    }
}
