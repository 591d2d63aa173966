//! JSON persistence of fitted models.
//!
//! Slopes are stored in ascending mask order alongside their symbolic
//! labels. The frozen expansion is optional; without it a model can still be
//! used for inference but not for scoring new raw data.

use serde::{Deserialize, Serialize};

use crate::bitalgebra::{BitLabel, InteractionMask};
use crate::error::{BeliefError, Result};
use crate::estimator::{BeliefFit, CellTable, EstimatorKind};
use crate::expansion::Expander;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefModel {
    #[serde(rename = "P")]
    pub total_bits: usize,
    /// Symbolic label of every mask, in mask order.
    pub labels: Vec<String>,
    pub estimator_kind: EstimatorKind,
    pub lambda: f64,
    pub beta: Vec<f64>,
    pub empty_cells: Vec<usize>,
    pub n: u64,
    pub counts: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bit_labels: Option<Vec<BitLabel>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<Expander>,
}

impl BeliefModel {
    pub fn new(
        fit: &BeliefFit,
        table: &CellTable,
        bit_labels: &[BitLabel],
        expansion: Option<Expander>,
    ) -> Self {
        let labels = (0..fit.num_cells())
            .map(|m| InteractionMask(m as u32).label(bit_labels))
            .collect();
        BeliefModel {
            total_bits: fit.bits,
            labels,
            estimator_kind: fit.kind,
            lambda: fit.lambda,
            beta: fit.beta.clone(),
            empty_cells: fit.empty_cells.clone(),
            n: fit.n,
            counts: table.counts().to_vec(),
            bit_labels: Some(bit_labels.to_vec()),
            expansion,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cells = 1usize.checked_shl(self.total_bits as u32).ok_or_else(|| {
            BeliefError::InvalidArgument(format!("P = {} is too large", self.total_bits))
        })?;
        for (what, len) in [
            ("beta", self.beta.len()),
            ("labels", self.labels.len()),
            ("counts", self.counts.len()),
        ] {
            if len != cells {
                return Err(BeliefError::InvalidArgument(format!(
                    "{what} has {len} entries, expected 2^P = {cells}"
                )));
            }
        }
        if self.counts.iter().sum::<u64>() != self.n {
            return Err(BeliefError::InvalidArgument(
                "counts do not sum to n".into(),
            ));
        }
        if let Some(i) = self.beta.iter().position(|b| !b.is_finite()) {
            return Err(BeliefError::NonFinite { index: i });
        }
        Ok(())
    }

    pub fn fit(&self) -> Result<BeliefFit> {
        self.validate()?;
        BeliefFit::from_beta(
            self.estimator_kind,
            self.lambda,
            self.beta.clone(),
            self.empty_cells.clone(),
            self.n,
        )
    }

    /// Recovers the per-cell response sums from the stored slopes and counts.
    ///
    /// The least-squares and Moore-Penrose fits store cell means, ridge
    /// stores `s_t / (n_t + lambda 2^-P)`; both invert exactly up to rounding.
    pub fn cell_table(&self) -> Result<CellTable> {
        let fit = self.fit()?;
        let shrink = match self.estimator_kind {
            EstimatorKind::Ridge => self.lambda / fit.num_cells() as f64,
            _ => 0.0,
        };
        let sums = self
            .counts
            .iter()
            .zip(&fit.cell_values)
            .map(|(&c, &w)| {
                let s = (w * (c as f64 + shrink)).round();
                if s.abs() > c as f64 {
                    Err(BeliefError::InvalidArgument(format!(
                        "stored slopes imply a response sum {s} in a cell of size {c}"
                    )))
                } else {
                    Ok(s as i64)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        CellTable::from_parts(self.counts.clone(), sums)
    }

    /// Per-bit labels, falling back to one variable per bit.
    pub fn bit_labels(&self) -> Vec<BitLabel> {
        self.bit_labels.clone().unwrap_or_else(|| {
            (0..self.total_bits)
                .map(|k| BitLabel {
                    variable: k,
                    depth: 1,
                })
                .collect()
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: BeliefModel = serde_json::from_str(s)
            .map_err(|e| BeliefError::InvalidArgument(format!("model JSON: {e}")))?;
        m.validate()?;
        Ok(m)
    }
}
