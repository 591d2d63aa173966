//! Turning raw predictor columns into sign bits and dyadic cells.
//!
//! Every variable is first rescaled into `[-1, 1]` (through the empirical
//! CDF, an affine map from a declared range, or a two-level mapping for
//! binary columns) and then expanded greedily into `depth` sign bits. The
//! bits of all variables are concatenated in input order, depths ascending,
//! so global bit 0 is the first bit of the first variable.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bitalgebra::BitLabel;
use crate::error::{BeliefError, Result};

/// Upper bound on the total number of bits; `2^P` cells must fit in memory.
pub const MAX_TOTAL_BITS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum VariableKind {
    ContinuousEcdf,
    ContinuousKnownRange { lo: f64, hi: f64 },
    Binary { positive_level: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: VariableKind,
    #[serde(default = "default_depth")]
    pub depth: usize,
}

fn default_depth() -> usize {
    1
}

impl VariableSpec {
    pub fn ecdf(name: impl Into<String>, depth: usize) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::ContinuousEcdf,
            depth,
        }
    }

    pub fn known_range(name: impl Into<String>, lo: f64, hi: f64, depth: usize) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::ContinuousKnownRange { lo, hi },
            depth,
        }
    }

    pub fn binary(name: impl Into<String>, positive_level: impl Into<String>) -> Self {
        VariableSpec {
            name: name.into(),
            kind: VariableKind::Binary {
                positive_level: positive_level.into(),
            },
            depth: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConfig {
    pub variables: Vec<VariableSpec>,
}

impl ExpansionConfig {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        let cfg = ExpansionConfig { variables };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn total_bits(&self) -> usize {
        self.variables.iter().map(|v| v.depth).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.variables.is_empty() {
            return Err(BeliefError::Config("no predictor variables".into()));
        }
        let mut seen = BTreeSet::new();
        for v in &self.variables {
            if !seen.insert(v.name.as_str()) {
                return Err(BeliefError::Config(format!(
                    "duplicate variable `{}`",
                    v.name
                )));
            }
            if v.depth == 0 {
                return Err(BeliefError::Config(format!(
                    "variable `{}` has depth 0",
                    v.name
                )));
            }
            match &v.kind {
                VariableKind::Binary { .. } if v.depth != 1 => {
                    return Err(BeliefError::Config(format!(
                        "binary variable `{}` must have depth 1, got {}",
                        v.name, v.depth
                    )));
                }
                VariableKind::ContinuousKnownRange { lo, hi }
                    if !lo.is_finite() || !hi.is_finite() || lo >= hi =>
                {
                    return Err(BeliefError::Config(format!(
                        "variable `{}` has invalid range [{lo}, {hi}]",
                        v.name
                    )));
                }
                _ => {}
            }
        }
        let p = self.total_bits();
        if p > MAX_TOTAL_BITS {
            return Err(BeliefError::Config(format!(
                "total bits {p} exceeds the cap of {MAX_TOTAL_BITS}"
            )));
        }
        Ok(())
    }

    /// Global bit index -> (variable, depth), in canonical order.
    pub fn labels(&self) -> Vec<BitLabel> {
        self.variables
            .iter()
            .enumerate()
            .flat_map(|(j, v)| {
                (1..=v.depth).map(move |d| BitLabel {
                    variable: j,
                    depth: d,
                })
            })
            .collect()
    }
}

/// Maps values through the empirical CDF of a reference sample with midranks.
///
/// A value `x` receives rank `r = #{x_i < x} + (#{x_i = x} + 1) / 2` and is
/// rescaled to `(2r - n - 1) / n`. On the reference sample itself this is the
/// midrank transform; values outside the reference range land on `-1` or `1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcdfTransform {
    sorted: Vec<f64>,
}

impl EcdfTransform {
    pub fn fit(reference: &[f64]) -> Result<Self> {
        if reference.is_empty() {
            return Err(BeliefError::EmptyData);
        }
        if let Some(index) = reference.iter().position(|v| !v.is_finite()) {
            return Err(BeliefError::NonFinite { index });
        }
        let mut sorted = reference.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        Ok(EcdfTransform { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn apply(&self, x: f64) -> f64 {
        let n = self.sorted.len() as f64;
        let less = self.sorted.partition_point(|&v| v < x) as f64;
        let not_greater = self.sorted.partition_point(|&v| v <= x) as f64;
        let rank = less + (not_greater - less + 1.0) / 2.0;
        (2.0 * rank - n - 1.0) / n
    }
}

/// Midrank empirical-CDF rescaling into the open interval `(-1, 1)`.
pub fn ecdf_rescale(x: &[f64]) -> Result<Vec<f64>> {
    let t = EcdfTransform::fit(x)?;
    Ok(x.iter().map(|&v| t.apply(v)).collect())
}

/// Greedy dyadic expansion `u ~ sum_d A_d 2^-d` with ties sent to `-1`.
///
/// Dyadic rationals therefore end in repeating `+1`s, e.g. `0 -> (-1, +1, +1, ...)`.
pub fn binary_expand(u: f64, depth: usize) -> Result<Vec<i8>> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(BeliefError::OutOfDomain { value: u });
    }
    let mut out = Vec::with_capacity(depth);
    let mut r = u;
    let mut step = 0.5;
    for _ in 0..depth {
        let a: i8 = if r > 0.0 { 1 } else { -1 };
        r -= f64::from(a) * step;
        step *= 0.5;
        out.push(a);
    }
    Ok(out)
}

/// `sum_d A_d 2^-d`.
pub fn reconstruct(bits: &[i8]) -> f64 {
    let mut step = 0.5;
    let mut acc = 0.0;
    for &a in bits {
        acc += f64::from(a) * step;
        step *= 0.5;
    }
    acc
}

/// Cell-index bits for one variable: bit `d` set when the depth-`d+1` sign is `-1`.
fn expand_to_cell_bits(u: f64, depth: usize) -> u32 {
    let mut code = 0u32;
    let mut r = u;
    let mut step = 0.5;
    for d in 0..depth {
        if r > 0.0 {
            r -= step;
        } else {
            r += step;
            code |= 1 << d;
        }
        step *= 0.5;
    }
    code
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Text(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawColumn {
    pub name: String,
    pub data: ColumnData,
}

impl RawColumn {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        RawColumn {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn text(name: impl Into<String>, values: Vec<String>) -> Self {
        RawColumn {
            name: name.into(),
            data: ColumnData::Text(values),
        }
    }

    fn numbers(&self) -> Result<Vec<f64>> {
        match &self.data {
            ColumnData::Numeric(v) => {
                if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                    return Err(BeliefError::NonFinite { index });
                }
                Ok(v.clone())
            }
            ColumnData::Text(v) => v
                .iter()
                .enumerate()
                .map(|(row, s)| {
                    let t = s.trim();
                    t.parse::<f64>()
                        .ok()
                        .filter(|x| x.is_finite())
                        .ok_or_else(|| BeliefError::Parse {
                            column: self.name.clone(),
                            row,
                            value: s.clone(),
                        })
                })
                .collect(),
        }
    }

    fn levels(&self) -> Vec<String> {
        let set: BTreeSet<String> = match &self.data {
            ColumnData::Numeric(v) => v.iter().map(|x| x.to_string()).collect(),
            ColumnData::Text(v) => v.iter().map(|s| s.trim().to_string()).collect(),
        };
        set.into_iter().collect()
    }

    fn is_level(&self, row: usize, level: &str) -> bool {
        match &self.data {
            ColumnData::Numeric(v) => level
                .trim()
                .parse::<f64>()
                .map(|l| l == v[row])
                .unwrap_or(false),
            ColumnData::Text(v) => v[row].trim() == level.trim(),
        }
    }
}

/// Per-variable rescaling learned from the data a model was fitted on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FittedTransform {
    Ecdf { reference: EcdfTransform },
    KnownRange { lo: f64, hi: f64 },
    Binary { positive_level: String },
}

/// An expansion with frozen ECDF references. New observations receive the
/// same bit definitions as the training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expander {
    pub config: ExpansionConfig,
    pub transforms: Vec<FittedTransform>,
}

fn find_column<'a>(columns: &'a [RawColumn], name: &str) -> Result<&'a RawColumn> {
    columns
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| BeliefError::UnknownColumn(name.to_string()))
}

impl Expander {
    pub fn fit(columns: &[RawColumn], config: &ExpansionConfig) -> Result<Self> {
        config.validate()?;
        let mut transforms = Vec::with_capacity(config.variables.len());
        for v in &config.variables {
            let col = find_column(columns, &v.name)?;
            if col.data.is_empty() {
                return Err(BeliefError::EmptyData);
            }
            let t = match &v.kind {
                VariableKind::ContinuousEcdf => FittedTransform::Ecdf {
                    reference: EcdfTransform::fit(&col.numbers()?)?,
                },
                VariableKind::ContinuousKnownRange { lo, hi } => {
                    FittedTransform::KnownRange { lo: *lo, hi: *hi }
                }
                VariableKind::Binary { positive_level } => {
                    let levels = col.levels();
                    if levels.len() > 2 {
                        return Err(BeliefError::TooManyLevels {
                            column: v.name.clone(),
                            levels: levels.len(),
                        });
                    }
                    FittedTransform::Binary {
                        positive_level: positive_level.clone(),
                    }
                }
            };
            transforms.push(t);
        }
        Ok(Expander {
            config: config.clone(),
            transforms,
        })
    }

    pub fn total_bits(&self) -> usize {
        self.config.total_bits()
    }

    /// Expands the named columns into a panel using the frozen transforms.
    pub fn panel(&self, columns: &[RawColumn]) -> Result<BitPanel> {
        let mut n: Option<usize> = None;
        for v in &self.config.variables {
            let len = find_column(columns, &v.name)?.data.len();
            match n {
                None => n = Some(len),
                Some(m) if m != len => {
                    return Err(BeliefError::LengthMismatch {
                        expected: m,
                        actual: len,
                    })
                }
                _ => {}
            }
        }
        let n = n.unwrap_or(0);
        if n == 0 {
            return Err(BeliefError::EmptyData);
        }

        let mut cells = vec![0u32; n];
        let mut clamped = vec![0usize; self.config.variables.len()];
        let mut offset = 0usize;
        for (j, (v, t)) in self
            .config
            .variables
            .iter()
            .zip(&self.transforms)
            .enumerate()
        {
            let col = find_column(columns, &v.name)?;
            match t {
                FittedTransform::Binary { positive_level } => {
                    let levels = col.levels();
                    if levels.len() > 2 {
                        return Err(BeliefError::TooManyLevels {
                            column: v.name.clone(),
                            levels: levels.len(),
                        });
                    }
                    for (i, c) in cells.iter_mut().enumerate() {
                        if !col.is_level(i, positive_level) {
                            *c |= 1 << offset;
                        }
                    }
                }
                FittedTransform::Ecdf { reference } => {
                    for (c, x) in cells.iter_mut().zip(col.numbers()?) {
                        *c |= expand_to_cell_bits(reference.apply(x), v.depth) << offset;
                    }
                }
                FittedTransform::KnownRange { lo, hi } => {
                    for (c, x) in cells.iter_mut().zip(col.numbers()?) {
                        let u = 2.0 * (x - lo) / (hi - lo) - 1.0;
                        let u = if u < -1.0 {
                            clamped[j] += 1;
                            -1.0
                        } else if u > 1.0 {
                            clamped[j] += 1;
                            1.0
                        } else {
                            u
                        };
                        *c |= expand_to_cell_bits(u, v.depth) << offset;
                    }
                }
            }
            offset += v.depth;
        }
        Ok(BitPanel {
            n,
            total_bits: offset,
            cells,
            labels: self.config.labels(),
            clamped,
        })
    }
}

/// Per-observation bits, stored as the cell index of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPanel {
    pub n: usize,
    pub total_bits: usize,
    pub cells: Vec<u32>,
    pub labels: Vec<BitLabel>,
    /// Known-range values clamped into `[-1, 1]`, per variable.
    pub clamped: Vec<usize>,
}

impl BitPanel {
    /// Builds a panel directly from sign rows; used for already-binary data.
    pub fn from_sign_rows(rows: &[Vec<i8>], total_bits: usize) -> Result<Self> {
        if total_bits > MAX_TOTAL_BITS {
            return Err(BeliefError::Config(format!(
                "total bits {total_bits} exceeds the cap of {MAX_TOTAL_BITS}"
            )));
        }
        let mut cells = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != total_bits {
                return Err(BeliefError::LengthMismatch {
                    expected: total_bits,
                    actual: row.len(),
                });
            }
            let mut c = 0u32;
            for (k, &s) in row.iter().enumerate() {
                match s {
                    1 => {}
                    -1 => c |= 1 << k,
                    other => {
                        return Err(BeliefError::InvalidArgument(format!(
                            "row {i} bit {k}: sign {other} is not -1 or +1"
                        )))
                    }
                }
            }
            cells.push(c);
        }
        let labels = (0..total_bits)
            .map(|k| BitLabel {
                variable: k,
                depth: 1,
            })
            .collect();
        Ok(BitPanel {
            n: rows.len(),
            total_bits,
            cells,
            labels,
            clamped: vec![0; total_bits],
        })
    }

    pub fn from_cells(cells: Vec<u32>, total_bits: usize, labels: Vec<BitLabel>) -> Self {
        BitPanel {
            n: cells.len(),
            total_bits,
            cells,
            clamped: vec![0; labels.len()],
            labels,
        }
    }

    pub fn num_cells(&self) -> usize {
        1 << self.total_bits
    }

    pub fn bit(&self, row: usize, k: usize) -> i8 {
        if (self.cells[row] >> k) & 1 == 1 {
            -1
        } else {
            1
        }
    }

    pub fn row_bits(&self, row: usize) -> Vec<i8> {
        (0..self.total_bits).map(|k| self.bit(row, k)).collect()
    }
}

/// Fits the expansion on `columns` and expands the same columns.
pub fn build_panel(columns: &[RawColumn], config: &ExpansionConfig) -> Result<BitPanel> {
    Expander::fit(columns, config)?.panel(columns)
}
