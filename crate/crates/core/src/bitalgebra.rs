//! Interaction masks, Sylvester-Hadamard signs, the fast Walsh-Hadamard
//! transform and GF(2) subgroup arithmetic.
//!
//! Bit `k` of a cell index is set when bit `k` of the observation equals
//! `-1`. Bit `k` of a mask is set when bit `k` takes part in the product.
//! With those encodings the value of interaction `m` in cell `t` is
//! `(-1)^popcount(t & m)`, which is entry `(t, m)` of the Sylvester matrix.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{BeliefError, Result};

/// Position of one global bit: 0-based variable index and 1-based depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitLabel {
    pub variable: usize,
    pub depth: usize,
}

impl fmt::Display for BitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A_{{{},{}}}", self.variable + 1, self.depth)
    }
}

/// A product of bits. Multiplication of interactions is XOR of masks.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct InteractionMask(pub u32);

impl InteractionMask {
    pub const CONSTANT: InteractionMask = InteractionMask(0);

    pub fn from_bits(bits: &[usize]) -> Self {
        InteractionMask(bits.iter().fold(0u32, |m, &b| m | (1 << b)))
    }

    pub fn product(self, other: Self) -> Self {
        InteractionMask(self.0 ^ other.0)
    }

    pub fn is_constant(self) -> bool {
        self.0 == 0
    }

    pub fn contains_bit(self, bit: usize) -> bool {
        (self.0 >> bit) & 1 == 1
    }

    pub fn order(self) -> u32 {
        self.0.count_ones()
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Global bit indices taking part in the product, ascending.
    pub fn bit_indices(self) -> impl Iterator<Item = usize> {
        let m = self.0;
        (0..32).filter(move |b| (m >> b) & 1 == 1)
    }

    /// Symbolic name such as `A_{1,1}A_{2,1}`; the constant is `1`.
    pub fn label(self, labels: &[BitLabel]) -> String {
        if self.is_constant() {
            return "1".to_string();
        }
        self.bit_indices()
            .map(|b| match labels.get(b) {
                Some(l) => l.to_string(),
                None => format!("A_{{{}}}", b + 1),
            })
            .collect()
    }

    /// Number of distinct variables whose bits appear in the product.
    pub fn variable_count(self, labels: &[BitLabel]) -> usize {
        let mut vars: Vec<usize> = self.bit_indices().map(|b| labels[b].variable).collect();
        vars.sort_unstable();
        vars.dedup();
        vars.len()
    }
}

impl From<u32> for InteractionMask {
    fn from(m: u32) -> Self {
        InteractionMask(m)
    }
}

/// Entry `(t, m)` of the Sylvester-Hadamard matrix.
#[inline]
pub fn hadamard_entry(cell: usize, mask: usize) -> i8 {
    if (cell & mask).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Number of bits `P` such that `len == 2^P`.
pub fn log2_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(BeliefError::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Unnormalized in-place Walsh-Hadamard transform: `y_m = sum_t H[t,m] x_t`.
///
/// Applying it twice multiplies by `2^P`.
pub fn wht_in_place<T>(x: &mut [T]) -> Result<()>
where
    T: Copy + Add<Output = T> + Sub<Output = T>,
{
    let n = x.len();
    log2_len(n)?;
    let mut h = 1;
    while h < n {
        for block in x.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
    Ok(())
}

pub fn wht(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = x.to_vec();
    wht_in_place(&mut y)?;
    Ok(y)
}

/// `2^-P * H x`, the inverse of `H` applied to `x`.
pub fn inverse_wht(x: &[f64]) -> Result<Vec<f64>> {
    let mut y = wht(x)?;
    let scale = 1.0 / y.len() as f64;
    y.iter_mut().for_each(|v| *v *= scale);
    Ok(y)
}

/// Symmetric matrix of the form `scale * H diag(d) H`.
///
/// Entry `(a, b)` only depends on `a ^ b`, so the matrix is stored as its
/// first row `kernel[c] = scale * (H d)_c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorKernelMatrix {
    kernel: Vec<f64>,
}

impl XorKernelMatrix {
    pub fn from_diagonal(diag: &[f64], scale: f64) -> Result<Self> {
        let mut kernel = wht(diag)?;
        kernel.iter_mut().for_each(|v| *v *= scale);
        Ok(Self { kernel })
    }

    pub fn dim(&self) -> usize {
        self.kernel.len()
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.kernel[row ^ col]
    }

    pub fn diagonal_value(&self) -> f64 {
        self.kernel[0]
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(BeliefError::LengthMismatch {
                expected: self.dim(),
                actual: v.len(),
            });
        }
        Ok((0..self.dim())
            .map(|a| {
                v.iter()
                    .enumerate()
                    .map(|(b, x)| self.kernel[a ^ b] * x)
                    .sum()
            })
            .collect())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.kernel[a ^ b]).collect())
            .collect()
    }
}

/// GF(2) span of a set of masks, kept as a reduced echelon basis.
///
/// Each basis vector owns a pivot (its highest set bit) that no other basis
/// vector contains, and the basis is sorted by ascending pivot. Two
/// subgroups are equal exactly when their bases are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subgroup {
    basis: Vec<u32>,
}

fn pivot(m: u32) -> u32 {
    31 - m.leading_zeros()
}

impl Subgroup {
    pub fn trivial() -> Self {
        Subgroup { basis: Vec::new() }
    }

    /// The full group on `bits` bits.
    pub fn full(bits: usize) -> Self {
        Subgroup {
            basis: (0..bits).map(|b| 1u32 << b).collect(),
        }
    }

    pub fn span<I>(masks: I) -> Self
    where
        I: IntoIterator<Item = InteractionMask>,
    {
        let mut g = Subgroup::trivial();
        for m in masks {
            g.insert(m);
        }
        g
    }

    /// Adds a generator. Returns `false` when it was already a member.
    pub fn insert(&mut self, mask: InteractionMask) -> bool {
        let r = self.reduce(mask.0);
        if r == 0 {
            return false;
        }
        let p = pivot(r);
        for b in self.basis.iter_mut() {
            if (*b >> p) & 1 == 1 {
                *b ^= r;
            }
        }
        let pos = self.basis.partition_point(|&b| pivot(b) < p);
        self.basis.insert(pos, r);
        true
    }

    fn reduce(&self, mut m: u32) -> u32 {
        for &b in self.basis.iter().rev() {
            if (m >> pivot(b)) & 1 == 1 {
                m ^= b;
            }
        }
        m
    }

    pub fn member(&self, mask: InteractionMask) -> bool {
        self.reduce(mask.0) == 0
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn order(&self) -> u64 {
        1u64 << self.rank()
    }

    /// A generating set of minimal size: the reduced echelon basis.
    pub fn minimal_generators(&self) -> Vec<InteractionMask> {
        self.basis.iter().map(|&b| InteractionMask(b)).collect()
    }

    /// All `2^rank` members in ascending order.
    pub fn members(&self) -> Vec<InteractionMask> {
        let mut out = Vec::with_capacity(1 << self.rank());
        for sel in 0u64..(1u64 << self.rank()) {
            let m = self
                .basis
                .iter()
                .enumerate()
                .filter(|(i, _)| (sel >> i) & 1 == 1)
                .fold(0u32, |acc, (_, &b)| acc ^ b);
            out.push(InteractionMask(m));
        }
        out.sort_unstable();
        out
    }

    pub fn is_subgroup_of(&self, other: &Subgroup) -> bool {
        self.basis.iter().all(|&b| other.member(InteractionMask(b)))
    }
}
