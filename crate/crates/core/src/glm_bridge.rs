//! Exact translation between generalized linear model coefficients and
//! BELIEF slopes on a saturated binary design.
//!
//! Both coefficient vectors are indexed by interaction mask. A GLM with link
//! `g` on the expectation scale `(-1, 1)` gives cell expectations
//! `g_inv(H gamma)`, and those are `H beta`, so
//! `beta = 2^-P H g_inv(H gamma)` and `gamma = 2^-P H g(H beta)`.
//!
//! Links act on the expectation scale: logit is `g_inv(x) = tanh(x / 2)` and
//! probit is `g_inv(x) = 2 Phi(x) - 1`.

use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::bitalgebra::{inverse_wht, log2_len, wht, BitLabel, InteractionMask, XorKernelMatrix};
use crate::error::{BeliefError, Result};
use crate::expansion::MAX_TOTAL_BITS;
use crate::special::{integrate_tensor, norm_pdf, signed_norm_cdf};

/// A strictly increasing link between `(-1, 1)` and the real line.
pub trait LinkFunction {
    fn name(&self) -> &str;
    fn g(&self, mu: f64) -> f64;
    fn g_inv(&self, eta: f64) -> f64;
    fn g_inv_deriv(&self, eta: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Link {
    Logit,
    Probit,
    /// `g_inv(x) = scale * x`; only valid while `|scale * x| < 1`.
    Linear {
        scale: f64,
    },
}

impl LinkFunction for Link {
    fn name(&self) -> &str {
        match self {
            Link::Logit => "logit",
            Link::Probit => "probit",
            Link::Linear { .. } => "linear",
        }
    }

    fn g(&self, mu: f64) -> f64 {
        match *self {
            Link::Logit => 2.0 * mu.atanh(),
            Link::Probit => {
                // Inverse of the tail mass 1 - |mu|, refined by one Newton step.
                let tail = 1.0 - mu.abs();
                let mut x = SQRT_2 * erfc_inv(tail);
                if x.is_finite() && x > 0.0 {
                    let resid = libm::erfc(x / SQRT_2) - tail;
                    x += resid / (2.0 * norm_pdf(x));
                }
                x.copysign(mu)
            }
            Link::Linear { scale } => mu / scale,
        }
    }

    fn g_inv(&self, eta: f64) -> f64 {
        match *self {
            Link::Logit => (0.5 * eta).tanh(),
            Link::Probit => signed_norm_cdf(eta),
            Link::Linear { scale } => scale * eta,
        }
    }

    fn g_inv_deriv(&self, eta: f64) -> f64 {
        match *self {
            Link::Logit => {
                let c = (0.5 * eta).cosh();
                0.5 / (c * c)
            }
            Link::Probit => 2.0 * norm_pdf(eta),
            Link::Linear { scale } => scale,
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Link {
    type Err = BeliefError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logit" => Ok(Link::Logit),
            "probit" => Ok(Link::Probit),
            "linear" | "identity" => Ok(Link::Linear { scale: 1.0 }),
            other => Err(BeliefError::Config(format!("unknown link `{other}`"))),
        }
    }
}

/// A user-supplied link made of three closures.
pub struct CustomLink {
    pub name: String,
    pub g: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub g_inv: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    pub g_inv_deriv: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl LinkFunction for CustomLink {
    fn name(&self) -> &str {
        &self.name
    }
    fn g(&self, mu: f64) -> f64 {
        (self.g)(mu)
    }
    fn g_inv(&self, eta: f64) -> f64 {
        (self.g_inv)(eta)
    }
    fn g_inv_deriv(&self, eta: f64) -> f64 {
        (self.g_inv_deriv)(eta)
    }
}

/// GLM coefficients indexed by interaction mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GlmCoefs {
    pub gamma: Vec<f64>,
}

impl GlmCoefs {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        log2_len(gamma.len())?;
        check_finite(&gamma)?;
        Ok(Self { gamma })
    }

    /// Linear predictor of every cell, `H gamma`.
    pub fn cell_predictors(&self) -> Result<Vec<f64>> {
        wht(&self.gamma)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(index) => Err(BeliefError::NonFinite { index }),
        None => Ok(()),
    }
}

fn apply_link_inverse<L: LinkFunction + ?Sized>(eta: &[f64], link: &L) -> Result<Vec<f64>> {
    eta.iter()
        .map(|&e| {
            let mu = link.g_inv(e);
            if mu.is_finite() && mu.abs() < 1.0 {
                Ok(mu)
            } else {
                Err(BeliefError::LinkRange { eta: e, value: mu })
            }
        })
        .collect()
}

pub fn glm_to_belief<L: LinkFunction + ?Sized>(gamma: &[f64], link: &L) -> Result<Vec<f64>> {
    check_finite(gamma)?;
    let eta = wht(gamma)?;
    inverse_wht(&apply_link_inverse(&eta, link)?)
}

/// Fails with [`BeliefError::Separation`] when a cell expectation reaches
/// `+/-1`, since no finite GLM coefficients reproduce it.
pub fn belief_to_glm<L: LinkFunction + ?Sized>(beta: &[f64], link: &L) -> Result<Vec<f64>> {
    check_finite(beta)?;
    let mu = wht(beta)?;
    if let Some((cell, &value)) = mu
        .iter()
        .enumerate()
        .find(|(_, m)| m.is_nan() || m.abs() >= 1.0)
    {
        return Err(BeliefError::Separation { cell, value });
    }
    let eta: Vec<f64> = mu.iter().map(|&m| link.g(m)).collect();
    check_finite(&eta)?;
    inverse_wht(&eta)
}

/// Jacobian of `gamma -> beta`, `2^-P H diag(g_inv'(H gamma)) H`.
pub fn taylor_sensitivity<L: LinkFunction + ?Sized>(
    gamma: &[f64],
    link: &L,
) -> Result<XorKernelMatrix> {
    check_finite(gamma)?;
    let eta = wht(gamma)?;
    let d: Vec<f64> = eta.iter().map(|&e| link.g_inv_deriv(e)).collect();
    XorKernelMatrix::from_diagonal(&d, 1.0 / gamma.len() as f64)
}

/// Adjusts `gamma[mask]` until `beta[mask]` vanishes, holding the other GLM
/// coefficients fixed. Returns the adjusted coefficient vector.
///
/// `beta[mask]` is strictly increasing in `gamma[mask]` for any increasing
/// link, so the root is unique and bisection always converges once bracketed.
pub fn solve_slope_null<L: LinkFunction + ?Sized>(
    gamma: &[f64],
    mask: usize,
    link: &L,
) -> Result<Vec<f64>> {
    if mask >= gamma.len() {
        return Err(BeliefError::InvalidArgument(format!(
            "mask {mask} out of range"
        )));
    }
    let mut work = gamma.to_vec();
    let mut slope_at = |x: f64| -> Result<f64> {
        work[mask] = x;
        Ok(glm_to_belief(&work, link)?[mask])
    };
    let start = gamma[mask];
    let f0 = slope_at(start)?;
    if f0 == 0.0 {
        return Ok(gamma.to_vec());
    }
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let mut step = 1.0;
    let (mut lo, mut hi) = (start, start);
    loop {
        let x = start + dir * step;
        if slope_at(x)?.signum() != f0.signum() {
            if dir > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            break;
        }
        if dir > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        step *= 2.0;
        if step > 1e6 {
            return Err(BeliefError::Singular(format!(
                "no sign change for mask {mask}"
            )));
        }
    }
    let increasing_at_lo = slope_at(lo)? < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = slope_at(mid)?;
        if v == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (v < 0.0) == increasing_at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut out = gamma.to_vec();
    out[mask] = 0.5 * (lo + hi);
    Ok(out)
}

/// How the bits of a continuous covariate enter the linear predictor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BitWeighting {
    /// Depth-`i` bit weighted by `2^-i`, the dyadic expansion of `U`.
    Dyadic,
    /// Every bit weighted by 1.
    Unit,
}

/// How cell expectations are formed from the continuous model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HiddenInteractionMode {
    /// Plug the truncated expansion into the link, dropping the remainder.
    Truncated,
    /// Average the link over the uniform remainder below depth `D`, giving the
    /// exact `E[B | bits]` when every covariate is uniform on `(-1, 1)`.
    Conditional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenInteraction {
    pub mask: InteractionMask,
    pub label: String,
    pub beta: f64,
    pub beta_probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenInteractionReport {
    pub link: String,
    pub depth: usize,
    pub weighting: BitWeighting,
    pub mode: HiddenInteractionMode,
    pub bit_labels: Vec<BitLabel>,
    /// Effective coefficient on every mask of the truncated predictor.
    pub gamma: Vec<f64>,
    /// Expectation-scale slopes.
    pub beta: Vec<f64>,
    /// Slopes of `P(B = 1) = (1 + E) / 2`.
    pub beta_probability: Vec<f64>,
    /// Cross-variable masks with `|beta|` above the display threshold.
    pub interactions: Vec<HiddenInteraction>,
}

impl HiddenInteractionReport {
    pub fn slope(&self, labels: &[BitLabel]) -> Option<f64> {
        let bits: Vec<usize> = labels
            .iter()
            .map(|l| self.bit_labels.iter().position(|b| b == l))
            .collect::<Option<_>>()?;
        Some(self.beta[InteractionMask::from_bits(&bits).index()])
    }
}

/// Converts expectation-scale slopes to probability-scale slopes.
pub fn probability_scale(beta: &[f64]) -> Vec<f64> {
    beta.iter()
        .enumerate()
        .map(|(m, &b)| if m == 0 { (b + 1.0) / 2.0 } else { b / 2.0 })
        .collect()
}

pub const DISPLAY_THRESHOLD: f64 = 1e-12;
const QUADRATURE_NODES: usize = 16;

/// Slopes of `E[B | bits]` for the continuous model
/// `E[B | U] = g_inv(gamma_0 + sum_j gamma_j U_j)` with every `U_j` expanded
/// to `depth` bits.
pub fn hidden_interaction_report<L: LinkFunction + ?Sized>(
    intercept: f64,
    coefficients: &[f64],
    link: &L,
    depth: usize,
    weighting: BitWeighting,
    mode: HiddenInteractionMode,
) -> Result<HiddenInteractionReport> {
    let p = coefficients.len();
    if depth == 0 {
        return Err(BeliefError::Config("depth must be at least 1".into()));
    }
    if p == 0 || p * depth > MAX_TOTAL_BITS {
        return Err(BeliefError::Config(format!(
            "{p} variable(s) at depth {depth} exceed the cap of {MAX_TOTAL_BITS} bits"
        )));
    }
    if mode == HiddenInteractionMode::Conditional && weighting != BitWeighting::Dyadic {
        return Err(BeliefError::Config(
            "conditional mode requires dyadic bit weights".into(),
        ));
    }
    check_finite(&[intercept])?;
    check_finite(coefficients)?;

    let bits = p * depth;
    let bit_labels: Vec<BitLabel> = (0..p)
        .flat_map(|variable| (1..=depth).map(move |d| BitLabel { variable, depth: d }))
        .collect();
    let weight = |d: usize| match weighting {
        BitWeighting::Dyadic => 0.5f64.powi(d as i32),
        BitWeighting::Unit => 1.0,
    };
    let mut gamma = vec![0.0; 1 << bits];
    gamma[0] = intercept;
    for (k, l) in bit_labels.iter().enumerate() {
        gamma[1 << k] = coefficients[l.variable] * weight(l.depth);
    }

    let beta = match mode {
        HiddenInteractionMode::Truncated => glm_to_belief(&gamma, link)?,
        HiddenInteractionMode::Conditional => {
            let half_width = 0.5f64.powi(depth as i32);
            let eta = wht(&gamma)?;
            let mut cells = Vec::with_capacity(eta.len());
            for &e in &eta {
                let mu = integrate_tensor(
                    |r: &[f64]| {
                        link.g_inv(e + r.iter().zip(coefficients).map(|(x, c)| x * c).sum::<f64>())
                    },
                    p,
                    -half_width,
                    half_width,
                    QUADRATURE_NODES,
                ) / (2.0 * half_width).powi(p as i32);
                cells.push(mu);
            }
            inverse_wht(&cells)?
        }
    };
    let beta_probability = probability_scale(&beta);
    let interactions = (1..beta.len())
        .map(|m| InteractionMask(m as u32))
        .filter(|m| m.variable_count(&bit_labels) >= 2 && beta[m.index()].abs() > DISPLAY_THRESHOLD)
        .map(|m| HiddenInteraction {
            mask: m,
            label: m.label(&bit_labels),
            beta: beta[m.index()],
            beta_probability: beta_probability[m.index()],
        })
        .collect();
    Ok(HiddenInteractionReport {
        link: link.name().to_string(),
        depth,
        weighting,
        mode,
        bit_labels,
        gamma,
        beta,
        beta_probability,
        interactions,
    })
}
