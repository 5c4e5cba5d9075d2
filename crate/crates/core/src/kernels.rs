//! Pointwise time-of-arrival kernels.
//!
//! For `0 < γ < 1` the operator `-μ(q p⁻¹ + p⁻¹ q)/2` is the integral operator
//! with kernel
//!
//! ```text
//! T_γ(q, q') = -μ/(4ħ sin γ) · (q + q') · (e^{iγ} H(q - q') + e^{-iγ} H(q' - q))
//! ```
//!
//! which is also the symmetric sum of its eigen-expansion
//! `-μ/(4ħ) (q + q') Σ_n e^{i(γ+nπ)(q-q')/l} / (γ + nπ)`. The `n = 0` term
//! diverges like `1/γ`; removing it leaves a finite part whose `γ → 0` limit
//! is the periodic kernel
//!
//! ```text
//! T_0(q, q') = -iμ/(4ħ) (q + q') sgn(q - q') + iμ/(4ħl) (q² - q'²).
//! ```
//!
//! Conventions: `H(0) = 1/2`, `sgn(0) = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhysicalConfig;

/// Below this `γ` the closed form is refused: `1/sin γ` amplifies round-off.
pub const CONDITIONING_GUARD: f64 = 1e-6;

/// A kernel sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub q: f64,
    pub q_prime: f64,
    pub value: Complex64,
}

/// Which kernel to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSelector {
    Closed,
    Series { n_terms: usize },
    ZeroMode,
    FinitePart,
    Periodic,
}

impl KernelSelector {
    pub fn name(&self) -> &'static str {
        match self {
            KernelSelector::Closed => "closed",
            KernelSelector::Series { .. } => "series",
            KernelSelector::ZeroMode => "zero_mode",
            KernelSelector::FinitePart => "finite_part",
            KernelSelector::Periodic => "periodic",
        }
    }

    pub fn evaluate(&self, cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<Complex64> {
        match *self {
            KernelSelector::Closed => kernel_closed(cfg, q, q_prime),
            KernelSelector::Series { n_terms } => kernel_series(cfg, q, q_prime, n_terms),
            KernelSelector::ZeroMode => zero_mode_term(cfg, q, q_prime),
            KernelSelector::FinitePart => kernel_finite_part(cfg, q, q_prime),
            KernelSelector::Periodic => kernel_periodic(cfg, q, q_prime),
        }
    }

    /// Checks that the kernel can be evaluated at all for `cfg`.
    pub fn check(&self, cfg: &PhysicalConfig) -> Result<()> {
        match self {
            KernelSelector::Periodic => Ok(()),
            KernelSelector::Closed | KernelSelector::FinitePart => {
                require_twisted(cfg)?;
                require_conditioned(cfg)
            }
            KernelSelector::Series { n_terms } => {
                require_twisted(cfg)?;
                if *n_terms == 0 {
                    return Err(Error::ValidationError("n_terms must be at least 1".into()));
                }
                Ok(())
            }
            KernelSelector::ZeroMode => require_twisted(cfg),
        }
    }

    /// Samples the kernel on every pair of `nodes` (row-major in `q`).
    pub fn sample(&self, cfg: &PhysicalConfig, nodes: &[f64]) -> Result<Vec<KernelPoint>> {
        self.check(cfg)?;
        let mut out = Vec::with_capacity(nodes.len() * nodes.len());
        for &q in nodes {
            for &q_prime in nodes {
                out.push(KernelPoint {
                    q,
                    q_prime,
                    value: self.evaluate(cfg, q, q_prime)?,
                });
            }
        }
        Ok(out)
    }
}

fn require_twisted(cfg: &PhysicalConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.is_periodic() {
        Err(Error::PeriodicGammaNotAllowed)
    } else {
        Ok(())
    }
}

fn require_conditioned(cfg: &PhysicalConfig) -> Result<()> {
    if cfg.gamma < CONDITIONING_GUARD {
        Err(Error::ConditioningError(cfg.gamma))
    } else {
        Ok(())
    }
}

fn check_pair(cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<()> {
    cfg.check_position(q)?;
    cfg.check_position(q_prime)
}

pub fn kernel_closed(cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<Complex64> {
    require_twisted(cfg)?;
    require_conditioned(cfg)?;
    check_pair(cfg, q, q_prime)?;
    let (s, c) = cfg.gamma.sin_cos();
    let prefactor = -cfg.mu * (q + q_prime) / (4.0 * cfg.hbar * s);
    let bracket = if q > q_prime {
        Complex64::new(c, s)
    } else if q < q_prime {
        Complex64::new(c, -s)
    } else {
        Complex64::new(c, 0.0)
    };
    Ok(bracket * prefactor)
}

/// Symmetric partial sum over `n = -n_terms..=n_terms`, accumulated in pairs
/// `(n, -n)` of increasing `|n|`.
pub fn kernel_series(cfg: &PhysicalConfig, q: f64, q_prime: f64, n_terms: usize) -> Result<Complex64> {
    require_twisted(cfg)?;
    if n_terms == 0 {
        return Err(Error::ValidationError("n_terms must be at least 1".into()));
    }
    check_pair(cfg, q, q_prime)?;
    let x = (q - q_prime) / cfg.l;
    let term = |n: f64| {
        let k = cfg.gamma + n * std::f64::consts::PI;
        let (s, c) = (k * x).sin_cos();
        Complex64::new(c, s) / k
    };
    let mut sum = term(0.0);
    for n in 1..=n_terms {
        let n = n as f64;
        sum += term(n) + term(-n);
    }
    Ok(sum * (-cfg.mu * (q + q_prime) / (4.0 * cfg.hbar)))
}

/// The `n = 0` term of the eigen-expansion.
pub fn zero_mode_term(cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<Complex64> {
    require_twisted(cfg)?;
    check_pair(cfg, q, q_prime)?;
    let (s, c) = (cfg.gamma * (q - q_prime) / cfg.l).sin_cos();
    let magnitude = -cfg.mu * (q + q_prime) / (4.0 * cfg.hbar * cfg.gamma);
    Ok(Complex64::new(c, s) * magnitude)
}

pub fn kernel_finite_part(cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<Complex64> {
    Ok(kernel_closed(cfg, q, q_prime)? - zero_mode_term(cfg, q, q_prime)?)
}

pub fn kernel_periodic(cfg: &PhysicalConfig, q: f64, q_prime: f64) -> Result<Complex64> {
    cfg.validate()?;
    check_pair(cfg, q, q_prime)?;
    let sgn = if q > q_prime {
        1.0
    } else if q < q_prime {
        -1.0
    } else {
        0.0
    };
    let scale = cfg.mu / (4.0 * cfg.hbar);
    let im = -scale * (q + q_prime) * sgn + scale * (q * q - q_prime * q_prime) / cfg.l;
    Ok(Complex64::new(0.0, im))
}
