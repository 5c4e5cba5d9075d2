//! The canonical domain: states on which `[H, T] = iħ` holds.
//!
//! For each `n ≥ 1` the pair `{φ_n, φ_{-n}}` is rotated into a *span*
//! function and a *complement* function
//!
//! ```text
//! span(n)       = [(γ + nπ) φ_n + (nπ - γ) φ_{-n}] / √(2(γ² + π²n²))
//! complement(n) = i [(γ - nπ) φ_n + (γ + nπ) φ_{-n}] / √(2(γ² + π²n²))
//! ```
//!
//! which in position space are `(iγ sin + nπ cos)(nπq/l) e^{iγq/l}` and
//! `(iγ cos + nπ sin)(nπq/l) e^{iγq/l}` up to normalization. The domain is
//! the set of span combinations `Σ c_n span(n)` obeying the single linear
//! constraint `Σ w_n c_n = 0`, `w_n = (-1)^n n / √(γ² + π²n²)`, which is the
//! statement that the state and its derivative vanish at both walls.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{BasisSpec, PhysicalConfig, WaveState};
use crate::operators::{hamiltonian_matrix, toa_matrix_analytic};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    Span,
    Complement,
}

/// A span or complement function as (at most) two momentum coefficients.
///
/// The complex value of the function is
/// `phase · (coeff_plus φ_n + coeff_minus φ_{-n})`. For `complement(0)` only
/// `coeff_plus` (on `φ_0`) is used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainBasisFunction {
    pub n: i64,
    pub kind: DomainKind,
    pub coeff_plus: f64,
    pub coeff_minus: f64,
    pub phase: Complex64,
}

impl DomainBasisFunction {
    /// Momentum-basis coefficients as `(index, value)` pairs.
    pub fn components(&self) -> Vec<(i64, Complex64)> {
        if self.n == 0 {
            vec![(0, self.phase * self.coeff_plus)]
        } else {
            vec![
                (self.n, self.phase * self.coeff_plus),
                (-self.n, self.phase * self.coeff_minus),
            ]
        }
    }

    pub fn to_wave_state(&self, cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<WaveState> {
        let mut coeffs = DVector::zeros(basis.dim());
        for (k, c) in self.components() {
            let i = basis.position(k).ok_or(Error::IndexOutOfBasis(k))?;
            coeffs[i] += c;
        }
        WaveState::new(*cfg, basis.clone(), coeffs)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeff_plus * self.coeff_plus + self.coeff_minus * self.coeff_minus
    }
}

fn span_norm(gamma: f64, n: f64) -> f64 {
    (2.0 * (gamma * gamma + PI * PI * n * n)).sqrt()
}

pub fn span_function(cfg: &PhysicalConfig, n: i64) -> Result<DomainBasisFunction> {
    cfg.validate()?;
    if n < 1 {
        return Err(Error::IndexOutOfBasis(n));
    }
    let (g, k) = (cfg.gamma, n as f64 * PI);
    let norm = span_norm(g, n as f64);
    Ok(DomainBasisFunction {
        n,
        kind: DomainKind::Span,
        coeff_plus: (g + k) / norm,
        coeff_minus: (k - g) / norm,
        phase: Complex64::new(1.0, 0.0),
    })
}

pub fn complement_function(cfg: &PhysicalConfig, n: i64) -> Result<DomainBasisFunction> {
    cfg.validate()?;
    if n < 0 {
        return Err(Error::IndexOutOfBasis(n));
    }
    if n == 0 {
        return Ok(DomainBasisFunction {
            n,
            kind: DomainKind::Complement,
            coeff_plus: 1.0,
            coeff_minus: 0.0,
            phase: Complex64::new(1.0, 0.0),
        });
    }
    let (g, k) = (cfg.gamma, n as f64 * PI);
    let norm = span_norm(g, n as f64);
    Ok(DomainBasisFunction {
        n,
        kind: DomainKind::Complement,
        coeff_plus: (g - k) / norm,
        coeff_minus: (g + k) / norm,
        phase: Complex64::new(0.0, 1.0),
    })
}

/// The constraint weights `w_n`, `n = 1..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFunctional {
    pub gamma: f64,
    pub weights: Vec<f64>,
}

impl ConstraintFunctional {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// `Σ w_n c_n` over the common range, with compensated summation.
    pub fn apply(&self, coeffs: &[Complex64]) -> Complex64 {
        let (re, im): (Vec<f64>, Vec<f64>) = self
            .weights
            .iter()
            .zip(coeffs)
            .map(|(w, c)| (w * c.re, w * c.im))
            .unzip();
        Complex64::new(neumaier_sum(&re), neumaier_sum(&im))
    }

    /// `Σ |w_n c_n|`, the scale of round-off in [`apply`](Self::apply).
    fn magnitude(&self, coeffs: &[Complex64]) -> f64 {
        self.weights.iter().zip(coeffs).map(|(w, c)| (w * c.norm()).abs()).sum()
    }
}

fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn constraint_weights(cfg: &PhysicalConfig, n_max: usize) -> Result<ConstraintFunctional> {
    cfg.validate()?;
    if n_max == 0 {
        return Err(Error::ValidationError("n_max must be at least 1".into()));
    }
    let g = cfg.gamma;
    let weights = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sign * nf / (g * g + PI * PI * nf * nf).sqrt()
        })
        .collect();
    Ok(ConstraintFunctional { gamma: g, weights })
}

/// Inner product in which the projection onto the constraint hyperplane is
/// orthogonal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionMetric {
    /// Plain `Σ conj(a_n) b_n`.
    Euclidean,
    /// `Σ n^power conj(a_n) b_n`. The correction then decays like
    /// `n^{-power}`, so smooth inputs stay smooth.
    Weighted { power: i32 },
}

/// A domain state in span coordinates `c_1, c_2, …`.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalState {
    pub gamma: f64,
    pub span_coeffs: Vec<Complex64>,
    /// `|Σ w_n c_n|` at the state's own truncation.
    pub constraint_residual: f64,
    pub seed: Option<u64>,
    pub decay: Option<f64>,
}

impl CanonicalState {
    /// Wraps span coefficients without projecting them.
    pub fn unprojected(cfg: &PhysicalConfig, span_coeffs: Vec<Complex64>) -> Result<Self> {
        let w = constraint_weights(cfg, span_coeffs.len().max(1))?;
        Ok(Self {
            gamma: cfg.gamma,
            constraint_residual: w.apply(&span_coeffs).norm(),
            span_coeffs,
            seed: None,
            decay: None,
        })
    }

    pub fn norm(&self) -> f64 {
        self.span_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest populated span index.
    pub fn support(&self) -> usize {
        self.span_coeffs
            .iter()
            .rposition(|c| c.norm_sqr() > 0.0)
            .map_or(0, |i| i + 1)
    }

    /// Momentum-basis expansion, keeping span functions with `n ≤ n_max` of
    /// `basis` and dropping the rest.
    pub fn truncated_wave_state(&self, cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<WaveState> {
        let mut coeffs = DVector::zeros(basis.dim());
        for (i, c) in self.span_coeffs.iter().enumerate().take(basis.n_max()) {
            let f = span_function(cfg, i as i64 + 1)?;
            for (k, v) in f.components() {
                let pos = basis.position(k).ok_or(Error::IndexOutOfBasis(k))?;
                coeffs[pos] += v * c;
            }
        }
        WaveState::new(*cfg, basis.clone(), coeffs)
    }

    /// Momentum-basis expansion; fails if the basis is too small.
    pub fn wave_state(&self, cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<WaveState> {
        let support = self.support();
        if support > basis.n_max() {
            return Err(Error::IndexOutOfBasis(support as i64));
        }
        self.truncated_wave_state(cfg, basis)
    }
}

/// Orthogonal projection onto `{Σ w_n c_n = 0}` in the Euclidean metric.
pub fn project_onto_domain(coeffs: &[Complex64], functional: &ConstraintFunctional) -> Result<CanonicalState> {
    project_onto_domain_with(coeffs, functional, ProjectionMetric::Euclidean)
}

pub fn project_onto_domain_with(
    coeffs: &[Complex64],
    functional: &ConstraintFunctional,
    metric: ProjectionMetric,
) -> Result<CanonicalState> {
    if coeffs.len() > functional.len() {
        return Err(Error::ValidationError(format!(
            "{} coefficients but only {} constraint weights",
            coeffs.len(),
            functional.len()
        )));
    }
    let input_norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if input_norm == 0.0 {
        return Err(Error::ZeroStateAfterProjection);
    }
    let value = functional.apply(coeffs);
    let roundoff = 8.0 * f64::EPSILON * functional.magnitude(coeffs);
    let mut out = coeffs.to_vec();
    if value.norm() > roundoff {
        let direction: Vec<f64> = functional
            .weights
            .iter()
            .take(coeffs.len())
            .enumerate()
            .map(|(i, &w)| match metric {
                ProjectionMetric::Euclidean => w,
                ProjectionMetric::Weighted { power } => w / ((i + 1) as f64).powi(power),
            })
            .collect();
        let denom: f64 = functional.weights.iter().zip(&direction).map(|(w, d)| w * d).sum();
        let alpha = value / denom;
        for (c, d) in out.iter_mut().zip(&direction) {
            *c -= alpha * *d;
        }
    }
    let norm = out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-12 * input_norm {
        return Err(Error::ZeroStateAfterProjection);
    }
    Ok(CanonicalState {
        gamma: functional.gamma,
        constraint_residual: functional.apply(&out).norm(),
        span_coeffs: out,
        seed: None,
        decay: None,
    })
}

/// Seeded smooth domain states `c_n ∝ n^{-s} e^{iθ_n}`.
///
/// The sequence is generated up to `reference_n` and projected with the
/// `n⁴`-weighted metric, so truncating it to a smaller basis leaves a
/// constraint defect that falls off with the tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestStateFamily {
    pub decay: f64,
    pub reference_n: usize,
}

impl Default for TestStateFamily {
    fn default() -> Self {
        Self {
            decay: 4.0,
            reference_n: 8192,
        }
    }
}

impl TestStateFamily {
    pub const PROJECTION: ProjectionMetric = ProjectionMetric::Weighted { power: 4 };

    pub fn state(&self, cfg: &PhysicalConfig, seed: u64) -> Result<CanonicalState> {
        if self.decay < 2.5 {
            return Err(Error::ValidationError(format!(
                "test-state decay must be at least 2.5, got {}",
                self.decay
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<Complex64> = (1..=self.reference_n)
            .map(|n| Complex64::from_polar((n as f64).powf(-self.decay), rng.random_range(0.0..TAU)))
            .collect();
        let w = constraint_weights(cfg, self.reference_n)?;
        let mut state = project_onto_domain_with(&raw, &w, Self::PROJECTION)?;
        state.seed = Some(seed);
        state.decay = Some(self.decay);
        Ok(state)
    }
}

/// A momentum-basis state rewritten in span/complement coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSplit {
    /// `⟨span(n)|ψ⟩`, `n = 1..=n_max`.
    pub span_coeffs: Vec<Complex64>,
    /// Norm of the part of `ψ` along the complement functions.
    pub complement_norm: f64,
    /// `|Σ w_n c_n| / ‖c‖` of the span part (zero if there is none).
    pub relative_constraint: f64,
}

impl DomainSplit {
    /// Relative tolerance for [`in_domain`](Self::in_domain).
    pub const TOL: f64 = 1e-6;

    pub fn in_domain(&self, state_norm: f64) -> bool {
        let span_norm = self.span_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        span_norm > 0.0 && self.complement_norm <= Self::TOL * state_norm && self.relative_constraint <= Self::TOL
    }
}

pub fn split_state(state: &WaveState) -> Result<DomainSplit> {
    let cfg = state.config();
    let n_max = state.basis().n_max();
    let mut span_coeffs = Vec::with_capacity(n_max);
    let mut complement = state.coeff(0).norm_sqr();
    for n in 1..=n_max as i64 {
        let (a, b) = (state.coeff(n), state.coeff(-n));
        let s = span_function(cfg, n)?;
        let c = complement_function(cfg, n)?;
        span_coeffs.push(a * s.coeff_plus + b * s.coeff_minus);
        complement += (a * c.coeff_plus + b * c.coeff_minus).norm_sqr();
    }
    let span_norm = span_coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let relative_constraint = if span_norm > 0.0 {
        constraint_weights(cfg, n_max.max(1))?.apply(&span_coeffs).norm() / span_norm
    } else {
        0.0
    };
    Ok(DomainSplit {
        span_coeffs,
        complement_norm: complement.sqrt(),
        relative_constraint,
    })
}

/// Relative constraint defect above which a state is refused.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// `‖([H, T] - iħ) ψ‖ / ‖ψ‖` for an arbitrary momentum-basis state.
pub fn commutator_residual_unchecked(cfg: &PhysicalConfig, state: &WaveState) -> Result<f64> {
    let basis = state.basis();
    let h = hamiltonian_matrix(cfg, basis)?;
    let t = toa_matrix_analytic(cfg, basis)?;
    let a = state.coeffs();
    let energies = h.entries().diagonal();
    let ta = t.entries() * a;
    let ha = a.component_mul(&energies);
    let tha = t.entries() * ha;
    let i_hbar = Complex64::new(0.0, cfg.hbar);
    let r = ta.component_mul(&energies) - tha - a * i_hbar;
    let norm = a.norm();
    if norm == 0.0 {
        return Err(Error::ZeroStateAfterProjection);
    }
    Ok(r.norm() / norm)
}

/// Commutator residual of a domain state, truncated to `basis`.
pub fn commutator_residual(cfg: &PhysicalConfig, basis: &BasisSpec, state: &CanonicalState) -> Result<f64> {
    let norm = state.norm();
    if norm == 0.0 {
        return Err(Error::ZeroStateAfterProjection);
    }
    let relative = state.constraint_residual / norm;
    if !(relative <= CONSTRAINT_TOL) {
        return Err(Error::UnprojectedState(relative));
    }
    commutator_residual_unchecked(cfg, &state.truncated_wave_state(cfg, basis)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_eigenfunction, inner_product, GridFunction, GridSpec};

    fn nat(g: f64) -> PhysicalConfig {
        PhysicalConfig::natural(g)
    }

    /// Position-space formulas for the domain functions, evaluated directly.
    fn span_q(cfg: &PhysicalConfig, n: i64, q: f64) -> Complex64 {
        let (g, k, l) = (cfg.gamma, n as f64 * PI, cfg.l);
        let pref = 1.0 / (l * g * g + l * k * k).sqrt();
        Complex64::new(k * (k * q / l).cos(), g * (k * q / l).sin())
            * Complex64::from_polar(pref, g * q / l)
    }

    fn complement_q(cfg: &PhysicalConfig, n: i64, q: f64) -> Complex64 {
        let (g, k, l) = (cfg.gamma, n as f64 * PI, cfg.l);
        if n == 0 {
            return Complex64::from_polar(1.0 / (2.0 * l).sqrt(), g * q / l);
        }
        let pref = 1.0 / (l * g * g + l * k * k).sqrt();
        Complex64::new(k * (k * q / l).sin(), g * (k * q / l).cos())
            * Complex64::from_polar(pref, g * q / l)
    }

    #[test]
    fn span_coefficients_from_quadrature() {
        let cfg = nat(0.5);
        let f = span_function(&cfg, 1).unwrap();
        assert!((f.coeff_plus - 0.80946).abs() < 1e-5);
        assert!((f.coeff_minus - 0.58718).abs() < 1e-5);
        let grid = GridSpec::new(1.0, 2001).unwrap();
        let target = GridFunction::from_fn(&grid, |q| span_q(&cfg, 1, q));
        for (k, c) in f.components() {
            let phi = GridFunction::from_fn(&grid, |q| eval_eigenfunction(&cfg, k, q).unwrap());
            let proj = inner_product(&phi, &target).unwrap();
            assert!((proj - c).norm() < 1e-10, "{k}: {proj} vs {c}");
        }
    }

    #[test]
    fn synthesis_reproduces_position_formulas() {
        for &(g, l) in &[(0.5, 1.0), (0.1, 2.0), (0.0, 0.7)] {
            let cfg = PhysicalConfig { l, ..nat(g) };
            let basis = BasisSpec::full(8).unwrap();
            let grid = GridSpec::new(l, 65).unwrap();
            for n in 1..=8 {
                let s = span_function(&cfg, n).unwrap().to_wave_state(&cfg, &basis).unwrap();
                let c = complement_function(&cfg, n).unwrap().to_wave_state(&cfg, &basis).unwrap();
                let (gs, gc) = (s.synthesize(&grid), c.synthesize(&grid));
                for (i, &q) in grid.nodes().iter().enumerate() {
                    assert!((gs.values[i] - span_q(&cfg, n, q)).norm() < 1e-12);
                    assert!((gc.values[i] - complement_q(&cfg, n, q)).norm() < 1e-12);
                }
            }
            let c0 = complement_function(&cfg, 0).unwrap().to_wave_state(&cfg, &basis).unwrap();
            let g0 = c0.synthesize(&grid);
            for (i, &q) in grid.nodes().iter().enumerate() {
                assert!((g0.values[i] - complement_q(&cfg, 0, q)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unit_norm_and_unitary_change_of_basis() {
        for g in [0.0, 0.1, 0.5, 0.9] {
            let cfg = nat(g);
            for n in 1..=40 {
                let s = span_function(&cfg, n).unwrap();
                let c = complement_function(&cfg, n).unwrap();
                assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
                assert!((c.norm_sqr() - 1.0).abs() < 1e-14);
                assert!((s.coeff_plus * c.coeff_plus + s.coeff_minus * c.coeff_minus).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn span_orthogonal_to_complement_on_grid() {
        let cfg = nat(0.5);
        let basis = BasisSpec::full(8).unwrap();
        let grid = GridSpec::new(1.0, 513).unwrap();
        let span: Vec<_> = (1..=8)
            .map(|n| span_function(&cfg, n).unwrap().to_wave_state(&cfg, &basis).unwrap().synthesize(&grid))
            .collect();
        let comp: Vec<_> = (0..=8)
            .map(|n| complement_function(&cfg, n).unwrap().to_wave_state(&cfg, &basis).unwrap().synthesize(&grid))
            .collect();
        for s in &span {
            for c in &comp {
                assert!(inner_product(s, c).unwrap().norm() < 1e-10);
            }
        }
    }

    #[test]
    fn index_errors() {
        let cfg = nat(0.5);
        assert_eq!(span_function(&cfg, 0), Err(Error::IndexOutOfBasis(0)));
        assert_eq!(complement_function(&cfg, -1), Err(Error::IndexOutOfBasis(-1)));
        let cfg0 = nat(0.0);
        let periodic = BasisSpec::new(&cfg0, 4).unwrap();
        let c0 = complement_function(&cfg0, 0).unwrap();
        assert_eq!(c0.to_wave_state(&cfg0, &periodic), Err(Error::IndexOutOfBasis(0)));
        let s9 = span_function(&cfg0, 9).unwrap();
        assert_eq!(s9.to_wave_state(&cfg0, &periodic), Err(Error::IndexOutOfBasis(9)));
    }

    #[test]
    fn weights() {
        let cfg = nat(0.5);
        let w = constraint_weights(&cfg, 64).unwrap();
        assert!((w.weights[0] + 1.0 / (0.25 + PI * PI).sqrt()).abs() < 1e-15);
        assert!((w.weights[0] + 0.31435).abs() < 1e-5);
        assert!((w.weights[1] - 0.31730).abs() < 1e-5);
        assert!(w.weights.windows(2).all(|p| p[0] * p[1] < 0.0));
        for (i, wn) in w.weights.iter().enumerate().skip(9) {
            let x = (wn * PI).abs();
            assert!(x > 0.9 && x < 1.0001, "n={}", i + 1);
        }
    }

    /// Constraint weights encode vanishing at the walls: a constrained
    /// combination of span functions is zero at ±l.
    #[test]
    fn projected_states_vanish_at_walls() {
        for g in [0.0, 0.3, 0.8] {
            let cfg = nat(g);
            let raw: Vec<Complex64> = (1..=12)
                .map(|n| Complex64::from_polar(1.0 / (n * n) as f64, n as f64))
                .collect();
            let w = constraint_weights(&cfg, 12).unwrap();
            let state = project_onto_domain(&raw, &w).unwrap();
            let basis = BasisSpec::new(&cfg, 12).unwrap();
            let psi = state.wave_state(&cfg, &basis).unwrap();
            let grid = GridSpec::new(1.0, 8193).unwrap();
            let samples = psi.synthesize(&grid);
            let n = samples.values.len();
            assert!(samples.values[0].norm() < 1e-13);
            assert!(samples.values[n - 1].norm() < 1e-13);
            // zero mean always, zero first moment too at γ = 0
            let mean = grid.integrate(&samples.values).norm();
            assert!(mean < 1e-10, "g={g} mean={mean:e}");
            if g == 0.0 {
                let first: Vec<Complex64> =
                    grid.nodes().iter().zip(&samples.values).map(|(q, v)| v * *q).collect();
                assert!(grid.integrate(&first).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn projection_examples() {
        let cfg = nat(0.5);
        let w = constraint_weights(&cfg, 16).unwrap();
        // already on the hyperplane: c = (w_2, -w_1, 0, …)
        let mut on = vec![Complex64::new(0.0, 0.0); 16];
        on[0] = Complex64::new(w.weights[1], 0.0);
        on[1] = Complex64::new(-w.weights[0], 0.0);
        let p = project_onto_domain(&on, &w).unwrap();
        assert_eq!(p.span_coeffs, on);

        let parallel: Vec<Complex64> = w.weights.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        assert_eq!(project_onto_domain(&parallel, &w), Err(Error::ZeroStateAfterProjection));
        assert_eq!(
            project_onto_domain(&[Complex64::new(0.0, 0.0); 4], &w),
            Err(Error::ZeroStateAfterProjection)
        );

        let cubic: Vec<Complex64> = (1..=16).map(|n| Complex64::new((n as f64).powi(-3), 0.0)).collect();
        let p = project_onto_domain(&cubic, &w).unwrap();
        assert!(p.constraint_residual < 1e-14);
        // direct formula c - w (w·c)/(w·w)
        let wc: f64 = w.weights.iter().zip(&cubic).map(|(a, b)| a * b.re).sum();
        let ww: f64 = w.weights.iter().map(|a| a * a).sum();
        for (i, c) in p.span_coeffs.iter().enumerate() {
            assert!((c.re - (cubic[i].re - w.weights[i] * wc / ww)).abs() < 1e-15);
        }
        // Pythagoras: the removed component is along w
        let cc: f64 = cubic.iter().map(|c| c.norm_sqr()).sum();
        assert!((p.norm().powi(2) - (cc - wc * wc / ww)).abs() < 1e-15);
        let again = project_onto_domain(&p.span_coeffs, &w).unwrap();
        assert_eq!(again.span_coeffs, p.span_coeffs);
    }

    #[test]
    fn commutator_on_unprojected_state() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 32).unwrap();
        let single = CanonicalState::unprojected(&cfg, vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(
            commutator_residual(&cfg, &basis, &single),
            Err(Error::UnprojectedState(_))
        ));
        let psi = span_function(&cfg, 1).unwrap().to_wave_state(&cfg, &basis).unwrap();
        assert!(commutator_residual_unchecked(&cfg, &psi).unwrap() > 0.1);
        let zero = CanonicalState::unprojected(&cfg, vec![Complex64::new(0.0, 0.0); 3]).unwrap();
        assert_eq!(
            commutator_residual(&cfg, &basis, &zero),
            Err(Error::ZeroStateAfterProjection)
        );
    }

    #[test]
    fn finite_domain_states_satisfy_ccr_to_roundoff() {
        for g in [0.0, 0.5] {
            let cfg = nat(g);
            let raw: Vec<Complex64> = (1..=16).map(|n| Complex64::from_polar((n as f64).powi(-3), 0.3 * n as f64)).collect();
            let state = project_onto_domain(&raw, &constraint_weights(&cfg, 16).unwrap()).unwrap();
            let basis = BasisSpec::new(&cfg, 32).unwrap();
            assert!(commutator_residual(&cfg, &basis, &state).unwrap() < 1e-12);
        }
    }

    #[test]
    fn split_recovers_coordinates() {
        let cfg = nat(0.3);
        let basis = BasisSpec::new(&cfg, 10).unwrap();
        let raw: Vec<Complex64> = (1..=10).map(|n| Complex64::new(1.0 / n as f64, 0.5)).collect();
        let state = project_onto_domain(&raw, &constraint_weights(&cfg, 10).unwrap()).unwrap();
        let psi = state.wave_state(&cfg, &basis).unwrap();
        let split = split_state(&psi).unwrap();
        for (a, b) in split.span_coeffs.iter().zip(&state.span_coeffs) {
            assert!((a - b).norm() < 1e-15);
        }
        assert!(split.complement_norm < 1e-15);
        assert!(split.in_domain(psi.norm_sqr().sqrt()));

        let c3 = complement_function(&cfg, 3).unwrap().to_wave_state(&cfg, &basis).unwrap();
        let split = split_state(&c3).unwrap();
        assert!((split.complement_norm - 1.0).abs() < 1e-15);
        assert!(!split.in_domain(1.0));
        // a single span function violates the constraint
        let s2 = span_function(&cfg, 2).unwrap().to_wave_state(&cfg, &basis).unwrap();
        assert!(!split_state(&s2).unwrap().in_domain(1.0));
    }

    #[test]
    fn seeded_family_is_reproducible() {
        let cfg = nat(0.5);
        let fam = TestStateFamily { decay: 4.0, reference_n: 512 };
        let a = fam.state(&cfg, 7).unwrap();
        let b = fam.state(&cfg, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, fam.state(&cfg, 8).unwrap());
        assert!(a.constraint_residual < 1e-12 * a.norm());
        assert!(TestStateFamily { decay: 2.0, reference_n: 64 }.state(&cfg, 1).is_err());
    }

    #[test]
    fn commutator_converges_on_truncated_smooth_states() {
        let cfg = nat(0.5);
        let state = TestStateFamily { decay: 4.0, reference_n: 2048 }.state(&cfg, 3).unwrap();
        let r: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| commutator_residual(&cfg, &BasisSpec::new(&cfg, n).unwrap(), &state).unwrap())
            .collect();
        assert!(r[0] > 2.0 * r[1] && r[1] > 2.0 * r[2], "{r:?}");
    }
}
