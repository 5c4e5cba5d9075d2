//! Physical configuration, the twisted momentum eigenbasis, quadrature grids
//! and states.
//!
//! Everything downstream is expressed in the basis
//! `φ_n(q) = exp(i(γ + nπ)q/l) / √(2l)` on `[-l, l]`, the common eigenbasis
//! of the momentum and kinetic Hamiltonian under the boundary condition
//! `φ(-l) = e^{-2iγ} φ(l)`.

use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Box half-width, mass, action constant and boundary phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub l: f64,
    pub mu: f64,
    pub hbar: f64,
    pub gamma: f64,
}

/// Which branch of the theory a configuration selects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// `0 < γ < 1`: the momentum operator is invertible.
    Twisted,
    /// `γ = 0`: the zero-momentum mode must be removed.
    Periodic,
}

impl PhysicalConfig {
    /// Natural units `l = μ = ħ = 1`.
    pub fn natural(gamma: f64) -> Self {
        Self {
            l: 1.0,
            mu: 1.0,
            hbar: 1.0,
            gamma,
        }
    }

    pub fn validate(&self) -> Result<BoundaryKind> {
        for (name, value) in [("l", self.l), ("mu", self.mu), ("hbar", self.hbar)] {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::NonPositiveScale { name, value });
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::GammaOutOfRange(self.gamma));
        }
        Ok(if self.gamma == 0.0 {
            BoundaryKind::Periodic
        } else {
            BoundaryKind::Twisted
        })
    }

    pub fn is_periodic(&self) -> bool {
        self.gamma == 0.0
    }

    /// `p_n = ħ(γ + nπ)/l`.
    pub fn momentum(&self, n: i64) -> f64 {
        self.hbar * (self.gamma + n as f64 * PI) / self.l
    }

    /// `E_n = p_n² / 2μ`.
    pub fn energy(&self, n: i64) -> f64 {
        let p = self.momentum(n);
        p * p / (2.0 * self.mu)
    }

    pub fn eigenstate(&self, n: i64) -> MomentumEigenstate {
        MomentumEigenstate {
            n,
            momentum: self.momentum(n),
            energy: self.energy(n),
        }
    }

    pub(crate) fn check_position(&self, q: f64) -> Result<()> {
        if q.is_finite() && q.abs() <= self.l * (1.0 + 4.0 * f64::EPSILON) {
            Ok(())
        } else {
            Err(Error::PositionOutOfBox { q, l: self.l })
        }
    }

    /// `φ_n(q)`, with the `nπ` phase reduced mod 2π so boundary values are
    /// exact multiples of `(-1)^n`.
    pub(crate) fn eigenfunction_unchecked(&self, n: i64, q: f64) -> Complex64 {
        let x = q / self.l;
        let turns = (n as f64 * x).rem_euclid(2.0);
        let phase = Complex64::from_polar(1.0, self.gamma * x) * Complex64::from_polar(1.0, PI * turns);
        phase / (2.0 * self.l).sqrt()
    }
}

pub fn validate_config(cfg: &PhysicalConfig) -> Result<BoundaryKind> {
    cfg.validate()
}

pub fn momentum_eigenvalue(cfg: &PhysicalConfig, n: i64) -> f64 {
    cfg.momentum(n)
}

pub fn eval_eigenfunction(cfg: &PhysicalConfig, n: i64, q: f64) -> Result<Complex64> {
    cfg.check_position(q)?;
    Ok(cfg.eigenfunction_unchecked(n, q))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumEigenstate {
    pub n: i64,
    pub momentum: f64,
    pub energy: f64,
}

/// Symmetric truncation `{-n_max, …, n_max}` of the eigenbasis, sorted
/// ascending. At `γ = 0` the zero mode is dropped unless explicitly requested.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    n_max: usize,
    indices: Vec<i64>,
}

impl BasisSpec {
    /// The basis appropriate for `cfg`: zero mode excluded when periodic.
    pub fn new(cfg: &PhysicalConfig, n_max: usize) -> Result<Self> {
        let mut basis = Self::full(n_max)?;
        if cfg.is_periodic() {
            basis.indices.retain(|&n| n != 0);
        }
        Ok(basis)
    }

    /// All indices `-n_max..=n_max`, zero mode included.
    pub fn full(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::ValidationError("n_max must be at least 1".into()));
        }
        let n = n_max as i64;
        Ok(Self {
            n_max,
            indices: (-n..=n).collect(),
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[i64] {
        &self.indices
    }

    pub fn contains_zero_mode(&self) -> bool {
        self.position(0).is_some()
    }

    /// Row/column of basis index `n`.
    pub fn position(&self, n: i64) -> Option<usize> {
        self.indices.binary_search(&n).ok()
    }

    pub fn eigenstates(&self, cfg: &PhysicalConfig) -> Vec<MomentumEigenstate> {
        self.indices.iter().map(|&n| cfg.eigenstate(n)).collect()
    }
}

/// Uniform grid on `[-l, l]` with composite Simpson weights.
///
/// Odd point counts use plain composite Simpson; even counts close the last
/// three intervals with Simpson's 3/8 rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    l: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GridSpec {
    pub const MIN_POINTS: usize = 16;

    pub fn new(l: f64, m_points: usize) -> Result<Self> {
        if !(l > 0.0) {
            return Err(Error::NonPositiveScale { name: "l", value: l });
        }
        if m_points < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "m_points must be at least {}, got {m_points}",
                Self::MIN_POINTS
            )));
        }
        let intervals = m_points - 1;
        let h = 2.0 * l / intervals as f64;
        // Mirror the left half so nodes are exactly symmetric.
        let nodes: Vec<f64> = (0..m_points)
            .map(|i| {
                let j = intervals - i;
                if i <= j {
                    -l + i as f64 * h
                } else {
                    l - j as f64 * h
                }
            })
            .collect();
        let mut weights = vec![0.0; m_points];
        let simpson_intervals = if intervals.is_multiple_of(2) { intervals } else { intervals - 3 };
        for k in (0..simpson_intervals).step_by(2) {
            weights[k] += h / 3.0;
            weights[k + 1] += 4.0 * h / 3.0;
            weights[k + 2] += h / 3.0;
        }
        if simpson_intervals < intervals {
            let k = simpson_intervals;
            for (offset, c) in [1.0, 3.0, 3.0, 1.0].into_iter().enumerate() {
                weights[k + offset] += 3.0 * h * c / 8.0;
            }
        }
        Ok(Self { l, nodes, weights })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.l / (self.nodes.len() - 1) as f64
    }

    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(values).map(|(w, v)| v * *w).sum()
    }
}

/// Samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn from_fn(grid: &GridSpec, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            values: grid.nodes().iter().map(|&q| f(q)).collect(),
            grid: grid.clone(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum()
    }
}

/// A state as coefficients in the truncated momentum eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveState {
    cfg: PhysicalConfig,
    basis: BasisSpec,
    coeffs: DVector<Complex64>,
}

impl WaveState {
    pub const NORMALIZATION_TOL: f64 = 1e-12;

    pub fn new(cfg: PhysicalConfig, basis: BasisSpec, coeffs: DVector<Complex64>) -> Result<Self> {
        if coeffs.len() != basis.dim() {
            return Err(Error::BasisMismatch);
        }
        Ok(Self { cfg, basis, coeffs })
    }

    pub fn eigenstate(cfg: PhysicalConfig, basis: BasisSpec, n: i64) -> Result<Self> {
        let pos = basis.position(n).ok_or(Error::IndexOutOfBasis(n))?;
        let mut coeffs = DVector::zeros(basis.dim());
        coeffs[pos] = Complex64::new(1.0, 0.0);
        Self::new(cfg, basis, coeffs)
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.cfg
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn coeffs(&self) -> &DVector<Complex64> {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        self.basis
            .position(n)
            .map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= Self::NORMALIZATION_TOL
    }

    pub fn normalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::UnnormalizedState(0.0));
        }
        self.coeffs /= Complex64::new(norm, 0.0);
        Ok(self)
    }

    /// `Σ conj(a_n) b_n`, exact in the coefficient representation.
    pub fn inner(&self, other: &WaveState) -> Result<Complex64> {
        if self.basis != other.basis || self.cfg != other.cfg {
            return Err(Error::BasisMismatch);
        }
        Ok(self.coeffs.dotc(&other.coeffs))
    }

    /// `ψ(q) = Σ c_n φ_n(q)` on every grid node.
    pub fn synthesize(&self, grid: &GridSpec) -> GridFunction {
        let cfg = self.cfg;
        let terms: Vec<(i64, Complex64)> = self
            .basis
            .indices()
            .iter()
            .zip(self.coeffs.iter())
            .filter(|(_, c)| c.norm_sqr() > 0.0)
            .map(|(&n, &c)| (n, c))
            .collect();
        GridFunction::from_fn(grid, |q| {
            terms
                .iter()
                .map(|&(n, c)| c * cfg.eigenfunction_unchecked(n, q))
                .sum()
        })
    }
}

/// Either representation of a state, for [`inner_product`].
#[derive(Debug, Clone, Copy)]
pub enum StateRef<'a> {
    Coefficients(&'a WaveState),
    Grid(&'a GridFunction),
}

impl<'a> From<&'a WaveState> for StateRef<'a> {
    fn from(s: &'a WaveState) -> Self {
        StateRef::Coefficients(s)
    }
}

impl<'a> From<&'a GridFunction> for StateRef<'a> {
    fn from(s: &'a GridFunction) -> Self {
        StateRef::Grid(s)
    }
}

/// L² inner product, conjugate-linear in `a`.
pub fn inner_product<'a>(a: impl Into<StateRef<'a>>, b: impl Into<StateRef<'a>>) -> Result<Complex64> {
    match (a.into(), b.into()) {
        (StateRef::Coefficients(a), StateRef::Coefficients(b)) => a.inner(b),
        (StateRef::Grid(a), StateRef::Grid(b)) => {
            if a.grid != b.grid {
                return Err(Error::BasisMismatch);
            }
            Ok(a.grid
                .weights()
                .iter()
                .zip(a.values.iter().zip(&b.values))
                .map(|(w, (x, y))| x.conj() * y * *w)
                .sum())
        }
        _ => Err(Error::MixedRepresentation),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nat(gamma: f64) -> PhysicalConfig {
        PhysicalConfig::natural(gamma)
    }

    #[test]
    fn validation() {
        assert_eq!(validate_config(&nat(0.5)), Ok(BoundaryKind::Twisted));
        assert_eq!(validate_config(&nat(0.0)), Ok(BoundaryKind::Periodic));
        assert_eq!(validate_config(&nat(1.0)), Err(Error::GammaOutOfRange(1.0)));
        assert!(matches!(
            validate_config(&nat(-0.1)),
            Err(Error::GammaOutOfRange(_))
        ));
        let bad = PhysicalConfig { l: -1.0, ..nat(0.5) };
        assert!(matches!(
            validate_config(&bad),
            Err(Error::NonPositiveScale { name: "l", .. })
        ));
        let bad = PhysicalConfig { hbar: 0.0, ..nat(0.5) };
        assert!(matches!(
            validate_config(&bad),
            Err(Error::NonPositiveScale { name: "hbar", .. })
        ));
    }

    #[test]
    fn momentum_values() {
        assert_eq!(momentum_eigenvalue(&nat(0.5), 0), 0.5);
        assert_eq!(momentum_eigenvalue(&nat(0.0), 0), 0.0);
        assert!((momentum_eigenvalue(&nat(0.5), 1) - 3.641593).abs() < 1e-6);
    }

    /// Spectral differentiation oracle: apply -i d/dq to samples of φ_1 on a
    /// periodic-after-untwisting grid and read the eigenvalue back.
    #[test]
    fn momentum_from_spectral_derivative() {
        let cfg = nat(0.5);
        let m = 64;
        // φ_n(q) e^{-iγq/l} is 2l-periodic, so differentiate that with the DFT
        // and add back γ/l.
        let qs: Vec<f64> = (0..m).map(|j| -1.0 + 2.0 * j as f64 / m as f64).collect();
        let u: Vec<Complex64> = qs
            .iter()
            .map(|&q| eval_eigenfunction(&cfg, 1, q).unwrap() * Complex64::from_polar(1.0, -0.5 * q))
            .collect();
        // naive DFT derivative
        let mut du = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..m as i64 {
            let kk = if k < m as i64 / 2 { k } else { k - m as i64 };
            let coef: Complex64 = qs
                .iter()
                .zip(&u)
                .map(|(&q, &v)| v * Complex64::from_polar(1.0, -PI * kk as f64 * q))
                .sum::<Complex64>()
                / m as f64;
            for (j, &q) in qs.iter().enumerate() {
                du[j] += coef * Complex64::new(0.0, PI * kk as f64) * Complex64::from_polar(1.0, PI * kk as f64 * q);
            }
        }
        let j = 17;
        let phi = eval_eigenfunction(&cfg, 1, qs[j]).unwrap();
        let dphi = (du[j] + u[j] * Complex64::new(0.0, 0.5)) * Complex64::from_polar(1.0, 0.5 * qs[j]);
        let p = (dphi * Complex64::new(0.0, -1.0)) / phi;
        assert!((p.re - 3.641593).abs() < 1e-6, "{p}");
        assert!(p.im.abs() < 1e-9);
    }

    #[test]
    fn eigenfunction_values() {
        let cfg = nat(0.5);
        let v = eval_eigenfunction(&cfg, 3, 0.0).unwrap();
        assert!((v.re - 0.5f64.sqrt()).abs() < 1e-15 && v.im == 0.0);
        let v = eval_eigenfunction(&cfg, 1, 0.5).unwrap();
        assert!((v.re + 0.17494).abs() < 1e-5 && (v.im - 0.68513).abs() < 1e-5, "{v}");
        assert!(matches!(
            eval_eigenfunction(&cfg, 1, 1.5),
            Err(Error::PositionOutOfBox { .. })
        ));
    }

    #[test]
    fn boundary_twist() {
        for gamma in [0.0, 0.1, 0.5, 0.9] {
            let cfg = PhysicalConfig { l: 2.5, ..nat(gamma) };
            let twist = Complex64::from_polar(1.0, 2.0 * gamma);
            for n in -64..=64 {
                let left = eval_eigenfunction(&cfg, n, -cfg.l).unwrap();
                let right = eval_eigenfunction(&cfg, n, cfg.l).unwrap();
                assert!((left * twist - right).norm() < 1e-14, "n={n} gamma={gamma}");
            }
        }
    }

    #[test]
    fn grid_properties() {
        for m in [16, 17, 512, 513] {
            let g = GridSpec::new(1.5, m).unwrap();
            let total: f64 = g.weights().iter().sum();
            assert!((total - 3.0).abs() < 1e-12 * 1.5);
            assert!(g.weights().iter().all(|&w| w > 0.0));
            for (a, b) in g.nodes().iter().zip(g.nodes().iter().rev()) {
                assert_eq!(*a, -*b);
            }
        }
        assert!(GridSpec::new(1.0, 15).is_err());
    }

    #[test]
    fn orthonormality_on_grid() {
        let cfg = nat(0.5);
        let even = GridSpec::new(1.0, 512).unwrap();
        let f = |n| GridFunction::from_fn(&even, move |q| eval_eigenfunction(&cfg, n, q).unwrap());
        assert!(inner_product(&f(1), &f(2)).unwrap().norm() < 1e-10);

        // odd counts are pure composite Simpson, exact on these trig polynomials
        let grid = GridSpec::new(1.0, 513).unwrap();
        let fns: Vec<GridFunction> = (-6..=6)
            .map(|n| GridFunction::from_fn(&grid, |q| eval_eigenfunction(&cfg, n, q).unwrap()))
            .collect();
        for (i, a) in fns.iter().enumerate() {
            for (j, b) in fns.iter().enumerate() {
                let v = inner_product(a, b).unwrap();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((v - expect).norm() < 1e-10, "{i} {j} {v}");
            }
        }
    }

    #[test]
    fn coefficient_inner_products() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 4).unwrap();
        let a = WaveState::eigenstate(cfg, basis.clone(), 1).unwrap();
        let b = WaveState::eigenstate(cfg, basis.clone(), 2).unwrap();
        assert_eq!(inner_product(&a, &a).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(inner_product(&a, &b).unwrap(), Complex64::new(0.0, 0.0));
        let grid = GridSpec::new(1.0, 33).unwrap();
        let g = a.synthesize(&grid);
        assert_eq!(inner_product(&a, &g), Err(Error::MixedRepresentation));
    }

    #[test]
    fn basis_structure() {
        let b = BasisSpec::new(&nat(0.5), 3).unwrap();
        assert_eq!(b.dim(), 7);
        let b0 = BasisSpec::new(&nat(0.0), 3).unwrap();
        assert_eq!(b0.dim(), 6);
        assert!(!b0.contains_zero_mode());
        assert!(b0.indices().windows(2).all(|w| w[0] < w[1]));
        let states = BasisSpec::new(&nat(0.3), 64).unwrap().eigenstates(&nat(0.3));
        assert!(states.windows(2).all(|w| w[0].momentum < w[1].momentum));
        assert!(states.iter().all(|s| s.momentum != 0.0 && s.energy >= 0.0));
        for (i, a) in states.iter().enumerate() {
            for b in &states[i + 1..] {
                assert_ne!(a.energy, b.energy);
            }
        }
        let cfg0 = nat(0.0);
        for n in 1..=64 {
            assert_eq!(cfg0.energy(n), cfg0.energy(-n));
        }
    }
}
