//! Dense matrices of `q`, `p_γ`, `p_γ⁻¹`, `H_γ` and the time-of-arrival
//! operator in the truncated momentum basis.
//!
//! The TOA matrix is built two ways. The analytic path assembles
//! `-μ(q p⁻¹ + p⁻¹ q)/2` from the closed-form position elements
//! `q_mn = -il(-1)^{n-m} / ((n-m)π)` and the diagonal `p⁻¹`, giving
//!
//! ```text
//! T_mn = -(μ/2) q_mn (1/p_m + 1/p_n).
//! ```
//!
//! The quadrature path integrates `conj(φ_m(q)) K(q, q') φ_n(q')` over the
//! square with the diagonal-split rule of [`crate::quadrature`]. Agreement
//! of the two is the main correctness check on both.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::KernelSelector;
use crate::model::{BasisSpec, GridSpec, PhysicalConfig};
use crate::quadrature::{check_cost, DiagonalSplitRule};

/// Tolerance on `max|A - A†|` for a matrix flagged Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// How a matrix was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BuildPath {
    Analytic,
    Quadrature,
}

impl BuildPath {
    pub fn name(&self) -> &'static str {
        match self {
            BuildPath::Analytic => "analytic",
            BuildPath::Quadrature => "quadrature",
        }
    }
}

/// A dense complex matrix tagged with its basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    label: String,
    basis: BasisSpec,
    entries: DMatrix<Complex64>,
    hermitian: bool,
    path: BuildPath,
    hermitization_defect: Option<f64>,
}

pub fn hermitian_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

impl OperatorMatrix {
    pub fn new(
        label: impl Into<String>,
        basis: BasisSpec,
        entries: DMatrix<Complex64>,
        hermitian: bool,
        path: BuildPath,
    ) -> Result<Self> {
        let label = label.into();
        if entries.nrows() != basis.dim() || entries.ncols() != basis.dim() {
            return Err(Error::BasisMismatch);
        }
        if hermitian {
            let defect = hermitian_defect(&entries);
            if !(defect < HERMITIAN_TOL) {
                return Err(Error::NonHermitianInput { label, defect });
            }
        }
        Ok(Self {
            label,
            basis,
            entries,
            hermitian,
            path,
            hermitization_defect: None,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn path(&self) -> BuildPath {
        self.path
    }

    /// `max|A - A†|` before symmetrization (quadrature path only).
    pub fn hermitization_defect(&self) -> Option<f64> {
        self.hermitization_defect
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Entry at basis indices `(m, n)`.
    pub fn element(&self, m: i64, n: i64) -> Option<Complex64> {
        Some(self.entries[(self.basis.position(m)?, self.basis.position(n)?)])
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Largest entrywise difference to `other`.
    pub fn max_abs_diff(&self, other: &OperatorMatrix) -> Result<f64> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max|conj(T) + T|`: zero when `T(-q,-q') = -conj(T(q,q'))`.
    pub fn parity_conjugation_defect(&self) -> f64 {
        self.entries
            .iter()
            .map(|a| (a.conj() + a).norm())
            .fold(0.0, f64::max)
    }

    /// `max|Π conj(T) Π + T|` with `Π` the reversal `n ↔ -n` of the index
    /// list. An exact symmetry only at `γ = 0`.
    pub fn index_reversal_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let flipped = self.entries[(n - 1 - i, n - 1 - j)].conj();
                worst = worst.max((flipped + self.entries[(i, j)]).norm());
            }
        }
        worst
    }
}

fn diagonal(
    label: &str,
    basis: &BasisSpec,
    f: impl Fn(i64) -> f64,
) -> Result<OperatorMatrix> {
    let d: Vec<Complex64> = basis.indices().iter().map(|&n| Complex64::new(f(n), 0.0)).collect();
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    OperatorMatrix::new(label, basis.clone(), m, true, BuildPath::Analytic)
}

/// `(φ_m, q φ_n)`; independent of `γ`.
pub fn position_element(l: f64, m: i64, n: i64) -> Complex64 {
    if m == n {
        return Complex64::new(0.0, 0.0);
    }
    let d = n - m;
    let sign = if d.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    Complex64::new(0.0, -l * sign / (d as f64 * PI))
}

pub fn position_matrix(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<OperatorMatrix> {
    cfg.validate()?;
    let idx = basis.indices();
    let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| position_element(cfg.l, idx[i], idx[j]));
    OperatorMatrix::new("q", basis.clone(), m, true, BuildPath::Analytic)
}

pub fn momentum_matrix(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<OperatorMatrix> {
    cfg.validate()?;
    diagonal("p", basis, |n| cfg.momentum(n))
}

fn require_invertible(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<()> {
    if basis.indices().iter().any(|&n| cfg.momentum(n) == 0.0) {
        Err(Error::ZeroModePresent)
    } else {
        Ok(())
    }
}

pub fn momentum_inverse_matrix(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<OperatorMatrix> {
    cfg.validate()?;
    require_invertible(cfg, basis)?;
    diagonal("p_inv", basis, |n| 1.0 / cfg.momentum(n))
}

pub fn hamiltonian_matrix(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<OperatorMatrix> {
    cfg.validate()?;
    diagonal("H", basis, |n| cfg.energy(n))
}

/// `-μ(q p⁻¹ + p⁻¹ q)/2` from closed-form elements.
pub fn toa_matrix_analytic(cfg: &PhysicalConfig, basis: &BasisSpec) -> Result<OperatorMatrix> {
    cfg.validate()?;
    require_invertible(cfg, basis)?;
    let idx = basis.indices();
    let inv: Vec<f64> = idx.iter().map(|&n| 1.0 / cfg.momentum(n)).collect();
    let m = DMatrix::from_fn(idx.len(), idx.len(), |i, j| {
        position_element(cfg.l, idx[i], idx[j]) * (-0.5 * cfg.mu * (inv[i] + inv[j]))
    });
    OperatorMatrix::new(toa_label(cfg), basis.clone(), m, true, BuildPath::Analytic)
}

fn toa_label(cfg: &PhysicalConfig) -> &'static str {
    if cfg.is_periodic() {
        "T_0"
    } else {
        "T_gamma"
    }
}

/// Nyström assembly of `∫∫ conj(φ_m(q)) K(q,q') φ_n(q') dq dq'`.
///
/// Only the closed kernel (for `γ > 0`) and the periodic kernel (for
/// `γ = 0`) represent the TOA operator. The output is Hermitized; the
/// pre-Hermitization defect is kept on the matrix.
pub fn toa_matrix_quadrature(
    cfg: &PhysicalConfig,
    basis: &BasisSpec,
    selector: KernelSelector,
    rule: &DiagonalSplitRule,
) -> Result<OperatorMatrix> {
    cfg.validate()?;
    match selector {
        KernelSelector::Closed => {}
        KernelSelector::Periodic if cfg.is_periodic() => {}
        KernelSelector::Periodic => {
            return Err(Error::ValidationError(
                "the periodic kernel requires gamma = 0".into(),
            ))
        }
        other => {
            return Err(Error::ValidationError(format!(
                "kernel `{}` does not represent the TOA operator",
                other.name()
            )))
        }
    }
    selector.check(cfg)?;
    let dim = basis.dim();
    let lines = rule.lines(cfg.l)?;
    let inner_points: usize = lines.iter().map(|ln| ln.inner.len()).sum();
    check_cost(
        (2 * inner_points * dim).saturating_add(2 * lines.len() * dim * dim),
    )?;

    // Per outer line o (lower triangle, outer coordinate q):
    //   lower[o][n] = w_o Σ_k w_k K(q_o, q_k) φ_n(q_k)
    // and with the roles swapped (upper triangle, outer coordinate q'):
    //   upper[o][m] = w_o Σ_k w_k K(q_k, q_o) conj(φ_m(q_k)),
    // so that T_mn = Σ_o conj(φ_m(q_o)) lower[o][n] + upper[o][m] φ_n(q_o).
    let idx = basis.indices();
    let partial: Vec<(Vec<Complex64>, Vec<Complex64>, Vec<Complex64>)> = lines
        .par_iter()
        .map(|ln| {
            let mut lower = vec![Complex64::new(0.0, 0.0); dim];
            let mut upper = vec![Complex64::new(0.0, 0.0); dim];
            for &(x, w) in &ln.inner {
                let below = selector.evaluate(cfg, ln.outer, x)? * w;
                let above = selector.evaluate(cfg, x, ln.outer)? * w;
                for (k, &n) in idx.iter().enumerate() {
                    let phi = cfg.eigenfunction_unchecked(n, x);
                    lower[k] += below * phi;
                    upper[k] += above * phi.conj();
                }
            }
            let scale = Complex64::new(ln.outer_weight, 0.0);
            let at_outer: Vec<Complex64> = idx.iter().map(|&n| cfg.eigenfunction_unchecked(n, ln.outer)).collect();
            Ok((
                lower.into_iter().map(|z| z * scale).collect(),
                upper.into_iter().map(|z| z * scale).collect(),
                at_outer,
            ))
        })
        .collect::<Result<_>>()?;

    let mut raw = DMatrix::zeros(dim, dim);
    for (lower, upper, at_outer) in &partial {
        for i in 0..dim {
            let left = at_outer[i].conj();
            for j in 0..dim {
                raw[(i, j)] += left * lower[j] + upper[i] * at_outer[j];
            }
        }
    }
    let defect = hermitian_defect(&raw);
    let sym = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let mut out = OperatorMatrix::new(toa_label(cfg), basis.clone(), sym, true, BuildPath::Quadrature)?;
    out.hermitization_defect = Some(defect);
    Ok(out)
}

/// Samples of a test function and of its derivative on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub values: Vec<Complex64>,
    pub derivative: Vec<Complex64>,
}

impl TestFunction {
    pub fn from_fns(
        grid: &GridSpec,
        f: impl Fn(f64) -> Complex64,
        df: impl Fn(f64) -> Complex64,
    ) -> Self {
        Self {
            values: grid.nodes().iter().map(|&q| f(q)).collect(),
            derivative: grid.nodes().iter().map(|&q| df(q)).collect(),
        }
    }
}

/// Outcome of the position–momentum commutator check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CcrReport {
    /// Grid max of `|q(-iħφ') - (-iħ(qφ)') - iħφ|`.
    pub residual: f64,
    /// `φ(±l) ≠ 0`: `qφ` leaves the momentum domain.
    pub domain_violation: bool,
    /// Input was identically zero; the residual carries no information.
    pub zero_input: bool,
}

/// Fourth-order finite-difference derivative on a uniform grid.
pub fn differentiate(values: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = values.len();
    let f = values;
    let mut d = vec![Complex64::new(0.0, 0.0); n];
    let c = 1.0 / (12.0 * h);
    for i in 0..n {
        d[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * c
        } else if i == 0 {
            (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c
        } else if i == 1 {
            (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c
        } else if i == n - 1 {
            (f[n - 1] * 25.0 - f[n - 2] * 48.0 + f[n - 3] * 36.0 - f[n - 4] * 16.0 + f[n - 5] * 3.0) * c
        } else {
            (f[n - 1] * 3.0 + f[n - 2] * 10.0 - f[n - 3] * 18.0 + f[n - 4] * 6.0 - f[n - 5]) * c
        };
    }
    d
}

pub fn ccr_position_momentum_residual(
    cfg: &PhysicalConfig,
    grid: &GridSpec,
    test: &TestFunction,
) -> Result<CcrReport> {
    cfg.validate()?;
    let n = grid.len();
    if test.values.len() != n || test.derivative.len() != n {
        return Err(Error::NonSmoothInput("sample count does not match grid".into()));
    }
    if test
        .values
        .iter()
        .chain(&test.derivative)
        .any(|v| !v.re.is_finite() || !v.im.is_finite())
    {
        return Err(Error::NonSmoothInput("non-finite sample".into()));
    }
    let peak = test.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let peak_d = test.derivative.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if peak == 0.0 && peak_d == 0.0 {
        return Ok(CcrReport {
            residual: 0.0,
            domain_violation: false,
            zero_input: true,
        });
    }
    let h = grid.spacing();
    let numeric = differentiate(&test.values, h);
    let scale = peak_d + peak / grid.l();
    let mismatch = numeric
        .iter()
        .zip(&test.derivative)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if mismatch > 1e-3 * scale {
        return Err(Error::NonSmoothInput(format!(
            "sampled derivative disagrees with the samples (max deviation {mismatch:e})"
        )));
    }

    let i_hbar = Complex64::new(0.0, cfg.hbar);
    let q_phi: Vec<Complex64> = grid.nodes().iter().zip(&test.values).map(|(q, v)| v * *q).collect();
    let d_q_phi = differentiate(&q_phi, h);
    let residual = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let qp = -i_hbar * test.derivative[i] * q;
            let pq = -i_hbar * d_q_phi[i];
            (qp - pq - i_hbar * test.values[i]).norm()
        })
        .fold(0.0, f64::max);
    let edge = test.values[0].norm().max(test.values[n - 1].norm());
    Ok(CcrReport {
        residual,
        domain_violation: edge > 1e-10 * peak,
        zero_input: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::eval_eigenfunction;

    fn nat(g: f64) -> PhysicalConfig {
        PhysicalConfig::natural(g)
    }

    #[test]
    fn position_elements() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 3).unwrap();
        let q = position_matrix(&cfg, &basis).unwrap();
        let v = q.element(0, 1).unwrap();
        assert!(v.re == 0.0 && (v.im - 1.0 / PI).abs() < 1e-16);
        assert_eq!(q.element(1, 0).unwrap(), v.conj());
        for &n in basis.indices() {
            assert_eq!(q.element(n, n).unwrap().norm(), 0.0);
        }
    }

    /// Grid quadrature oracle for ∫ q conj(φ_m) φ_n dq.
    #[test]
    fn position_elements_match_quadrature() {
        let cfg = PhysicalConfig { l: 1.7, ..nat(0.3) };
        let grid = GridSpec::new(cfg.l, 4001).unwrap();
        for m in -3..=3 {
            for n in -3..=3 {
                let vals: Vec<Complex64> = grid
                    .nodes()
                    .iter()
                    .map(|&q| {
                        eval_eigenfunction(&cfg, m, q).unwrap().conj()
                            * eval_eigenfunction(&cfg, n, q).unwrap()
                            * q
                    })
                    .collect();
                let oracle = grid.integrate(&vals);
                assert!((oracle - position_element(cfg.l, m, n)).norm() < 1e-10, "{m} {n}");
            }
        }
    }

    #[test]
    fn momentum_and_inverse() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 5).unwrap();
        let p = momentum_matrix(&cfg, &basis).unwrap();
        let pinv = momentum_inverse_matrix(&cfg, &basis).unwrap();
        assert_eq!(pinv.element(0, 0).unwrap().re, 2.0);
        let prod = p.entries() * pinv.entries();
        let eye = DMatrix::<Complex64>::identity(basis.dim(), basis.dim());
        let dev = (prod - eye).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(dev < 1e-15);

        let cfg0 = nat(0.0);
        let b0 = BasisSpec::new(&cfg0, 4).unwrap();
        let inv0 = momentum_inverse_matrix(&cfg0, &b0).unwrap();
        for &n in b0.indices() {
            assert!((inv0.element(n, n).unwrap().re - 1.0 / (n as f64 * PI)).abs() < 1e-16);
        }
        let full = BasisSpec::full(4).unwrap();
        assert_eq!(momentum_inverse_matrix(&cfg0, &full), Err(Error::ZeroModePresent));
        assert_eq!(toa_matrix_analytic(&cfg0, &full), Err(Error::ZeroModePresent));
    }

    #[test]
    fn hamiltonian_entries() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 5).unwrap();
        let h = hamiltonian_matrix(&cfg, &basis).unwrap();
        assert_eq!(h.element(0, 0).unwrap().re, 0.125);
        assert!(h.entries().iter().all(|v| v.re >= 0.0 && v.im == 0.0));
        let cfg0 = nat(0.0);
        let h0 = hamiltonian_matrix(&cfg0, &BasisSpec::new(&cfg0, 3).unwrap()).unwrap();
        assert_eq!(h0.element(1, 1), h0.element(-1, -1));
        assert!((h0.element(1, 1).unwrap().re - PI * PI / 2.0).abs() < 1e-15);
        // [H, p] = 0
        let p = momentum_matrix(&cfg, &basis).unwrap();
        let c = h.entries() * p.entries() - p.entries() * h.entries();
        assert!(c.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn analytic_toa_elements() {
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 4).unwrap();
        let t = toa_matrix_analytic(&cfg, &basis).unwrap();
        let expect = -0.5 / PI * (1.0 / 0.5 + 1.0 / (0.5 + PI));
        let v = t.element(0, 1).unwrap();
        assert!(v.re == 0.0 && (v.im - expect).abs() < 1e-15);
        assert!((v.im + 0.36202).abs() < 1e-5);
        assert_eq!(t.trace().norm(), 0.0);
        assert!(hermitian_defect(t.entries()) < 1e-15);
    }

    #[test]
    fn quadrature_matches_analytic() {
        let rule = DiagonalSplitRule::new(64, 1).unwrap();
        let cfg = nat(0.5);
        let basis = BasisSpec::new(&cfg, 4).unwrap();
        let a = toa_matrix_analytic(&cfg, &basis).unwrap();
        let q = toa_matrix_quadrature(&cfg, &basis, KernelSelector::Closed, &rule).unwrap();
        assert!(a.max_abs_diff(&q).unwrap() < 1e-8);
        assert!(q.hermitization_defect().unwrap() < 1e-9);
        let cfg0 = nat(0.0);
        let b0 = BasisSpec::new(&cfg0, 4).unwrap();
        let a = toa_matrix_analytic(&cfg0, &b0).unwrap();
        let q = toa_matrix_quadrature(&cfg0, &b0, KernelSelector::Periodic, &rule).unwrap();
        assert!(a.max_abs_diff(&q).unwrap() < 1e-8);
    }

    #[test]
    fn quadrature_guards() {
        let rule = DiagonalSplitRule::new(16, 1).unwrap();
        let cfg0 = nat(0.0);
        let b0 = BasisSpec::new(&cfg0, 2).unwrap();
        assert_eq!(
            toa_matrix_quadrature(&cfg0, &b0, KernelSelector::Closed, &rule),
            Err(Error::PeriodicGammaNotAllowed)
        );
        let tiny = nat(1e-8);
        let bt = BasisSpec::new(&tiny, 2).unwrap();
        assert!(matches!(
            toa_matrix_quadrature(&tiny, &bt, KernelSelector::Closed, &rule),
            Err(Error::ConditioningError(_))
        ));
        let huge = DiagonalSplitRule::new(512, 8).unwrap();
        let cfg = nat(0.5);
        let b = BasisSpec::new(&cfg, 64).unwrap();
        assert!(matches!(
            toa_matrix_quadrature(&cfg, &b, KernelSelector::Closed, &huge),
            Err(Error::QuadratureBudgetExceeded { .. })
        ));
    }

    #[test]
    fn quadrature_resolves_larger_bases_with_auto_panels() {
        let cfg = nat(0.3);
        let basis = BasisSpec::new(&cfg, 32).unwrap();
        let rule = DiagonalSplitRule::new(64, DiagonalSplitRule::auto_panels(64, 32)).unwrap();
        let q = toa_matrix_quadrature(&cfg, &basis, KernelSelector::Closed, &rule).unwrap();
        let a = toa_matrix_analytic(&cfg, &basis).unwrap();
        assert!(a.max_abs_diff(&q).unwrap() < 1e-8);
    }

    #[test]
    fn parity_conjugation() {
        for g in [0.0, 0.1, 0.5, 0.9] {
            let cfg = nat(g);
            let t = toa_matrix_analytic(&cfg, &BasisSpec::new(&cfg, 16).unwrap()).unwrap();
            assert!(t.parity_conjugation_defect() < 1e-12);
        }
        let cfg0 = nat(0.0);
        let t0 = toa_matrix_analytic(&cfg0, &BasisSpec::new(&cfg0, 16).unwrap()).unwrap();
        assert!(t0.index_reversal_defect() < 1e-12);
        // index reversal is not a symmetry once γ ≠ 0
        let cfg = nat(0.5);
        let t = toa_matrix_analytic(&cfg, &BasisSpec::new(&cfg, 16).unwrap()).unwrap();
        assert!(t.index_reversal_defect() > 1e-3);
    }

    #[test]
    fn ccr_position_momentum() {
        let cfg = nat(0.5);
        let grid = GridSpec::new(1.0, 512).unwrap();
        let f = |q: f64| Complex64::from_polar(1.0 - q * q, q);
        let df = |q: f64| Complex64::from_polar(1.0, q) * Complex64::new(-2.0 * q, 1.0 - q * q);
        let r = ccr_position_momentum_residual(&cfg, &grid, &TestFunction::from_fns(&grid, f, df)).unwrap();
        assert!(r.residual < 1e-6, "{}", r.residual);
        assert!(!r.domain_violation);

        let phi = |q: f64| eval_eigenfunction(&cfg, 1, q).unwrap();
        let k = 0.5 + PI;
        let dphi = |q: f64| phi(q) * Complex64::new(0.0, k);
        let r = ccr_position_momentum_residual(&cfg, &grid, &TestFunction::from_fns(&grid, phi, dphi)).unwrap();
        assert!(r.domain_violation);

        let zero = |_q: f64| Complex64::new(0.0, 0.0);
        let r = ccr_position_momentum_residual(&cfg, &grid, &TestFunction::from_fns(&grid, zero, zero)).unwrap();
        assert_eq!(r.residual, 0.0);
        assert!(r.zero_input);

        let kink = |q: f64| Complex64::new(q.abs(), 0.0);
        let bad = TestFunction::from_fns(&GridSpec::new(1.0, 64).unwrap(), kink, |_| Complex64::new(0.0, 0.0));
        assert!(matches!(
            ccr_position_momentum_residual(&cfg, &GridSpec::new(1.0, 64).unwrap(), &bad),
            Err(Error::NonSmoothInput(_))
        ));
    }
}
