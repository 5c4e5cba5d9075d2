//! Spectra, expectation values, uncertainty products, Hilbert–Schmidt norms,
//! covariance checks and convergence studies.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::domain::{
    commutator_residual, complement_function, span_function, split_state, CanonicalState, DomainKind,
};
use crate::error::{Error, Result};
use crate::kernels::{kernel_closed, kernel_finite_part, kernel_periodic, kernel_series, KernelSelector};
use crate::model::{BasisSpec, PhysicalConfig, WaveState};
use crate::operators::{hermitian_defect, toa_matrix_analytic, OperatorMatrix};
use crate::quadrature::DiagonalSplitRule;

/// Version tag written into every exported report.
pub const FORMAT_VERSION: u32 = 1;

/// Hermitian eigendecomposition with reproducible ordering and phases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub label: String,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` belongs to `eigenvalues[k]`.
    #[serde(skip)]
    pub eigenvectors: DMatrix<Complex64>,
    /// `max_k |τ_k + τ_{dim-1-k}|`.
    pub pairing_defect: f64,
    pub eigenvalue_sum: f64,
    pub trace: f64,
}

impl SpectrumReport {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max|V Λ V† - T|`.
    pub fn reconstruction_error(&self, t: &OperatorMatrix) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        let rebuilt = &self.eigenvectors * lambda * self.eigenvectors.adjoint();
        (rebuilt - t.entries()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn eigenvector(&self, k: usize) -> DVector<Complex64> {
        self.eigenvectors.column(k).into_owned()
    }
}

fn require_hermitian(m: &OperatorMatrix) -> Result<()> {
    if m.is_hermitian() {
        Ok(())
    } else {
        Err(Error::NonHermitianInput {
            label: m.label().to_string(),
            defect: hermitian_defect(m.entries()),
        })
    }
}

/// Rotates `v` so that its first component above round-off is real positive.
fn fix_phase(v: &mut DVector<Complex64>) {
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|z| z.norm() > 1e-10 * scale) {
        let rot = first.conj() / first.norm();
        v.iter_mut().for_each(|z| *z *= rot);
    }
}

fn lexicographic(a: &DVector<Complex64>, b: &DVector<Complex64>) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if o.is_ne() {
            return o.reverse();
        }
    }
    std::cmp::Ordering::Equal
}

pub fn spectral_decomposition(t: &OperatorMatrix) -> Result<SpectrumReport> {
    require_hermitian(t)?;
    let dim = t.dim();
    let eig = SymmetricEigen::new(t.entries().clone());
    let mut pairs: Vec<(f64, DVector<Complex64>)> = (0..dim)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Within a degenerate cluster the eigenvectors are not unique; order the
    // phase-fixed vectors lexicographically so reports are reproducible.
    let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < dim {
        let mut end = start + 1;
        while end < dim && pairs[end].0 - pairs[end - 1].0 <= 1e-12 * scale {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lexicographic(&a.1, &b.1));
        start = end;
    }

    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut eigenvectors = DMatrix::zeros(dim, dim);
    for (k, (_, v)) in pairs.iter().enumerate() {
        eigenvectors.set_column(k, v);
    }
    let pairing_defect = (0..dim)
        .map(|k| (eigenvalues[k] + eigenvalues[dim - 1 - k]).abs())
        .fold(0.0, f64::max);
    Ok(SpectrumReport {
        label: t.label().to_string(),
        eigenvalue_sum: eigenvalues.iter().sum(),
        trace: t.trace().re,
        eigenvalues,
        eigenvectors,
        pairing_defect,
    })
}

/// `⟨ψ|T|ψ⟩` for a normalized state.
pub fn toa_expectation(t: &OperatorMatrix, state: &WaveState) -> Result<f64> {
    if t.basis() != state.basis() {
        return Err(Error::BasisMismatch);
    }
    if !state.is_normalized() {
        return Err(Error::UnnormalizedState(state.norm_sqr().sqrt()));
    }
    let a = state.coeffs();
    Ok(a.dotc(&(t.entries() * a)).re)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectationRow {
    pub kind: DomainKind,
    pub n: i64,
    pub expectation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroExpectationReport {
    pub gamma: f64,
    pub n_max: usize,
    pub rows: Vec<ExpectationRow>,
    pub max_abs: f64,
}

/// `⟨T⟩` for every span and complement function with index `≤ n_max`.
///
/// At `γ = 0` the constant complement function is the excluded zero mode and
/// is skipped.
pub fn zero_expectation_suite(cfg: &PhysicalConfig, n_max: usize) -> Result<ZeroExpectationReport> {
    let basis = BasisSpec::new(cfg, n_max)?;
    let t = toa_matrix_analytic(cfg, &basis)?;
    let mut rows = Vec::new();
    for n in 0..=n_max as i64 {
        let mut funcs = Vec::new();
        if n > 0 {
            funcs.push(span_function(cfg, n)?);
        }
        if n > 0 || !cfg.is_periodic() {
            funcs.push(complement_function(cfg, n)?);
        }
        for f in funcs {
            let psi = f.to_wave_state(cfg, &basis)?;
            rows.push(ExpectationRow {
                kind: f.kind,
                n,
                expectation: toa_expectation(&t, &psi)?,
            });
        }
    }
    let max_abs = rows.iter().map(|r| r.expectation.abs()).fold(0.0, f64::max);
    Ok(ZeroExpectationReport {
        gamma: cfg.gamma,
        n_max,
        rows,
        max_abs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub state_id: String,
    pub delta_t: f64,
    pub delta_e: f64,
    pub product: f64,
    pub in_domain: bool,
    /// Share of `⟨H²⟩` carried by the outermost tenth of the momentum shells.
    pub energy_tail_fraction: f64,
    /// `energy_tail_fraction ≤ MOMENT_TAIL_FRACTION`.
    pub energy_resolved: bool,
}

/// Share of `⟨H²⟩` allowed in the outermost tenth of the shells before the
/// energy spread is declared unresolved.
pub const MOMENT_TAIL_FRACTION: f64 = 0.25;

/// `ΔT·ΔE` for a normalized state.
///
/// Fails with [`Error::DivergentMoment`] when the outermost tenth of the
/// momentum shells carries more than [`MOMENT_TAIL_FRACTION`] of `⟨H²⟩`, i.e.
/// when the energy spread is set by the truncation rather than the state.
pub fn uncertainty_product(
    cfg: &PhysicalConfig,
    h: &OperatorMatrix,
    t: &OperatorMatrix,
    state: &WaveState,
    state_id: impl Into<String>,
) -> Result<UncertaintyReport> {
    let report = uncertainty_product_truncated(cfg, h, t, state, state_id)?;
    if report.energy_resolved {
        Ok(report)
    } else {
        Err(Error::DivergentMoment(report.energy_tail_fraction))
    }
}

/// Like [`uncertainty_product`], but evaluates the moments at the basis
/// truncation even when `⟨H²⟩` is unresolved; the report's
/// `energy_resolved` flag records which case applies.
///
/// Eigenvectors of the TOA matrix decay like `1/n` in the momentum basis, so
/// their energy spread grows with the basis. Their `ΔT` is zero at every
/// truncation, which is what this variant is for.
pub fn uncertainty_product_truncated(
    cfg: &PhysicalConfig,
    h: &OperatorMatrix,
    t: &OperatorMatrix,
    state: &WaveState,
    state_id: impl Into<String>,
) -> Result<UncertaintyReport> {
    require_hermitian(h)?;
    require_hermitian(t)?;
    if h.basis() != state.basis() || t.basis() != state.basis() || state.config() != cfg {
        return Err(Error::BasisMismatch);
    }
    if !state.is_normalized() {
        return Err(Error::UnnormalizedState(state.norm_sqr().sqrt()));
    }
    let a = state.coeffs();
    let basis = state.basis();

    let energies: Vec<f64> = (0..basis.dim()).map(|i| h.entries()[(i, i)].re).collect();
    let moments: Vec<f64> = a.iter().zip(&energies).map(|(c, e)| c.norm_sqr() * e * e).collect();
    let second: f64 = moments.iter().sum();
    let n_max = basis.n_max() as i64;
    let edge = n_max - n_max / 10;
    let tail: f64 = basis
        .indices()
        .iter()
        .zip(&moments)
        .filter(|(n, _)| n.abs() > edge)
        .map(|(_, m)| m)
        .sum();
    let energy_tail_fraction = if second > 0.0 { tail / second } else { 0.0 };
    let energy_resolved = n_max < 10 || energy_tail_fraction <= MOMENT_TAIL_FRACTION;

    let first: f64 = a.iter().zip(&energies).map(|(c, e)| c.norm_sqr() * e).sum();
    let delta_e = (second - first * first).max(0.0).sqrt();

    let ta = t.entries() * a;
    let t1 = a.dotc(&ta).re;
    let t2 = ta.norm_squared();
    let delta_t = (t2 - t1 * t1).max(0.0).sqrt();

    Ok(UncertaintyReport {
        state_id: state_id.into(),
        delta_t,
        delta_e,
        product: delta_t * delta_e,
        in_domain: split_state(state)?.in_domain(1.0),
        energy_tail_fraction,
        energy_resolved,
    })
}

/// `(∫∫ |K(q, q')|² dq dq')^{1/2}` over `[-l, l]²`.
pub fn hs_norm(selector: KernelSelector, cfg: &PhysicalConfig, rule: &DiagonalSplitRule) -> Result<f64> {
    selector.check(cfg)?;
    let per_point = match selector {
        KernelSelector::Series { n_terms } => n_terms,
        _ => 1,
    };
    rule.check_budget(per_point)?;
    let square = rule.integrate(cfg.l, |q, qp| Ok(selector.evaluate(cfg, q, qp)?.norm_sqr()))?;
    Ok(square.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CovarianceReport {
    pub alpha: f64,
    /// `max_k |τ'_k - τ_k|` on sorted spectra of `T` and `U†TU`.
    pub spectrum_preservation_defect: f64,
    /// `max_k |τ'_k - (τ_k + α)|` on sorted spectra.
    pub weyl_shift_defect: f64,
    /// `max|U†TU - T - α|` entrywise.
    pub operator_shift_defect: f64,
}

/// Compares `T' = U†TU`, `U = exp(iαH/ħ)`, with the shifted operator `T + α`
/// that a covariant time observable would produce.
pub fn covariance_violation(
    cfg: &PhysicalConfig,
    h: &OperatorMatrix,
    t: &OperatorMatrix,
    alpha: f64,
) -> Result<CovarianceReport> {
    require_hermitian(h)?;
    require_hermitian(t)?;
    if h.basis() != t.basis() {
        return Err(Error::BasisMismatch);
    }
    let dim = t.dim();
    let phases: Vec<Complex64> = (0..dim)
        .map(|i| Complex64::from_polar(1.0, alpha * h.entries()[(i, i)].re / cfg.hbar))
        .collect();
    let mut rotated = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        rotated[(i, i)] = Complex64::new(t.entries()[(i, i)].re, 0.0);
        for j in i + 1..dim {
            let v = phases[i].conj() * t.entries()[(i, j)] * phases[j];
            rotated[(i, j)] = v;
            rotated[(j, i)] = v.conj();
        }
    }
    let shifted = OperatorMatrix::new(
        format!("{}'", t.label()),
        t.basis().clone(),
        rotated,
        true,
        t.path(),
    )?;
    let before = spectral_decomposition(t)?.eigenvalues;
    let after = spectral_decomposition(&shifted)?.eigenvalues;
    let spectrum_preservation_defect = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let weyl_shift_defect = before
        .iter()
        .zip(&after)
        .map(|(a, b)| (b - (a + alpha)).abs())
        .fold(0.0, f64::max);
    let mut operator_shift_defect: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let target = t.entries()[(i, j)] + if i == j { alpha } else { 0.0 };
            operator_shift_defect = operator_shift_defect.max((shifted.entries()[(i, j)] - target).norm());
        }
    }
    Ok(CovarianceReport {
        alpha,
        spectrum_preservation_defect,
        weyl_shift_defect,
        operator_shift_defect,
    })
}

/// Least-squares slope of `log y` against `log x`; `None` for fewer than two
/// rows or any non-positive entry.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.len() != ys.len() || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub gamma: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitTable {
    pub rows: Vec<LimitRow>,
    pub slope: Option<f64>,
}

/// `max |finite part(γ) - periodic kernel|` over all pairs of `nodes`, for
/// each `γ` in `gammas` (with the other parameters taken from `base`).
pub fn limit_study(base: &PhysicalConfig, gammas: &[f64], nodes: &[f64]) -> Result<LimitTable> {
    if gammas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::ValidationError("gamma sequence must decrease".into()));
    }
    let periodic_cfg = PhysicalConfig { gamma: 0.0, ..*base };
    let rows = gammas
        .par_iter()
        .map(|&gamma| {
            let cfg = PhysicalConfig { gamma, ..*base };
            KernelSelector::FinitePart.check(&cfg)?;
            let mut sup: f64 = 0.0;
            for &q in nodes {
                for &qp in nodes {
                    let d = kernel_finite_part(&cfg, q, qp)? - kernel_periodic(&periodic_cfg, q, qp)?;
                    sup = sup.max(d.norm());
                }
            }
            Ok(LimitRow { gamma, sup_error: sup })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(
        &rows.iter().map(|r| r.gamma).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.sup_error).collect::<Vec<_>>(),
    );
    Ok(LimitTable { rows, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n_max: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    pub slope: Option<f64>,
    /// Smallest `residual(n) / residual(next n)` over consecutive rows.
    pub min_ratio: Option<f64>,
}

/// Commutator residual of one domain state at each truncation in `n_maxes`.
pub fn convergence_study(
    cfg: &PhysicalConfig,
    state: &CanonicalState,
    n_maxes: &[usize],
) -> Result<ConvergenceTable> {
    if n_maxes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::ValidationError("n_max sequence must increase".into()));
    }
    let rows = n_maxes
        .par_iter()
        .map(|&n_max| {
            let basis = BasisSpec::new(cfg, n_max)?;
            Ok(ConvergenceRow {
                n_max,
                residual: commutator_residual(cfg, &basis, state)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let slope = loglog_slope(
        &rows.iter().map(|r| r.n_max as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.residual).collect::<Vec<_>>(),
    );
    let min_ratio = rows
        .windows(2)
        .map(|w| w[0].residual / w[1].residual)
        .reduce(f64::min);
    Ok(ConvergenceTable { rows, slope, min_ratio })
}

/// `count` reproducible pairs in `[-l, l]²` with `|q - q'| > min_separation`.
pub fn offdiagonal_pairs(l: f64, count: usize, min_separation: f64, seed: u64) -> Result<Vec<(f64, f64)>> {
    if !(min_separation < 2.0 * l) {
        return Err(Error::ValidationError("separation exceeds the box".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let q = rng.random_range(-l..=l);
        let qp = rng.random_range(-l..=l);
        if (q - qp).abs() > min_separation {
            out.push((q, qp));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesRow {
    pub n_terms: usize,
    pub rms_error: f64,
    pub max_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesTable {
    pub gamma: f64,
    pub pairs: usize,
    pub rows: Vec<SeriesRow>,
    /// Fit of the RMS error column.
    pub slope: Option<f64>,
    /// `max |series(q,q') - conj(series(q',q))|` over all pairs and rows.
    pub hermitian_defect: f64,
}

/// Partial-sum error of the series kernel against the closed form.
///
/// Pointwise errors of a Fourier partial sum oscillate in `N`, so the fit
/// uses the RMS over all pairs at each `N`.
pub fn series_convergence_study(
    cfg: &PhysicalConfig,
    pairs: &[(f64, f64)],
    n_terms: &[usize],
) -> Result<SeriesTable> {
    KernelSelector::Closed.check(cfg)?;
    let rows = n_terms
        .par_iter()
        .map(|&n| {
            KernelSelector::Series { n_terms: n }.check(cfg)?;
            let mut sq = 0.0;
            let mut max: f64 = 0.0;
            let mut herm: f64 = 0.0;
            for &(q, qp) in pairs {
                let s = kernel_series(cfg, q, qp, n)?;
                let e = (s - kernel_closed(cfg, q, qp)?).norm();
                sq += e * e;
                max = max.max(e);
                herm = herm.max((s - kernel_series(cfg, qp, q, n)?.conj()).norm());
            }
            Ok((
                SeriesRow {
                    n_terms: n,
                    rms_error: (sq / pairs.len().max(1) as f64).sqrt(),
                    max_error: max,
                },
                herm,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let hermitian_defect = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    let rows: Vec<SeriesRow> = rows.into_iter().map(|r| r.0).collect();
    let slope = loglog_slope(
        &rows.iter().map(|r| r.n_terms as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.rms_error).collect::<Vec<_>>(),
    );
    Ok(SeriesTable {
        gamma: cfg.gamma,
        pairs: pairs.len(),
        rows,
        slope,
        hermitian_defect,
    })
}

/// `max|A - A†|` on a full kernel sample over `nodes`.
pub fn kernel_hermitian_defect(selector: KernelSelector, cfg: &PhysicalConfig, nodes: &[f64]) -> Result<f64> {
    selector.check(cfg)?;
    let mut worst: f64 = 0.0;
    for (i, &q) in nodes.iter().enumerate() {
        for &qp in &nodes[i..] {
            let d = selector.evaluate(cfg, q, qp)? - selector.evaluate(cfg, qp, q)?.conj();
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}
