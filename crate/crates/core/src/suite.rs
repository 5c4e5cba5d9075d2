//! The acceptance battery behind `toa-box report`.
//!
//! Each criterion runs at fixed parameters in natural units; only the seed
//! and the kernel sampling grid come from the run config.

use std::collections::BTreeMap;

use rayon::ThreadPoolBuilder;
use serde::Serialize;

use crate::analysis::{
    convergence_study, covariance_violation, hs_norm, kernel_hermitian_defect, limit_study, offdiagonal_pairs,
    series_convergence_study, spectral_decomposition, uncertainty_product, uncertainty_product_truncated,
    zero_expectation_suite,
};
use crate::domain::TestStateFamily;
use crate::error::Result;
use crate::export::to_json_string;
use crate::kernels::KernelSelector;
use crate::model::{BasisSpec, GridSpec, PhysicalConfig, WaveState};
use crate::operators::{
    hamiltonian_matrix, hermitian_defect, momentum_matrix, position_matrix, toa_matrix_analytic,
    toa_matrix_quadrature,
};
use crate::quadrature::DiagonalSplitRule;

/// Golden Hilbert–Schmidt norm of the periodic kernel at `l = μ = ħ = 1`,
/// `(7/90)^{1/2}`.
pub const HS_PERIODIC_GOLDEN: f64 = 0.278_886_675_511_358_5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteSettings {
    pub seed: u64,
    pub m_points: usize,
    pub states: usize,
    pub decay: f64,
    pub reference_n: usize,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            seed: 42,
            m_points: 513,
            states: 100,
            decay: 4.0,
            reference_n: 8192,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
}

impl CriterionResult {
    fn new(id: u8, name: &str) -> Self {
        Self {
            id,
            name: name.to_string(),
            passed: true,
            measured: BTreeMap::new(),
        }
    }

    /// Records `value` and folds `ok` into the verdict.
    fn check(&mut self, key: impl Into<String>, value: f64, ok: bool) {
        self.measured.insert(key.into(), value);
        self.passed &= ok;
    }

    fn record(&mut self, key: impl Into<String>, value: f64) {
        self.measured.insert(key.into(), value);
    }

    /// `criterion N: PASS name`.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2}: {} {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub settings: SuiteSettings,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

const TWISTED: [f64; 3] = [0.1, 0.5, 0.9];

fn nat(g: f64) -> PhysicalConfig {
    PhysicalConfig::natural(g)
}

fn tag(g: f64) -> String {
    format!("gamma={g}")
}

pub fn operator_equivalence() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(1, "analytic vs quadrature TOA matrices");
    let rule = DiagonalSplitRule::new(64, 1)?;
    for g in [0.1, 0.5, 0.9, 0.0] {
        let cfg = nat(g);
        let basis = BasisSpec::new(&cfg, 8)?;
        let selector = if g == 0.0 { KernelSelector::Periodic } else { KernelSelector::Closed };
        let analytic = toa_matrix_analytic(&cfg, &basis)?;
        let quad = toa_matrix_quadrature(&cfg, &basis, selector, &rule)?;
        let diff = analytic.max_abs_diff(&quad)?;
        c.check(format!("max_diff {}", tag(g)), diff, diff < 1e-8);
    }
    Ok(c)
}

pub fn kernel_consistency(settings: &SuiteSettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(2, "closed vs series kernel, Hermitian symmetry");
    let cfg = nat(0.5);
    let pairs = offdiagonal_pairs(cfg.l, 100, 0.05 * cfg.l, settings.seed)?;
    let table = series_convergence_study(&cfg, &pairs, &[100, 200, 400, 800, 1600, 3200])?;
    let slope = table.slope.unwrap_or(f64::NAN);
    c.check("rms_slope", slope, (-1.3..=-0.7).contains(&slope));

    let grid = GridSpec::new(cfg.l, settings.m_points)?;
    let coarse = GridSpec::new(cfg.l, 129)?;
    let mut worst = table.hermitian_defect;
    for (selector, kcfg, nodes) in [
        (KernelSelector::Closed, cfg, grid.nodes()),
        (KernelSelector::FinitePart, cfg, grid.nodes()),
        (KernelSelector::ZeroMode, cfg, grid.nodes()),
        (KernelSelector::Periodic, nat(0.0), grid.nodes()),
        (KernelSelector::Series { n_terms: 200 }, cfg, coarse.nodes()),
    ] {
        worst = worst.max(kernel_hermitian_defect(selector, &kcfg, nodes)?);
    }
    c.check("hermitian_defect", worst, worst < 1e-14);
    Ok(c)
}

pub fn self_adjointness() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(3, "Hermitian matrices, Hilbert-Schmidt norm");
    let rule = DiagonalSplitRule::new(64, 1)?;
    let mut worst: f64 = 0.0;
    for g in [0.1, 0.5, 0.9, 0.0] {
        let cfg = nat(g);
        for n_max in [8, 64, 128] {
            let basis = BasisSpec::new(&cfg, n_max)?;
            for m in [
                toa_matrix_analytic(&cfg, &basis)?,
                hamiltonian_matrix(&cfg, &basis)?,
                momentum_matrix(&cfg, &basis)?,
                position_matrix(&cfg, &basis)?,
            ] {
                worst = worst.max(hermitian_defect(m.entries()));
            }
        }
        let basis = BasisSpec::new(&cfg, 8)?;
        let selector = if g == 0.0 { KernelSelector::Periodic } else { KernelSelector::Closed };
        let quad = toa_matrix_quadrature(&cfg, &basis, selector, &rule)?;
        worst = worst.max(quad.hermitization_defect().unwrap_or(0.0));
    }
    c.check("hermitian_defect", worst, worst < 1e-12);

    let hs_rule = DiagonalSplitRule::new(16, 1)?;
    let one = hs_norm(KernelSelector::Periodic, &nat(0.0), &hs_rule)?;
    c.check("hs_periodic", one, (one - HS_PERIODIC_GOLDEN).abs() < 1e-6);
    let two = hs_norm(KernelSelector::Periodic, &PhysicalConfig { l: 2.0, ..nat(0.0) }, &hs_rule)?;
    let scaling = ((two * two) / (one * one)) / 16.0 - 1.0;
    c.check("l4_scaling_rel_error", scaling, scaling.abs() < 1e-9);
    c.record("hs_closed gamma=0.5", hs_norm(KernelSelector::Closed, &nat(0.5), &hs_rule)?);
    Ok(c)
}

pub fn canonical_commutation(settings: &SuiteSettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(4, "commutator residual on the canonical domain");
    let family = TestStateFamily {
        decay: settings.decay,
        reference_n: settings.reference_n,
    };
    for g in [0.1, 0.5, 0.9, 0.0] {
        let cfg = nat(g);
        for k in 0..3 {
            let seed = settings.seed + k;
            let state = family.state(&cfg, seed)?;
            let table = convergence_study(&cfg, &state, &[32, 64, 128, 256])?;
            let ratio = table.min_ratio.unwrap_or(f64::NAN);
            c.check(format!("min_ratio {} seed={seed}", tag(g)), ratio, ratio >= 2.0);
            let last = table.rows.last().map_or(f64::NAN, |r| r.residual);
            c.record(format!("residual_256 {} seed={seed}", tag(g)), last);
        }
    }
    Ok(c)
}

pub fn zero_expectations() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(5, "zero TOA expectation of span and complement functions");
    for g in TWISTED {
        let r = zero_expectation_suite(&nat(g), 10)?;
        c.check(format!("max_abs {}", tag(g)), r.max_abs, r.max_abs < 1e-12);
    }
    Ok(c)
}

pub fn uncertainty_bound(settings: &SuiteSettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(6, "TOA-energy uncertainty on and off the domain");
    let cfg = nat(0.5);
    let basis = BasisSpec::new(&cfg, 256)?;
    let h = hamiltonian_matrix(&cfg, &basis)?;
    let t = toa_matrix_analytic(&cfg, &basis)?;
    let family = TestStateFamily {
        decay: settings.decay,
        reference_n: settings.reference_n,
    };
    let mut min_product = f64::INFINITY;
    let mut all_in_domain = true;
    for k in 0..settings.states as u64 {
        let seed = settings.seed + k;
        let psi = family
            .state(&cfg, seed)?
            .truncated_wave_state(&cfg, &basis)?
            .normalized()?;
        let r = uncertainty_product(&cfg, &h, &t, &psi, format!("seed {seed}"))?;
        min_product = min_product.min(r.product);
        all_in_domain &= r.in_domain;
    }
    c.check("min_product", min_product, min_product >= 0.5 * (1.0 - 1e-3));
    c.check("all_in_domain", f64::from(u8::from(all_in_domain)), all_in_domain);
    c.record("states", settings.states as f64);

    let spectrum = spectral_decomposition(&t)?;
    let top = WaveState::new(cfg, basis, spectrum.eigenvector(spectrum.dim() - 1))?;
    let w = uncertainty_product_truncated(&cfg, &h, &t, &top, "top eigenvector")?;
    c.check("witness_product", w.product, w.product < 0.25 && !w.in_domain);
    c.record("witness_delta_t", w.delta_t);
    c.record("witness_energy_tail_fraction", w.energy_tail_fraction);
    Ok(c)
}

pub fn finite_part_limit(settings: &SuiteSettings) -> Result<CriterionResult> {
    let mut c = CriterionResult::new(7, "finite-part kernel tends to the periodic kernel");
    let grid = GridSpec::new(1.0, settings.m_points)?;
    let table = limit_study(&nat(0.5), &[1e-2, 1e-3, 1e-4], grid.nodes())?;
    for row in &table.rows {
        c.record(format!("sup_error {}", tag(row.gamma)), row.sup_error);
    }
    let slope = table.slope.unwrap_or(f64::NAN);
    c.check("slope", slope, (slope - 1.0).abs() <= 0.2);
    Ok(c)
}

pub fn covariance() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(8, "no Weyl-shift covariance");
    let cfg = nat(0.5);
    let basis = BasisSpec::new(&cfg, 64)?;
    let h = hamiltonian_matrix(&cfg, &basis)?;
    let t = toa_matrix_analytic(&cfg, &basis)?;
    for alpha in [0.5, 1.0, 2.0] {
        let r = covariance_violation(&cfg, &h, &t, alpha)?;
        c.check(
            format!("spectrum_defect alpha={alpha}"),
            r.spectrum_preservation_defect,
            r.spectrum_preservation_defect < 1e-10,
        );
        c.check(
            format!("weyl_shift_defect alpha={alpha}"),
            r.weyl_shift_defect,
            r.weyl_shift_defect >= alpha - 1e-6,
        );
    }
    Ok(c)
}

pub fn spectral_structure() -> Result<CriterionResult> {
    let mut c = CriterionResult::new(9, "real, paired, zero-sum TOA spectrum");
    for g in [0.1, 0.5, 0.9, 0.0] {
        let cfg = nat(g);
        let t = toa_matrix_analytic(&cfg, &BasisSpec::new(&cfg, 128)?)?;
        let s = spectral_decomposition(&t)?;
        c.check(format!("pairing_defect {}", tag(g)), s.pairing_defect, s.pairing_defect < 1e-10);
        c.check(format!("eigenvalue_sum {}", tag(g)), s.eigenvalue_sum, s.eigenvalue_sum.abs() < 1e-10);
        let rec = s.reconstruction_error(&t);
        c.check(format!("reconstruction {}", tag(g)), rec, rec < 1e-11);
    }
    Ok(c)
}

/// Criteria 1 to 9.
pub fn run_criteria(settings: &SuiteSettings) -> Result<Vec<CriterionResult>> {
    Ok(vec![
        operator_equivalence()?,
        kernel_consistency(settings)?,
        self_adjointness()?,
        canonical_commutation(settings)?,
        zero_expectations()?,
        uncertainty_bound(settings)?,
        finite_part_limit(settings)?,
        covariance()?,
        spectral_structure()?,
    ])
}

/// Runs criteria 1 to 9 twice, the second time on a single worker thread,
/// and checks that the serialized results agree byte for byte.
pub fn run_suite(settings: &SuiteSettings) -> Result<SuiteSummary> {
    let first = run_criteria(settings)?;
    let pool = ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::Error::Io(e.to_string()))?;
    let second = pool.install(|| run_criteria(settings))?;
    let identical = to_json_string(&first)? == to_json_string(&second)?;

    let mut determinism = CriterionResult::new(10, "byte-identical reruns");
    determinism.check("identical", f64::from(u8::from(identical)), identical);
    let mut criteria = first;
    criteria.push(determinism);
    let all_passed = criteria.iter().all(|c| c.passed);
    Ok(SuiteSummary {
        settings: *settings,
        criteria,
        all_passed,
    })
}
