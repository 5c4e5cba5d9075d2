use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;

use toa_box::analysis::{spectral_decomposition, uncertainty_product_truncated};
use toa_box::domain::{constraint_weights, project_onto_domain, project_onto_domain_with, ProjectionMetric};
use toa_box::kernels::KernelSelector;
use toa_box::model::{BasisSpec, PhysicalConfig, WaveState};
use toa_box::operators::{hamiltonian_matrix, toa_matrix_analytic};

fn coeffs(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), len)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
        .prop_filter("non-zero", |v: &Vec<Complex64>| v.iter().map(|c| c.norm()).sum::<f64>() > 1e-3)
}

fn diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_lands_on_the_constraint(gamma in 0.0..1.0f64, c in coeffs(2..40), weighted in any::<bool>()) {
        let cfg = PhysicalConfig::natural(gamma);
        let w = constraint_weights(&cfg, c.len()).unwrap();
        let metric = if weighted { ProjectionMetric::Weighted { power: 4 } } else { ProjectionMetric::Euclidean };
        let p = project_onto_domain_with(&c, &w, metric).unwrap();
        let scale: f64 = c.iter().map(|z| z.norm()).sum();
        prop_assert!(w.apply(&p.span_coeffs).norm() <= 1e-13 * scale);

        let again = project_onto_domain_with(&p.span_coeffs, &w, metric).unwrap();
        prop_assert!(diff(&again.span_coeffs, &p.span_coeffs) <= 1e-14 * scale);
    }

    #[test]
    fn euclidean_projection_is_orthogonal(gamma in 0.0..1.0f64, c in coeffs(2..40)) {
        let cfg = PhysicalConfig::natural(gamma);
        let w = constraint_weights(&cfg, c.len()).unwrap();
        let p = project_onto_domain(&c, &w).unwrap();
        // the removed part is parallel to the weights, so it is orthogonal to
        // every vector on the constraint plane, including the result
        let removed: Vec<Complex64> = c.iter().zip(&p.span_coeffs).map(|(a, b)| a - b).collect();
        let overlap: Complex64 = removed.iter().zip(&p.span_coeffs).map(|(r, q)| r.conj() * q).sum();
        prop_assert!(overlap.norm() <= 1e-12 * c.iter().map(|z| z.norm_sqr()).sum::<f64>());
    }

    #[test]
    fn kernels_are_hermitian(gamma in 0.01..0.99f64, q in -1.0..1.0f64, qp in -1.0..1.0f64) {
        let cfg = PhysicalConfig::natural(gamma);
        for k in [KernelSelector::Closed, KernelSelector::FinitePart, KernelSelector::ZeroMode] {
            let a = k.evaluate(&cfg, q, qp).unwrap();
            let b = k.evaluate(&cfg, qp, q).unwrap();
            prop_assert!((a - b.conj()).norm() <= 1e-13 * (1.0 + a.norm()), "{} {a} {b}", k.name());
        }
        let periodic = PhysicalConfig::natural(0.0);
        let a = KernelSelector::Periodic.evaluate(&periodic, q, qp).unwrap();
        let b = KernelSelector::Periodic.evaluate(&periodic, qp, q).unwrap();
        prop_assert!((a - b.conj()).norm() <= 1e-14);
    }

    #[test]
    fn spectrum_comes_in_opposite_pairs(gamma in 0.0..1.0f64, n_max in 1usize..24) {
        let cfg = PhysicalConfig::natural(gamma);
        let basis = BasisSpec::new(&cfg, n_max).unwrap();
        let t = toa_matrix_analytic(&cfg, &basis).unwrap();
        let s = spectral_decomposition(&t).unwrap();
        let scale = s.eigenvalues.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        for (a, b) in s.eigenvalues.iter().zip(s.eigenvalues.iter().rev()) {
            prop_assert!((a + b).abs() <= 1e-12 * scale);
        }
    }

    // ΔT·ΔE ≥ |⟨[T, H]⟩|/2 holds for any pair of Hermitian matrices.
    #[test]
    fn robertson_inequality(gamma in 0.05..0.95f64, c in coeffs(17..18)) {
        let cfg = PhysicalConfig::natural(gamma);
        let basis = BasisSpec::new(&cfg, 8).unwrap();
        let t = toa_matrix_analytic(&cfg, &basis).unwrap();
        let h = hamiltonian_matrix(&cfg, &basis).unwrap();
        let psi = WaveState::new(cfg, basis, DVector::from_vec(c)).unwrap().normalized().unwrap();
        let r = uncertainty_product_truncated(&cfg, &h, &t, &psi, "random").unwrap();

        let a = psi.coeffs();
        let comm = t.entries() * h.entries() - h.entries() * t.entries();
        let bound = 0.5 * a.dotc(&(comm * a)).norm();
        prop_assert!(r.product >= bound * (1.0 - 1e-10) - 1e-14, "{} < {}", r.product, bound);
    }
}
