mod common;

use common::{bivariate_tail_quadrature, correlation_from_factor, three_dim_example};
use proptest::prelude::*;
use rvgc::gaussian::{
    log_std_normal_sf, orthant_probability, orthant_probability_qmc, std_normal_pdf, std_normal_sf, upsilon_with_seed,
    DEFAULT_QMC_SEED,
};
use rvgc::{
    gaussian_joint_tail, rv_quantile_expansion, solve_qp, upsilon, CorrelationMatrix, Matrix, QuantileExpansion,
};

// 40-digit values of P(Z₁ > u, Z₂ > u).
const BIVARIATE_TAILS: [(f64, f64, f64); 4] = [
    (0.3, 5.0, 4.495_196_014_773_420_8e-11),
    (0.3, 6.0, 6.805_984_137_866_799_5e-15),
    (0.5, 5.0, 8.247_086_432_651_667_8e-10),
    (0.5, 6.0, 3.893_588_066_959_815_7e-13),
];

#[test]
fn quadrature_oracle_matches_reference() {
    for (rho, u, p) in BIVARIATE_TAILS {
        let q = bivariate_tail_quadrature(rho, u, u, 1e-14);
        assert!((q - p).abs() <= 1e-8 * p, "rho={rho} u={u}: {q} vs {p}");
    }
}

#[test]
fn joint_tail_ratio_at_six() {
    let sigma = CorrelationMatrix::equicorrelation(2, 0.5).unwrap();
    let asym = gaussian_joint_tail(&sigma, 6.0, &[0.0, 0.0]).unwrap().exp();
    let ratio = asym / bivariate_tail_quadrature(0.5, 6.0, 6.0, 1e-14);
    assert!((0.85..=1.15).contains(&ratio), "ratio {ratio}");
}

#[test]
fn identity_joint_tail_is_sum_of_mills_terms() {
    for d in 2..=5 {
        let sigma = CorrelationMatrix::identity(d);
        let mut last_gap = f64::INFINITY;
        for u in [4.0, 8.0, 16.0, 32.0] {
            let got = gaussian_joint_tail(&sigma, u, &vec![0.0; d]).unwrap();
            let mills = d as f64 * (std_normal_pdf(u) / u).ln();
            assert!((got - mills).abs() <= 1e-12 * mills.abs());
            let gap = (got - d as f64 * log_std_normal_sf(u)).abs();
            assert!(gap < last_gap);
            last_gap = gap;
        }
        assert!(last_gap < 5e-3 * d as f64);
    }
}

#[test]
fn orthant_qmc_agrees_with_padded_closed_forms() {
    for r in [-0.5, 0.2, 0.7] {
        // 2×2 block plus two independent coordinates.
        let cov = Matrix::from_fn(4, 4, |i, j| match (i, j) {
            _ if i == j => 1.0,
            (0, 1) | (1, 0) => r,
            _ => 0.0,
        });
        let est = orthant_probability(&cov).unwrap();
        let exact = (0.25 + r.asin() / (2.0 * std::f64::consts::PI)) * 0.25;
        assert!(est.std_error > 0.0 && est.std_error < 1e-4);
        assert!(
            (est.probability - exact).abs() <= 3.0 * est.std_error,
            "{r}: {est:?} vs {exact}"
        );
    }
}

#[test]
fn orthant_is_monotone_in_correlation() {
    let mut last = 0.0;
    for k in -9..=9 {
        let r = k as f64 / 10.0;
        let p = orthant_probability(&Matrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap())
            .unwrap()
            .probability;
        assert!(p >= last);
        last = p;
    }
}

#[test]
fn boundary_orthant_factor_through_sampler() {
    let rho = 1.0 / (2.0 * 2f64.sqrt() - 1.0);
    let sigma = three_dim_example(rho);
    let sol = solve_qp(&sigma).unwrap();
    assert_eq!(upsilon(&sigma, &sol).unwrap().orthant_factor, 0.5);
    let again = upsilon_with_seed(&sigma, &sol, DEFAULT_QMC_SEED + 1).unwrap();
    assert_eq!(again.orthant_factor, 0.5);
}

#[test]
fn quantile_expansion_error_shrinks() {
    for alpha in [0.5, 1.0, 2.0, 5.0] {
        for x in [0.5, 1.0, 3.0] {
            let q = QuantileExpansion::new(alpha, 1.0, x).unwrap();
            let errors: Vec<f64> = [1e6, 1e8, 1e10, 1e12]
                .iter()
                .map(|&t| (rv_quantile_expansion(&q, t).unwrap() - q.exact(t).unwrap()).abs())
                .collect();
            assert!(errors.windows(2).all(|w| w[1] < w[0]), "α={alpha} x={x}: {errors:?}");
            for (t, e) in [1e6f64, 1e8, 1e10, 1e12].iter().zip(&errors) {
                assert!(e * t.ln().sqrt() < 0.5, "α={alpha} x={x} t={t}: {e}");
            }
        }
    }
}

#[test]
fn sf_tail_agrees_with_log_version() {
    for x in [0.0, 1.0, 5.0, 20.0, 29.0] {
        assert!((std_normal_sf(x).ln() - log_std_normal_sf(x)).abs() < 1e-12 * (1.0 + x * x));
    }
}

fn correlation(max_d: usize) -> impl Strategy<Value = CorrelationMatrix> {
    (2..=max_d).prop_flat_map(|d| {
        prop::collection::vec(-1.0..1.0f64, d * (d + 1)).prop_map(move |f| correlation_from_factor(d, &f, 0.25))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn upsilon_is_permutation_invariant(sigma in correlation(5), seed in any::<u64>()) {
        let d = sigma.dim();
        let mut perm: Vec<usize> = (0..d).collect();
        perm.rotate_left((seed % d as u64) as usize);
        if seed & 1 == 1 {
            perm.swap(0, d - 1);
        }
        let permuted = sigma.permuted(&perm).unwrap();
        let (a, b) = (solve_qp(&sigma).unwrap(), solve_qp(&permuted).unwrap());
        prop_assert!((a.gamma - b.gamma).abs() <= 1e-10 * a.gamma);
        let mapped: Vec<usize> = b.active.iter().map(|k| perm[k]).collect();
        let mut mapped = mapped;
        mapped.sort_unstable();
        prop_assert_eq!(mapped, a.active.members().to_vec());
        let (ua, ub) = (upsilon(&sigma, &a).unwrap(), upsilon(&permuted, &b).unwrap());
        prop_assert!((ua.log_upsilon - ub.log_upsilon).abs() <= 1e-9);
    }

    #[test]
    fn bivariate_orthant_monotone(r1 in -0.99..0.99f64, r2 in -0.99..0.99f64) {
        let p = |r: f64| orthant_probability(&Matrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap()).unwrap().probability;
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(p(lo) <= p(hi));
    }
}

#[test]
fn bivariate_qmc_within_three_se() {
    for k in -9..=9 {
        let r = k as f64 / 10.0;
        let m = Matrix::from_rows(&[vec![1.0, r], vec![r, 1.0]]).unwrap();
        let exact = orthant_probability(&m).unwrap().probability;
        let est = orthant_probability_qmc(&m, DEFAULT_QMC_SEED).unwrap();
        // Floor for cases the lattice integrates to rounding error.
        assert!(
            (est.probability - exact).abs() <= 3.0 * est.std_error + 1e-12,
            "{r}: {est:?} vs {exact}"
        );
    }
}
