#![allow(dead_code)]

use rvgc::CorrelationMatrix;

pub fn three_dim_example(rho: f64) -> CorrelationMatrix {
    let s = 2f64.sqrt() * rho;
    CorrelationMatrix::from_rows(&[vec![1.0, rho, s], vec![rho, 1.0, s], vec![s, s, 1.0]]).unwrap()
}

/// Block-diagonal 6×6 matrix: the 3×3 example at ρ = 0.6 next to an
/// equicorrelated block with ρ = 0.7.
pub fn six_dim_example() -> CorrelationMatrix {
    let first = three_dim_example(0.6);
    let mut rows = vec![vec![0.0; 6]; 6];
    for a in 0..3 {
        for b in 0..3 {
            rows[a][b] = first.get(a, b);
            rows[a + 3][b + 3] = if a == b { 1.0 } else { 0.7 };
        }
    }
    CorrelationMatrix::from_rows(&rows).unwrap()
}

/// Correlation matrix of `A·Aᵀ + ridge·I` for `A` given row-major as `d × k`.
pub fn correlation_from_factor(d: usize, factor: &[f64], ridge: f64) -> CorrelationMatrix {
    let k = factor.len() / d;
    let cov = |i: usize, j: usize| -> f64 {
        let dot: f64 = (0..k).map(|l| factor[i * k + l] * factor[j * k + l]).sum();
        dot + if i == j { ridge } else { 0.0 }
    };
    let rows: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    if i == j {
                        1.0
                    } else {
                        cov(i, j) / (cov(i, i) * cov(j, j)).sqrt()
                    }
                })
                .collect()
        })
        .collect();
    CorrelationMatrix::from_rows(&rows).unwrap()
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = GK_WEIGHTS[7] * fc;
    let mut gauss = G_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        kronrod += GK_WEIGHTS[i] * s;
        if i % 2 == 1 {
            gauss += G_WEIGHTS[i / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Adaptive Gauss–Kronrod (7/15) on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut intervals = vec![(a, b, gk15(f, a, b))];
    for _ in 0..2000 {
        let total_err: f64 = intervals.iter().map(|i| i.2 .1).sum();
        if total_err <= tol {
            break;
        }
        let (k, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .unwrap();
        let (lo, hi, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, gk15(f, lo, mid)));
        intervals.push((mid, hi, gk15(f, mid, hi)));
    }
    (
        intervals.iter().map(|i| i.2 .0).sum(),
        intervals.iter().map(|i| i.2 .1).sum(),
    )
}

fn bivariate_density(rho: f64, x: f64, y: f64) -> f64 {
    let det = 1.0 - rho * rho;
    (-(x * x - 2.0 * rho * x * y + y * y) / (2.0 * det)).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

/// `P(Z₁ > u₁, Z₂ > u₂)` for a standard bivariate normal, by nested
/// adaptive quadrature of the density over `[u₁, u₁+L] × [u₂, u₂+L]`.
/// Each level targets `min(abs_tol, 1e-10·|value|)`.
pub fn bivariate_tail_quadrature(rho: f64, u1: f64, u2: f64, abs_tol: f64) -> f64 {
    const SPAN: f64 = 14.0;
    // Scale guess for the relative part of the tolerance.
    let peak = bivariate_density(rho, u1, u2);
    let tol = abs_tol.min(1e-10 * peak);
    let mut outer = |x: f64| {
        let mut inner = |y: f64| bivariate_density(rho, x, y);
        adaptive(&mut inner, u2, u2 + SPAN, tol * 1e-2).0
    };
    adaptive(&mut outer, u1, u1 + SPAN, tol).0
}

/// Kolmogorov–Smirnov statistic of `data` against the continuous CDF `cdf`.
pub fn ks_statistic(data: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}
