//! Special functions shared by every constant in the crate: Gamma, Hurwitz
//! zeta, Dirichlet beta, lattice zeta sums and a few quadrature helpers.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function (Lanczos, g = 7, nine terms) with reflection below 1/2.
///
/// Relative accuracy is about 1e-15 on the positive axis.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut acc = LANCZOS_COEF[0];
        for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
            acc += c / (x + i as f64);
        }
        let t = x + LANCZOS_G + 0.5;
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
    }
}

/// Bernoulli numbers B_2, B_4, ..., B_20.
const BERNOULLI_EVEN: [f64; 10] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
];

/// Euler–Maclaurin summation of Σ_k (a+k)^{-x} split at `m`: returns the
/// regular part and the base point `a + m` of the pole term
/// (a+m)^{1-x}/(x-1).
fn hurwitz_parts(x: f64, a: f64) -> (f64, f64) {
    let m = 24usize.max(x.abs().ceil() as usize + 8);
    let mut sum = 0.0;
    for k in 0..m {
        sum += (a + k as f64).powf(-x);
    }
    let big = a + m as f64;
    sum += 0.5 * big.powf(-x);
    // rising product x (x+1) ... (x+2j-2) and factorial (2j)!
    let mut rising = x;
    let mut fact = 2.0;
    let mut pow = big.powf(-x - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += b / fact * rising * pow;
        let k = 2 * j as u32 + 2;
        rising *= (x + k as f64 - 1.0) * (x + k as f64);
        fact *= (k + 1) as f64 * (k + 2) as f64;
        pow /= big * big;
    }
    (sum, big)
}

/// Hurwitz zeta ζ(x, a) for a > 0 and real x ≠ 1, by Euler–Maclaurin
/// summation. Covers the analytic continuation to x < 1, which is what the
/// lattice correction constants need.
pub fn hurwitz_zeta(x: f64, a: f64) -> f64 {
    assert!(a > 0.0, "hurwitz_zeta requires a > 0");
    assert!((x - 1.0).abs() > 1e-14, "hurwitz_zeta has a pole at x = 1");
    let (sum, big) = hurwitz_parts(x, a);
    sum + big.powf(1.0 - x) / (x - 1.0)
}

/// Riemann zeta.
pub fn zeta(x: f64) -> f64 {
    hurwitz_zeta(x, 1.0)
}

/// Dirichlet beta β(x) = Σ (-1)^n (2n+1)^{-x}, as 4^{-x}(ζ(x,1/4) − ζ(x,3/4)).
/// The poles cancel, so x = 1 is allowed.
pub fn dirichlet_beta(x: f64) -> f64 {
    let (s1, a) = hurwitz_parts(x, 0.25);
    let (s3, b) = hurwitz_parts(x, 0.75);
    // (a^{1-x} - b^{1-x}) / (x - 1), continuous through x = 1
    let e = 1.0 - x;
    let l = (a / b).ln();
    let pole = if e.abs() < 1e-300 { -l } else { -b.powf(e) * (e * l).exp_m1() / e };
    4f64.powf(-x) * (s1 - s3 + pole)
}

/// Analytically continued lattice sum Σ'_{j ∈ ℤ^dim} |j|^{-sigma}.
pub fn lattice_zeta(dim: usize, sigma: f64) -> f64 {
    match dim {
        1 => 2.0 * zeta(sigma),
        2 => 4.0 * zeta(sigma / 2.0) * dirichlet_beta(sigma / 2.0),
        _ => panic!("lattice_zeta supports dim 1 and 2 only"),
    }
}

/// Regularized difference between the integral of |z|^e over the whole
/// space and its unit-lattice midpoint sum with the origin excluded.
///
/// For a locally integrable homogeneous integrand the missing mass of a
/// node-based sum is `lattice_defect(dim, e) · h^(dim + e)`.
pub fn lattice_defect(dim: usize, e: f64) -> f64 {
    -lattice_zeta(dim, -e)
}

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// ∫_T^∞ G_dim(r, t) t^{-1-s} dt for the Gaussian heat kernel
/// G(r, t) = (4πt)^{-dim/2} exp(-r²/4t), via the lower incomplete Gamma series.
pub fn heat_tail_integral(dim: usize, s: f64, r: f64, t_max: f64) -> f64 {
    let a = dim as f64 / 2.0 + s;
    let u = r * r / (4.0 * t_max);
    let mut term = 1.0 / a;
    let mut sum = term;
    for k in 1..1000 {
        term *= u / (a + k as f64);
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    (4.0 * PI).powf(-(dim as f64) / 2.0) * t_max.powf(-a) * (-u).exp() * sum
}

/// Ordinary least-squares line fit. Returns (slope, intercept, slope
/// standard error); the standard error is zero for two points.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}
