//! Shared test oracles and demo field specs. The numeric oracles are
//! deliberately independent of the library's own evaluation paths: the
//! stable CDF comes from characteristic-function inversion, the tail
//! constant from direct quadrature of the defining sine integral.

#![allow(dead_code)]

use stablefield::field::{FieldKernel, KernelEntry, MixingAtom, StableFieldSpec};
use stablefield::lattice::{analyze_action, HElement, IntMatrix};

/// d = 1, W = {w0}, f = {1 at 0, 1/2 at 1}.
pub fn demo_dissipative(alpha: f64) -> StableFieldSpec {
    StableFieldSpec {
        alpha,
        mixing: vec![MixingAtom {
            label: "w0".into(),
            weight: 1.0,
        }],
        kernel: FieldKernel::Dissipative {
            d: 1,
            entries: vec![
                KernelEntry {
                    v: 0,
                    at: vec![0],
                    value: 1.0,
                },
                KernelEntry {
                    v: 0,
                    at: vec![1],
                    value: 0.5,
                },
            ],
        },
        q: 0,
    }
}

/// Example-4.1 action (d = 2, kernel spanned by (1,1)) with a single unit
/// kernel atom at the identity of `H`.
pub fn demo_conservative(alpha: f64) -> StableFieldSpec {
    let basis = IntMatrix::from_cols(2, &[vec![1, 1]]).unwrap();
    let structure = analyze_action(&basis).unwrap();
    StableFieldSpec {
        alpha,
        mixing: vec![MixingAtom {
            label: "w0".into(),
            weight: 1.0,
        }],
        kernel: FieldKernel::Conservative {
            structure,
            entries: vec![KernelEntry {
                v: 0,
                at: HElement::identity(1),
                value: 1.0,
            }],
        },
        q: 0,
    }
}

// ---------------------------------------------------------------------
// Gauss-Legendre quadrature (nodes generated by Newton iteration)
// ---------------------------------------------------------------------

/// 16-point Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre_16() -> Vec<(f64, f64)> {
    let n = 16usize;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // initial guess (Chebyshev-like)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0f64;
    let mut p1 = x;
    for k in 2..=n {
        let pk = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = pk;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Composite 16-point Gauss-Legendre over `pieces` equal subintervals.
pub fn composite_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize) -> f64 {
    let nodes = gauss_legendre_16();
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut acc = 0.0;
        for &(x, w) in &nodes {
            acc += w * f(mid + half * x);
        }
        total += acc * half;
    }
    total
}

// ---------------------------------------------------------------------
// stable-law oracle by characteristic-function inversion
// ---------------------------------------------------------------------

/// CDF of the standard SaS law:
/// `F(x) = 1/2 + (1/pi) int_0^inf sin(x t) e^{-t^alpha} / t dt`.
pub fn stable_cdf(x: f64, alpha: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    if x < 0.0 {
        return 1.0 - stable_cdf(-x, alpha);
    }
    let t_max = 42f64.powf(1.0 / alpha);
    // resolve the sin(x t) oscillation: at least 2 pieces per period
    let pieces = ((x * t_max / std::f64::consts::PI * 2.0).ceil() as usize).clamp(64, 40_000);
    let integral = composite_gl(
        |t| (x * t).sin() * (-(t.powf(alpha))).exp() / t,
        1e-300,
        t_max,
        pieces,
    );
    0.5 + integral / std::f64::consts::PI
}

/// Quantile of the standard SaS law by bisection on the CDF oracle.
pub fn stable_quantile(p: f64, alpha: f64) -> f64 {
    assert!(p > 0.5 && p < 1.0, "upper-half quantiles only");
    let mut hi = 1.0f64;
    while stable_cdf(hi, alpha) < p {
        hi *= 2.0;
    }
    let mut lo = 0.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stable_cdf(mid, alpha) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------
// tail-constant oracle: direct quadrature of int_0^inf x^{-alpha} sin x dx
// ---------------------------------------------------------------------

/// High-accuracy evaluation of `(int_0^inf x^{-alpha} sin x dx)^{-1}`:
/// power series on `[0, pi]`, per-period Gauss-Legendre up to `K pi`, and
/// a four-term integration-by-parts tail expansion.
pub fn c_alpha_quadrature_oracle(alpha: f64) -> f64 {
    use std::f64::consts::PI;
    // series: int_0^pi x^{-alpha} sin x dx
    //       = sum_m (-1)^m pi^{2m+2-alpha} / ((2m+1)! (2m+2-alpha))
    let mut head = 0.0f64;
    let mut fact = 1.0f64; // (2m+1)!
    for m in 0..30 {
        if m > 0 {
            fact *= (2 * m) as f64 * (2 * m + 1) as f64;
        }
        let e = 2.0 * m as f64 + 2.0 - alpha;
        let term = PI.powf(e) / (fact * e);
        head += if m % 2 == 0 { term } else { -term };
    }
    // middle: per-period quadrature
    let k_max = 400usize;
    let mut middle = 0.0;
    for k in 1..k_max {
        middle += composite_gl(
            |x| x.powf(-alpha) * x.sin(),
            k as f64 * PI,
            (k + 1) as f64 * PI,
            2,
        );
    }
    // tail from X = k_max * pi by repeated integration by parts:
    // int_X^inf x^{-a} sin x dx = X^{-a} cos X + a X^{-a-1} sin X
    //   - a(a+1) X^{-a-2} cos X - a(a+1)(a+2) X^{-a-3} sin X + remainder
    let x = k_max as f64 * PI;
    let a = alpha;
    let tail = x.powf(-a) * x.cos() + a * x.powf(-a - 1.0) * x.sin()
        - a * (a + 1.0) * x.powf(-a - 2.0) * x.cos()
        - a * (a + 1.0) * (a + 2.0) * x.powf(-a - 3.0) * x.sin();
    1.0 / (head + middle + tail)
}

// ---------------------------------------------------------------------
// chi-square p-value (upper tail)
// ---------------------------------------------------------------------

pub fn chi2_p_value(stat: f64, df: f64) -> f64 {
    statrs::function::gamma::gamma_ur(df / 2.0, stat / 2.0)
}

