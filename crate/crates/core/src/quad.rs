//! Numerical quadrature and log-normal expectation helpers.
//!
//! Provides:
//! - adaptive Gauss-Legendre integration on finite intervals with an embedded
//!   7/15-point error estimate (`integrate`),
//! - Gauss-Hermite nodes/weights via Golub-Welsch (`gauss_hermite`) for
//!   expectations over standard normals,
//! - closed-form log-normal fractional moments (`lognormal_moment`) and
//!   quadrature expectations over a log-normal gain (`lognormal_expect`).
//!
//! All routines are pure; node tables are computed once and cached.

use std::sync::OnceLock;

use crate::error::{Error, Result};

// ======================================================================
// Settings
// ======================================================================

/// Default absolute tolerance for adaptive quadrature.
pub const DEFAULT_ABS_TOL: f64 = 1e-9;
/// Default relative tolerance for adaptive quadrature.
pub const DEFAULT_REL_TOL: f64 = 1e-8;
/// Default Gauss-Hermite node count for log-normal expectations.
pub const DEFAULT_GH_NODES: usize = 64;

/// Tolerances and node counts used by every analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSettings {
    /// Absolute tolerance for adaptive integration (> 0).
    pub abs_tol: f64,
    /// Relative tolerance for adaptive integration (> 0).
    pub rel_tol: f64,
    /// Gauss-Hermite node count for log-normal expectations (>= 8).
    pub gh_nodes: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        QuadratureSettings {
            abs_tol: DEFAULT_ABS_TOL,
            rel_tol: DEFAULT_REL_TOL,
            gh_nodes: DEFAULT_GH_NODES,
        }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::config("quadrature tolerances must be positive"));
        }
        if self.gh_nodes < 8 {
            return Err(Error::config("Gauss-Hermite node count must be >= 8"));
        }
        Ok(())
    }

    /// The same settings with both tolerances halved (self-check helper).
    pub fn halved(&self) -> Self {
        QuadratureSettings {
            abs_tol: self.abs_tol / 2.0,
            rel_tol: self.rel_tol / 2.0,
            gh_nodes: self.gh_nodes,
        }
    }
}

// ======================================================================
// Gauss-Legendre nodes (Newton iteration on Legendre polynomials)
// ======================================================================

/// Legendre polynomial value and derivative at x for order n.
fn legendre_pd(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from the standard identity on [-1, 1]
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Legendre nodes and weights on [-1, 1] for order n.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-based initial guess, then Newton.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_pd(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre_pd(n, x);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * d * d);
    }
    (nodes, weights)
}

fn gl7() -> &'static (Vec<f64>, Vec<f64>) {
    static T: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    T.get_or_init(|| gauss_legendre(7))
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static T: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    T.get_or_init(|| gauss_legendre(15))
}

// ======================================================================
// Adaptive integration
// ======================================================================

/// Result of an adaptive integration: value and an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let (n7, w7) = gl7();
    let (n15, w15) = gl15();
    let mut s7 = 0.0;
    for i in 0..7 {
        s7 += w7[i] * f(mid + half * n7[i]);
    }
    let mut s15 = 0.0;
    for i in 0..15 {
        s15 += w15[i] * f(mid + half * n15[i]);
    }
    (half * s15, (half * (s15 - s7)).abs())
}

/// Adaptively integrate `f` over the finite interval [a, b].
///
/// Bisects panels whose embedded 7-vs-15 point discrepancy exceeds the
/// per-panel share of the tolerance. Signals `Error::Numerical` if the
/// recursion depth limit is reached before the tolerance is met.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    settings: &QuadratureSettings,
) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::numerical("integration bounds must be finite"));
    }
    if a == b {
        return Ok(Integral { value: 0.0, error_estimate: 0.0 });
    }
    const MAX_DEPTH: u32 = 48;
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        rel: f64,
        depth: u32,
    ) -> Result<(f64, f64)> {
        let (value, err) = panel(f, a, b);
        if err <= tol.max(rel * value.abs()) || err == 0.0 {
            return Ok((value, err));
        }
        if depth >= MAX_DEPTH {
            return Err(Error::numerical(format!(
                "quadrature did not converge on [{a}, {b}] (err {err:.3e} > tol {tol:.3e})"
            )));
        }
        let mid = 0.5 * (a + b);
        let (lv, le) = recurse(f, a, mid, tol / 2.0, rel, depth + 1)?;
        let (rv, re) = recurse(f, mid, b, tol / 2.0, rel, depth + 1)?;
        Ok((lv + rv, le + re))
    }
    let (value, error_estimate) = recurse(f, a, b, settings.abs_tol, settings.rel_tol, 0)?;
    Ok(Integral { value, error_estimate })
}

// ======================================================================
// Gauss-Hermite (Golub-Welsch on the symmetric tridiagonal Jacobi matrix)
// ======================================================================

/// Physicists' Gauss-Hermite rule: nodes x_i and weights w_i such that
/// integral of f(x) e^{-x^2} dx ~= sum w_i f(x_i).
///
/// Nodes are the eigenvalues of the Jacobi matrix (zero diagonal,
/// off-diagonal sqrt(k/2)); weights are sqrt(pi) times the squared first
/// eigenvector components. Only the first row of the eigenvector matrix is
/// tracked through the implicit-shift QL sweeps.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "node count must be positive");
    let mut d = vec![0.0_f64; n]; // diagonal (becomes eigenvalues)
    let mut e = vec![0.0_f64; n]; // sub-diagonal, e[0..n-1] used
    for k in 1..n {
        e[k - 1] = (k as f64 / 2.0).sqrt();
    }
    let mut first = vec![0.0_f64; n]; // first row of the eigenvector matrix
    first[0] = 1.0;

    // Implicit QL with Wilkinson shift on the symmetric tridiagonal.
    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a small sub-diagonal element to split at
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 80, "eigenvalue iteration failed to converge");
            // Wilkinson shift
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0_f64;
            let mut i = m;
            while i > l {
                let mut f = s * e[i - 1];
                let b = c * e[i - 1];
                r = f.hypot(g);
                e[i] = r;
                if r == 0.0 {
                    d[i] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i] - p;
                r = (d[i - 1] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i] = g + p;
                g = c * r - b;
                // rotate the tracked first-row components
                f = first[i];
                first[i] = s * first[i - 1] + c * f;
                first[i - 1] = c * first[i - 1] - s * f;
                i -= 1;
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending by node
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let nodes: Vec<f64> = idx.iter().map(|&i| d[i]).collect();
    let weights: Vec<f64> = idx.iter().map(|&i| sqrt_pi * first[i] * first[i]).collect();
    (nodes, weights)
}

/// Cached Gauss-Hermite table for the handful of node counts in use.
pub fn gauss_hermite_cached(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static TABLES: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let map = TABLES.get_or_init(|| std::sync::Mutex::new(std::collections::HashMap::new()));
    let mut guard = map.lock().unwrap();
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(gauss_hermite(n))))
}

// ======================================================================
// Log-normal helpers
// ======================================================================

/// Convert a shadowing standard deviation in dB to the natural-log domain:
/// sigma_ln = sigma_dB * ln(10) / 10.
pub fn sigma_db_to_ln(sigma_db: f64) -> f64 {
    sigma_db * std::f64::consts::LN_10 / 10.0
}

/// E[G^c] for G log-normal with ln-domain std `sigma_ln` and median 1:
/// exp(c^2 sigma_ln^2 / 2). Exact for every real c.
pub fn lognormal_moment(c: f64, sigma_ln: f64) -> f64 {
    (0.5 * c * c * sigma_ln * sigma_ln).exp()
}

/// E[f(G)] for G = exp(sigma_ln * Z), Z standard normal, via Gauss-Hermite.
/// With sigma_ln = 0 this is exactly f(1).
pub fn lognormal_expect<F: Fn(f64) -> f64>(f: F, sigma_ln: f64, nodes: usize) -> f64 {
    if sigma_ln == 0.0 {
        return f(1.0);
    }
    let (x, w) = gauss_hermite_cached(nodes);
    let scale = std::f64::consts::SQRT_2 * sigma_ln;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += w[i] * f((scale * x[i]).exp());
    }
    acc * inv_sqrt_pi
}

// ======================================================================
// Tests
// ======================================================================
