//! Gauss–Legendre quadrature for Beta posterior moments.

use std::f64::consts::PI;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // three-term recurrence for P_n and its derivative
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Mean and variance of Beta(a, b) by quadrature of ν^(a−1)(1−ν)^(b−1).
///
/// The substitution ν = sin²θ turns the density into
/// 2 sin^(2a−1)θ cos^(2b−1)θ, which is bounded for a, b ≥ 1/2.
pub fn beta_moments(a: f64, b: f64) -> (f64, f64) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    let (x, w) = RULE.get_or_init(|| gauss_legendre(400));
    let half = PI / 4.0;
    let mut mass = 0.0;
    let mut first = 0.0;
    let mut nus = Vec::with_capacity(x.len());
    let mut dens = Vec::with_capacity(x.len());
    // log-space kernel avoids overflow/underflow for large exponents
    let mut logs = Vec::with_capacity(x.len());
    for &xi in x {
        let theta = half * (xi + 1.0);
        let (s, c) = theta.sin_cos();
        logs.push((2.0 * a - 1.0) * s.ln() + (2.0 * b - 1.0) * c.ln());
        nus.push(s * s);
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for (k, &l) in logs.iter().enumerate() {
        let d = w[k] * (l - m).exp();
        dens.push(d);
        mass += d;
        first += d * nus[k];
    }
    let mean = first / mass;
    let var = nus
        .iter()
        .zip(&dens)
        .map(|(nu, d)| d * (nu - mean) * (nu - mean))
        .sum::<f64>()
        / mass;
    (mean, var)
}
