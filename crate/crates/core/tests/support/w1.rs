//! W₁ on the line as the integral of the absolute CDF difference.

/// ∫ |F_a(x) − F_b(x)| dx for the empirical CDFs of `a` and `b`.
pub fn w1_cdf(a: &[f64], b: &[f64]) -> f64 {
    let mut events: Vec<(f64, f64)> = a
        .iter()
        .map(|&x| (x, 1.0 / a.len() as f64))
        .chain(b.iter().map(|&x| (x, -1.0 / b.len() as f64)))
        .collect();
    events.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut diff = 0.0;
    let mut total = 0.0;
    for w in events.windows(2) {
        diff += w[0].1;
        total += diff.abs() * (w[1].0 - w[0].0);
    }
    total
}

/// KL(Bernoulli(ν) ‖ Bernoulli(p)) written out term by term, with p clipped.
pub fn bernoulli_kl_scalar(nu: f64, p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    let mut kl = 0.0;
    if nu > 0.0 {
        kl += nu * (nu.ln() - p.ln());
    }
    if nu < 1.0 {
        kl += (1.0 - nu) * ((1.0 - nu).ln() - (1.0 - p).ln());
    }
    kl
}
