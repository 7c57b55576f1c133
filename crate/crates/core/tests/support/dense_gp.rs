//! Dense Laplace-approximation GP classifier with a logistic likelihood.
//!
//! Uses the textbook form f ← (K⁻¹ + W)⁻¹(W f + ∇log p) solved as
//! (I + K W) f = K (W f + ∇log p), with Gaussian elimination throughout.

pub type Matrix = Vec<Vec<f64>>;

pub fn rbf(a: [f64; 2], b: [f64; 2], length: f64, output_std: f64) -> f64 {
    let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
    output_std * output_std * (-d2 / (2.0 * length * length)).exp()
}

/// Solves A x = b by Gaussian elimination with partial pivoting.
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub struct DenseLaplace {
    pub x: Vec<[f64; 2]>,
    pub length: f64,
    pub output_std: f64,
    pub mode: Vec<f64>,
    pub grad: Vec<f64>,
    pub w: Vec<f64>,
}

/// `targets` are 0/1 class-2 indicators.
pub fn fit(x: &[[f64; 2]], targets: &[f64], length: f64, output_std: f64) -> DenseLaplace {
    let n = x.len();
    let k: Matrix = (0..n)
        .map(|i| (0..n).map(|j| rbf(x[i], x[j], length, output_std)).collect())
        .collect();
    let mut f = vec![0.0; n];
    let terms = |f: &[f64]| {
        let pi: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
        let g: Vec<f64> = targets.iter().zip(&pi).map(|(t, p)| t - p).collect();
        let w: Vec<f64> = pi.iter().map(|p| p * (1.0 - p)).collect();
        (g, w)
    };
    for _ in 0..200 {
        let (g, w) = terms(&f);
        let rhs_inner: Vec<f64> = (0..n).map(|i| w[i] * f[i] + g[i]).collect();
        let rhs: Vec<f64> = (0..n).map(|i| (0..n).map(|j| k[i][j] * rhs_inner[j]).sum()).collect();
        let a: Matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 } + k[i][j] * w[j]).collect())
            .collect();
        let next = solve(a, rhs);
        let delta = next.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        f = next;
        if delta < 1e-14 {
            break;
        }
    }
    let (grad, w) = terms(&f);
    DenseLaplace {
        x: x.to_vec(),
        length,
        output_std,
        mode: f,
        grad,
        w,
    }
}

impl DenseLaplace {
    /// Latent mean and variance at `z`.
    pub fn predict(&self, z: [f64; 2]) -> (f64, f64) {
        let n = self.x.len();
        let ks: Vec<f64> = self.x.iter().map(|&xi| rbf(xi, z, self.length, self.output_std)).collect();
        let mean = ks.iter().zip(&self.grad).map(|(a, b)| a * b).sum();
        // (K + W⁻¹)⁻¹ k*
        let a: Matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| rbf(self.x[i], self.x[j], self.length, self.output_std) + if i == j { 1.0 / self.w[i] } else { 0.0 })
                    .collect()
            })
            .collect();
        let v = solve(a, ks.clone());
        let var = self.output_std * self.output_std - ks.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>();
        (mean, var)
    }
}

/// log|A| of a positive-definite matrix from the elimination pivots.
pub fn log_det(mut a: Matrix) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        total += a[col][col].abs().ln();
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
        }
    }
    total
}

impl DenseLaplace {
    /// −½ f̂ᵀK⁻¹f̂ + Σ log p(yᵢ|f̂ᵢ) − ½ log|I + W^½ K W^½|, using K⁻¹f̂ = ∇log p(y|f̂).
    pub fn log_marginal(&self, targets: &[f64]) -> f64 {
        let n = self.x.len();
        let quad: f64 = self.mode.iter().zip(&self.grad).map(|(f, g)| f * g).sum();
        let lik: f64 = self
            .mode
            .iter()
            .zip(targets)
            .map(|(&f, &t)| {
                let yf = if t > 0.5 { f } else { -f };
                -(1.0 + (-yf).exp()).ln()
            })
            .sum();
        let b: Matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let k = rbf(self.x[i], self.x[j], self.length, self.output_std);
                        (if i == j { 1.0 } else { 0.0 }) + self.w[i].sqrt() * k * self.w[j].sqrt()
                    })
                    .collect()
            })
            .collect();
        -0.5 * quad + lik - 0.5 * log_det(b)
    }
}
