//! Binary Gaussian-process classification with a logistic likelihood.
//!
//! The latent posterior is approximated by a Gaussian at its mode (Laplace),
//! found by Newton iterations on `B = I + W½ K W½`. Kernel hyperparameters
//! maximize the approximate log marginal likelihood
//!
//! ```text
//! log Z = −½ aᵀf + Σ log σ(yᵢ fᵢ) − Σ log Lᵢᵢ,   f = K a,  B = L Lᵀ
//! ```
//!
//! over (log l, log σ_o) with a multi-start Nelder–Mead search. Predictions
//! push T Gaussian draws of the latent value through the sigmoid.

use std::f64::consts::LN_10;

use faer::{Col, Mat, Side};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{not_fitted, Algorithm, FitReport, Predictions, ProbabilisticClassifier};
use crate::error::{Error, Result};
use crate::posterior::PredictiveEstimate;
use crate::rng::{derive_seed, standard_normal, stream};
use crate::special::{log_sigmoid, sigmoid};
use crate::synthdata::LabeledPoint;

pub const NEWTON_TOL: f64 = 1e-6;
pub const NEWTON_MAX_ITER: usize = 100;
const JITTER_START: f64 = 1e-8;
const JITTER_MAX: f64 = 1e-4;
/// Test points per prediction chunk.
const PREDICT_CHUNK: usize = 512;

/// Squared-exponential kernel σ_o² exp(−‖x − x'‖² / 2l²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbfKernel {
    pub length_scale: f64,
    /// σ_o; the kernel variance is its square.
    pub output_std: f64,
}

impl RbfKernel {
    /// Length scale 8 and output variance 2.
    pub fn initial() -> Self {
        Self {
            length_scale: 8.0,
            output_std: std::f64::consts::SQRT_2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.length_scale) && ok(self.output_std) {
            Ok(())
        } else {
            Err(Error::param(format!(
                "kernel parameters must be positive, got l={} σ_o={}",
                self.length_scale, self.output_std
            )))
        }
    }

    pub fn variance(&self) -> f64 {
        self.output_std * self.output_std
    }

    pub fn eval(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let d2 = (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2);
        self.variance() * (-d2 / (2.0 * self.length_scale * self.length_scale)).exp()
    }

    pub fn gram(&self, x: &[[f64; 2]]) -> Mat<f64> {
        let n = x.len();
        let mut k = Mat::zeros(n, n);
        for j in 0..n {
            k[(j, j)] = self.variance();
            for i in j + 1..n {
                let v = self.eval(x[i], x[j]);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// Train-by-test cross covariance.
    pub fn cross(&self, x: &[[f64; 2]], z: &[[f64; 2]]) -> Mat<f64> {
        Mat::from_fn(x.len(), z.len(), |i, j| self.eval(x[i], z[j]))
    }

    fn to_log(self) -> [f64; 2] {
        [self.length_scale.ln(), self.output_std.ln()]
    }

    fn from_log(theta: [f64; 2]) -> Self {
        Self {
            length_scale: theta[0].exp(),
            output_std: theta[1].exp(),
        }
    }
}

/// Marginal Gaussian of the latent function at one test point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentPosterior {
    pub mean: f64,
    pub variance: f64,
}

impl LatentPosterior {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Laplace approximation at the posterior mode for fixed kernel parameters.
#[derive(Debug, Clone)]
pub struct LaplaceFit {
    pub kernel: RbfKernel,
    pub inputs: Vec<[f64; 2]>,
    /// Class-2 indicators t ∈ {0, 1} (y = 2t − 1).
    pub targets: Vec<f64>,
    pub mode: Vec<f64>,
    /// ∇ log p(y|f) = t − π at the mode.
    pub grad_log_lik: Vec<f64>,
    pub sqrt_w: Vec<f64>,
    /// Lower Cholesky factor of B at the mode.
    pub chol: Mat<f64>,
    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub jitter: f64,
    pub log_marginal: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

/// Everything in a [`LaplaceFit`] except the Cholesky factor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LaplaceRecord {
    pub kernel: RbfKernel,
    pub inputs: Vec<[f64; 2]>,
    pub targets: Vec<f64>,
    pub mode: Vec<f64>,
    pub jitter: f64,
    pub log_marginal: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

impl LaplaceFit {
    pub fn record(&self) -> LaplaceRecord {
        LaplaceRecord {
            kernel: self.kernel,
            inputs: self.inputs.clone(),
            targets: self.targets.clone(),
            mode: self.mode.clone(),
            jitter: self.jitter,
            log_marginal: self.log_marginal,
            newton_iterations: self.newton_iterations,
            converged: self.converged,
        }
    }

    /// Rebuilds a fit from its record and a stored Cholesky factor.
    pub fn from_parts(record: LaplaceRecord, chol: Mat<f64>) -> Result<Self> {
        let n = record.inputs.len();
        if record.targets.len() != n || record.mode.len() != n {
            return Err(Error::Malformed("GP record vectors have inconsistent lengths".into()));
        }
        if chol.nrows() != n || chol.ncols() != n {
            return Err(Error::Malformed(format!(
                "Cholesky factor is {}x{}, expected {n}x{n}",
                chol.nrows(),
                chol.ncols()
            )));
        }
        let (grad_log_lik, sqrt_w) = likelihood_terms(&record.targets, &record.mode);
        Ok(Self {
            kernel: record.kernel,
            inputs: record.inputs,
            targets: record.targets,
            mode: record.mode,
            grad_log_lik,
            sqrt_w,
            chol,
            jitter: record.jitter,
            log_marginal: record.log_marginal,
            newton_iterations: record.newton_iterations,
            converged: record.converged,
        })
    }

    /// Latent mean and variance at each test point.
    pub fn latent(&self, points: &[[f64; 2]]) -> Result<Vec<LatentPosterior>> {
        let n = self.inputs.len();
        let var0 = self.kernel.variance();
        let chunks: Vec<Vec<LatentPosterior>> = points
            .par_chunks(PREDICT_CHUNK)
            .map(|chunk| {
                let mut ks = self.kernel.cross(&self.inputs, chunk);
                let means: Vec<f64> = (0..chunk.len())
                    .map(|j| (0..n).map(|i| ks[(i, j)] * self.grad_log_lik[i]).sum())
                    .collect();
                for j in 0..chunk.len() {
                    for i in 0..n {
                        ks[(i, j)] *= self.sqrt_w[i];
                    }
                }
                self.chol.as_ref().solve_lower_triangular_in_place(ks.as_mut());
                (0..chunk.len())
                    .map(|j| {
                        let v2: f64 = (0..n).map(|i| ks[(i, j)] * ks[(i, j)]).sum();
                        LatentPosterior {
                            mean: means[j],
                            variance: (var0 - v2).max(0.0),
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(chunks.into_iter().flatten().collect())
    }
}

fn likelihood_terms(targets: &[f64], f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pi: Vec<f64> = f.iter().map(|&v| sigmoid(v)).collect();
    let grad = targets.iter().zip(&pi).map(|(t, p)| t - p).collect();
    let sqrt_w = pi.iter().map(|p| (p * (1.0 - p)).sqrt()).collect();
    (grad, sqrt_w)
}

fn log_lik(targets: &[f64], f: &[f64]) -> f64 {
    targets
        .iter()
        .zip(f)
        .map(|(&t, &v)| log_sigmoid((2.0 * t - 1.0) * v))
        .sum()
}

fn mat_vec(m: &Mat<f64>, v: &[f64]) -> Vec<f64> {
    let col = Col::from_fn(v.len(), |i| v[i]);
    let out = m * &col;
    (0..out.nrows()).map(|i| out[i]).collect()
}

/// Lower Cholesky factor of `I + W½ K W½`, adding diagonal jitter on failure.
fn factor_b(k: &Mat<f64>, sqrt_w: &[f64]) -> Result<(Mat<f64>, f64)> {
    let n = sqrt_w.len();
    let mut b = Mat::from_fn(n, n, |i, j| sqrt_w[i] * k[(i, j)] * sqrt_w[j]);
    for i in 0..n {
        b[(i, i)] += 1.0;
    }
    let mut jitter = 0.0;
    loop {
        if let Ok(llt) = b.llt(Side::Lower) {
            return Ok((llt.L().to_owned(), jitter));
        }
        let next = if jitter == 0.0 { JITTER_START } else { jitter * 10.0 };
        if next > JITTER_MAX * (1.0 + 1e-9) {
            return Err(Error::Cholesky { jitter });
        }
        for i in 0..n {
            b[(i, i)] += next - jitter;
        }
        log::debug!("Cholesky failed, retrying with jitter {next:e}");
        jitter = next;
    }
}

/// Solves B x = rhs given the lower factor of B.
fn solve_b(l: &Mat<f64>, rhs: &[f64]) -> Vec<f64> {
    let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    l.as_ref().solve_lower_triangular_in_place(x.as_mut());
    l.as_ref().transpose().solve_upper_triangular_in_place(x.as_mut());
    (0..rhs.len()).map(|i| x[(i, 0)]).collect()
}

/// Newton search for the latent mode with step halving.
pub fn laplace_fit(x: &[[f64; 2]], targets: &[f64], kernel: RbfKernel) -> Result<LaplaceFit> {
    kernel.validate()?;
    if x.is_empty() {
        return Err(Error::Empty("GP training set"));
    }
    if x.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: targets.len(),
        });
    }
    let k = kernel.gram(x);
    laplace_with_gram(x, targets, kernel, &k)
}

fn laplace_with_gram(x: &[[f64; 2]], targets: &[f64], kernel: RbfKernel, k: &Mat<f64>) -> Result<LaplaceFit> {
    let n = x.len();
    let mut f = vec![0.0; n];
    let mut a = vec![0.0; n];
    let objective = |a: &[f64], f: &[f64]| -0.5 * dot(a, f) + log_lik(targets, f);
    let mut psi = objective(&a, &f);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < NEWTON_MAX_ITER {
        iterations += 1;
        let (grad, sqrt_w) = likelihood_terms(targets, &f);
        let b: Vec<f64> = (0..n).map(|i| sqrt_w[i] * sqrt_w[i] * f[i] + grad[i]).collect();
        let (l, _) = factor_b(k, &sqrt_w)?;
        let kb = mat_vec(k, &b);
        let rhs: Vec<f64> = (0..n).map(|i| sqrt_w[i] * kb[i]).collect();
        let c = solve_b(&l, &rhs);
        let mut a_new: Vec<f64> = (0..n).map(|i| b[i] - sqrt_w[i] * c[i]).collect();
        let mut f_new = mat_vec(k, &a_new);
        let mut psi_new = objective(&a_new, &f_new);
        let mut halvings = 0;
        while !(psi_new >= psi - 1e-10 * psi.abs().max(1.0)) && halvings < 30 {
            for (an, ao) in a_new.iter_mut().zip(&a) {
                *an = 0.5 * (*an + ao);
            }
            f_new = mat_vec(k, &a_new);
            psi_new = objective(&a_new, &f_new);
            halvings += 1;
        }
        if !psi_new.is_finite() {
            return Err(Error::Diverged("non-finite Laplace objective".into()));
        }
        let delta = f_new.iter().zip(&f).map(|(u, v)| (u - v).abs()).sum::<f64>() / n as f64;
        a = a_new;
        f = f_new;
        psi = psi_new;
        if delta < NEWTON_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("Laplace Newton iterations stopped at the cap of {NEWTON_MAX_ITER}");
    }
    let (grad_log_lik, sqrt_w) = likelihood_terms(targets, &f);
    let (chol, jitter) = factor_b(k, &sqrt_w)?;
    let log_det_half: f64 = (0..n).map(|i| chol[(i, i)].ln()).sum();
    let log_marginal = -0.5 * dot(&a, &f) + log_lik(targets, &f) - log_det_half;
    Ok(LaplaceFit {
        kernel,
        inputs: x.to_vec(),
        targets: targets.to_vec(),
        mode: f,
        grad_log_lik,
        sqrt_w,
        chol,
        jitter,
        log_marginal,
        newton_iterations: iterations,
        converged,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Approximate log marginal likelihood, or −∞ where the fit fails.
pub fn log_marginal_likelihood(x: &[[f64; 2]], targets: &[f64], kernel: RbfKernel) -> f64 {
    match laplace_fit(x, targets, kernel) {
        Ok(fit) if fit.log_marginal.is_finite() => fit.log_marginal,
        _ => f64::NEG_INFINITY,
    }
}

/// Minimizes `f` over the plane with the Nelder–Mead simplex method
/// (reflection 1, expansion 2, contraction ½, shrink ½).
pub fn nelder_mead(
    f: &mut dyn FnMut([f64; 2]) -> f64,
    start: [f64; 2],
    step: f64,
    max_evals: usize,
    tol: f64,
) -> ([f64; 2], f64, usize) {
    let mut evals = 0;
    let mut eval = |p: [f64; 2], evals: &mut usize| {
        *evals += 1;
        let v = f(p);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut simplex: Vec<([f64; 2], f64)> = [start, [start[0] + step, start[1]], [start[0], start[1] + step]]
        .into_iter()
        .map(|p| (p, eval(p, &mut evals)))
        .collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = (simplex[2].1 - simplex[0].1).abs();
        let size = simplex
            .iter()
            .map(|(p, _)| (p[0] - simplex[0].0[0]).abs().max((p[1] - simplex[0].0[1]).abs()))
            .fold(0.0, f64::max);
        if (spread < tol && simplex[2].1.is_finite()) || size < tol {
            break;
        }
        let centroid = lerp(simplex[0].0, simplex[1].0, 0.5);
        let worst = simplex[2];
        let reflected = lerp(centroid, worst.0, -1.0);
        let fr = eval(reflected, &mut evals);
        if fr < simplex[0].1 {
            let expanded = lerp(centroid, worst.0, -2.0);
            let fe = eval(expanded, &mut evals);
            simplex[2] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[1].1 {
            simplex[2] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < worst.1 {
                let p = lerp(centroid, reflected, 0.5);
                (p, eval(p, &mut evals))
            } else {
                let p = lerp(centroid, worst.0, 0.5);
                (p, eval(p, &mut evals))
            };
            if fc < worst.1.min(fr) {
                simplex[2] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    v.0 = lerp(best, v.0, 0.5);
                    v.1 = eval(v.0, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, evals)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpConfig {
    pub optimize: bool,
    pub initial: RbfKernel,
    /// Nelder–Mead starts: the initial kernel plus random log-uniform draws.
    pub restarts: usize,
    /// Hyperparameters are optimized on at most this many training points.
    pub max_opt_points: usize,
    pub max_evals_per_start: usize,
    /// Latent draws per prediction.
    pub mc_samples: usize,
}

impl Default for GpConfig {
    fn default() -> Self {
        Self {
            optimize: true,
            initial: RbfKernel::initial(),
            restarts: 3,
            max_opt_points: 2000,
            max_evals_per_start: 120,
            mc_samples: 1000,
        }
    }
}

/// Outcome of the marginal-likelihood search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterSearch {
    pub points_used: usize,
    pub initial_log_marginal: f64,
    pub best_log_marginal: f64,
    pub best: RbfKernel,
    /// Best kernel and log marginal likelihood from each start.
    pub starts: Vec<(RbfKernel, f64)>,
    pub evaluations: usize,
}

const LOG_L_BOUNDS: (f64, f64) = (-LN_10, 3.0 * LN_10); // [0.1, 1000]
const LOG_S_BOUNDS: (f64, f64) = (-2.0 * LN_10, 2.0 * LN_10); // [0.01, 100]

/// Multi-start Nelder–Mead over (log l, log σ_o).
pub fn optimize_kernel(x: &[[f64; 2]], targets: &[f64], cfg: &GpConfig, seed: u64) -> Result<HyperparameterSearch> {
    cfg.initial.validate()?;
    let k0 = cfg.initial;
    let initial_log_marginal = log_marginal_likelihood(x, targets, k0);
    let mut rng = stream(seed, "kernel-starts");
    let mut starts = vec![k0.to_log()];
    for _ in 1..cfg.restarts.max(1) {
        let l = rng.random_range(1f64.ln()..30f64.ln());
        let s = rng.random_range(0.3f64.ln()..5f64.ln());
        starts.push([l, s]);
    }
    let mut results = Vec::with_capacity(starts.len());
    let mut evaluations = 0;
    for start in starts {
        let mut objective = |theta: [f64; 2]| {
            if !(LOG_L_BOUNDS.0..=LOG_L_BOUNDS.1).contains(&theta[0])
                || !(LOG_S_BOUNDS.0..=LOG_S_BOUNDS.1).contains(&theta[1])
            {
                return f64::INFINITY;
            }
            -log_marginal_likelihood(x, targets, RbfKernel::from_log(theta))
        };
        let (theta, value, used) = nelder_mead(&mut objective, start, 0.5, cfg.max_evals_per_start, 1e-5);
        evaluations += used;
        results.push((RbfKernel::from_log(theta), -value));
    }
    let (best, best_log_marginal) = results
        .iter()
        .copied()
        .chain(std::iter::once((k0, initial_log_marginal)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    if !best_log_marginal.is_finite() {
        return Err(Error::Diverged("no kernel gave a finite marginal likelihood".into()));
    }
    Ok(HyperparameterSearch {
        points_used: x.len(),
        initial_log_marginal,
        best_log_marginal,
        best,
        starts: results,
        evaluations,
    })
}

/// T sigmoid-transformed latent draws per point; point `j` uses its own stream.
pub fn latent_mc(latent: &[LatentPosterior], samples: usize, seed: u64) -> Result<Vec<PredictiveEstimate>> {
    if samples == 0 {
        return Err(Error::param("at least one Monte Carlo sample is required"));
    }
    latent
        .par_iter()
        .enumerate()
        .map(|(j, lp)| {
            let mut rng = stream(seed, &format!("point/{j}"));
            let sd = lp.std_dev();
            let draws: Vec<f64> = (0..samples)
                .map(|_| sigmoid(lp.mean + sd * standard_normal(&mut rng)))
                .collect();
            PredictiveEstimate::from_draws(&draws)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct GpClassifier {
    pub config: GpConfig,
    pub fitted: Option<LaplaceFit>,
    pub search: Option<HyperparameterSearch>,
    pub inference_seed: u64,
}

impl GpClassifier {
    pub fn new(config: GpConfig) -> Self {
        Self {
            config,
            fitted: None,
            search: None,
            inference_seed: 0,
        }
    }

    pub fn latent(&self, points: &[[f64; 2]]) -> Result<Vec<LatentPosterior>> {
        self.fitted.as_ref().ok_or_else(not_fitted)?.latent(points)
    }
}

pub fn class2_targets(points: &[LabeledPoint]) -> Vec<f64> {
    points.iter().map(|p| if p.label.is_two() { 1.0 } else { 0.0 }).collect()
}

impl ProbabilisticClassifier for GpClassifier {
    fn algorithm(&self) -> Algorithm {
        Algorithm::Gp
    }

    fn fit(&mut self, train: &[LabeledPoint], _validation: &[LabeledPoint], seed: u64) -> Result<FitReport> {
        if train.is_empty() {
            return Err(Error::Empty("GP training set"));
        }
        let x: Vec<[f64; 2]> = train.iter().map(|p| p.coords()).collect();
        let t = class2_targets(train);
        let mut notes = Vec::new();
        let kernel = if self.config.optimize {
            let m = train.len().min(self.config.max_opt_points.max(1));
            let search = optimize_kernel(&x[..m], &t[..m], &self.config, derive_seed(seed, "kernel"))?;
            notes.push(format!(
                "kernel l={:.4} σ_o={:.4} from {m} points (log Z {:.3} -> {:.3})",
                search.best.length_scale, search.best.output_std, search.initial_log_marginal, search.best_log_marginal
            ));
            let k = search.best;
            self.search = Some(search);
            k
        } else {
            self.config.initial
        };
        let fit = laplace_fit(&x, &t, kernel)?;
        if fit.jitter > 0.0 {
            notes.push(format!("Cholesky jitter {:e}", fit.jitter));
        }
        let report = FitReport {
            units_trained: 1,
            units_diverged: 0,
            validation_loss: None,
            notes,
        };
        self.fitted = Some(fit);
        self.inference_seed = derive_seed(seed, "inference");
        Ok(report)
    }

    fn predict_detailed(&self, points: &[[f64; 2]]) -> Result<Predictions> {
        let latent = self.latent(points)?;
        Ok(Predictions::without_flags(latent_mc(
            &latent,
            self.config.mc_samples,
            self.inference_seed,
        )?))
    }
}
