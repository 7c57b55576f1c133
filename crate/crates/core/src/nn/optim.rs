use crate::nn::mlp::NetworkWeights;

/// AdamW with decoupled weight decay applied to every parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamWConfig {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Self {
            learning_rate,
            weight_decay,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates for one flat tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentState {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl MomentState {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One AdamW update of `param` in place; `step` counts from 1.
pub fn adamw_update(cfg: &AdamWConfig, step: u64, param: &mut [f64], grad: &[f64], state: &mut MomentState) {
    debug_assert_eq!(param.len(), grad.len());
    let bc1 = 1.0 - cfg.beta1.powi(step as i32);
    let bc2 = 1.0 - cfg.beta2.powi(step as i32);
    let decay = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for (((p, &g), m), v) in param.iter_mut().zip(grad).zip(&mut state.m).zip(&mut state.v) {
        *p *= decay;
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: AdamWConfig,
    step: u64,
    states: Vec<MomentState>,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, weights: &NetworkWeights) -> Self {
        let states = weights.tensors().iter().map(|t| MomentState::zeros(t.len())).collect();
        Self { cfg, step: 0, states }
    }

    pub fn step(&mut self, weights: &mut NetworkWeights, grads: &NetworkWeights) {
        self.step += 1;
        let grads = grads.tensors();
        for ((param, grad), state) in weights.tensors_mut().into_iter().zip(grads).zip(&mut self.states) {
            adamw_update(&self.cfg, self.step, param, grad, state);
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn converges_on_quadratic() {
        // f(x) = Σ a_i (x_i − c_i)²
        let a = [1.0, 4.0, 0.5];
        let c = [2.0, -1.0, 0.3];
        let cfg = AdamWConfig::new(0.01, 0.0);
        let mut x = vec![0.0; 3];
        let mut state = MomentState::zeros(3);
        for t in 1..=20_000 {
            let g: Vec<f64> = (0..3).map(|i| 2.0 * a[i] * (x[i] - c[i])).collect();
            adamw_update(&cfg, t, &mut x, &g, &mut state);
        }
        for i in 0..3 {
            assert!((x[i] - c[i]).abs() < 1e-3, "{i}: {}", x[i]);
        }
    }

    #[test]
    fn decay_shrinks_without_gradient() {
        let cfg = AdamWConfig::new(0.1, 0.5);
        let mut x = vec![1.0];
        let mut state = MomentState::zeros(1);
        adamw_update(&cfg, 1, &mut x, &[0.0], &mut state);
        assert!((x[0] - 0.95).abs() < 1e-15);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamWConfig::new(0.01, 0.0);
        let mut x = vec![0.0, 0.0];
        let mut state = MomentState::zeros(2);
        adamw_update(&cfg, 1, &mut x, &[3.0, -0.2], &mut state);
        assert!((x[0] + 0.01).abs() < 1e-9);
        assert!((x[1] - 0.01).abs() < 1e-9);
    }
}
