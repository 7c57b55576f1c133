use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthdata::LabeledPoint;

pub const INPUT_DIM: usize = 2;
pub const OUTPUT_DIM: usize = 2;

/// Architecture of a fully connected ReLU network with a two-way softmax head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden_layers: usize,
    pub hidden_width: usize,
    /// Probability of zeroing a hidden activation; 0 disables dropout.
    pub dropout_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetworkSize {
    Small,
    Medium,
    Large,
}

impl NetworkSize {
    pub const ALL: [NetworkSize; 3] = [NetworkSize::Small, NetworkSize::Medium, NetworkSize::Large];

    pub fn layers_and_width(self) -> (usize, usize) {
        match self {
            NetworkSize::Small => (1, 20),
            NetworkSize::Medium => (3, 200),
            NetworkSize::Large => (8, 2000),
        }
    }

    pub fn config(self, dropout_rate: f64) -> MlpConfig {
        let (hidden_layers, hidden_width) = self.layers_and_width();
        MlpConfig {
            hidden_layers,
            hidden_width,
            dropout_rate,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NetworkSize::Small => "small",
            NetworkSize::Medium => "medium",
            NetworkSize::Large => "large",
        }
    }
}

impl std::str::FromStr for NetworkSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "small" => Ok(NetworkSize::Small),
            "medium" => Ok(NetworkSize::Medium),
            "large" => Ok(NetworkSize::Large),
            other => Err(Error::Malformed(format!("unknown network size '{other}'"))),
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::param("network needs at least one hidden layer of positive width"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::param(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }

    /// (fan_in, fan_out) of every layer, input to output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.hidden_layers + 1);
        let mut fan_in = INPUT_DIM;
        for _ in 0..self.hidden_layers {
            shapes.push((fan_in, self.hidden_width));
            fan_in = self.hidden_width;
        }
        shapes.push((fan_in, OUTPUT_DIM));
        shapes
    }
}

/// One affine layer; `weight` is fan_in × fan_out so a batch maps as `x · W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Network parameters θ, also used to hold their gradients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "WeightsRecord", try_from = "WeightsRecord")]
pub struct NetworkWeights {
    pub layers: Vec<Dense>,
}

impl NetworkWeights {
    /// Kaiming-uniform weights, bound sqrt(6 / fan_in); biases uniform in ±1/sqrt(fan_in).
    pub fn init<R: Rng + ?Sized>(config: &MlpConfig, rng: &mut R) -> Self {
        let layers = config
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let w_bound = (6.0 / fan_in as f64).sqrt();
                let b_bound = 1.0 / (fan_in as f64).sqrt();
                let weight = Array2::from_shape_simple_fn((fan_in, fan_out), || rng.random_range(-w_bound..w_bound));
                let bias = Array1::from_shape_simple_fn(fan_out, || rng.random_range(-b_bound..b_bound));
                Dense { weight, bias }
            })
            .collect();
        Self { layers }
    }

    pub fn zeros(config: &MlpConfig) -> Self {
        Self::zeros_from_shapes(&config.layer_shapes())
    }

    fn zeros_from_shapes(shapes: &[(usize, usize)]) -> Self {
        let layers = shapes
            .iter()
            .map(|&(i, o)| Dense {
                weight: Array2::zeros((i, o)),
                bias: Array1::zeros(o),
            })
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        let shapes: Vec<_> = self.layers.iter().map(|l| l.weight.dim()).collect();
        Self::zeros_from_shapes(&shapes)
    }

    pub fn matches(&self, config: &MlpConfig) -> bool {
        let shapes = config.layer_shapes();
        shapes.len() == self.layers.len()
            && shapes
                .iter()
                .zip(&self.layers)
                .all(|(&s, l)| l.weight.dim() == s && l.bias.len() == s.1)
    }

    pub fn num_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Every parameter tensor as a flat mutable slice, weights before biases per layer.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weight.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weight.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn hidden_count(&self) -> usize {
        self.layers.len() - 1
    }

    /// Logits and softmax probabilities for a batch (rows are points).
    pub fn forward(&self, x: ArrayView2<f64>, masks: Option<&DropoutMasks>) -> Result<Forward> {
        let (logits, _) = self.forward_cached(x, masks)?;
        let probabilities = softmax_rows(logits.view());
        Ok(Forward { logits, probabilities })
    }

    /// Logits without dropout.
    pub fn logits(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.forward_cached(x, None).map(|(z, _)| z)
    }

    /// Mean objective loss on a batch and its gradient with respect to
    /// every weight and bias, by backpropagation.
    pub fn loss_gradient(
        &self,
        x: ArrayView2<f64>,
        labels: &[crate::synthdata::Class],
        objective: &dyn crate::nn::Objective,
        epoch: usize,
        masks: Option<&DropoutMasks>,
    ) -> Result<(f64, NetworkWeights)> {
        if x.nrows() != labels.len() {
            return Err(Error::LengthMismatch {
                left: x.nrows(),
                right: labels.len(),
            });
        }
        let (logits, cache) = self.forward_cached(x, masks)?;
        let (loss, dlogits) = objective.loss_and_grad(logits.view(), labels, epoch);
        Ok((loss, self.backward(&cache, masks, dlogits.view())))
    }

    pub(crate) fn forward_cached(
        &self,
        x: ArrayView2<f64>,
        masks: Option<&DropoutMasks>,
    ) -> Result<(Array2<f64>, ForwardCache)> {
        if let Some(m) = masks {
            if m.0.len() != self.hidden_count() {
                return Err(Error::param("dropout mask count differs from hidden layer count"));
            }
        }
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.hidden_count());
        let mut h = x.to_owned();
        for (l, layer) in self.layers[..self.hidden_count()].iter().enumerate() {
            let z = h.dot(&layer.weight) + &layer.bias;
            let mut a = z.mapv(|v| v.max(0.0));
            if let Some(m) = masks {
                a *= &m.0[l];
            }
            inputs.push(std::mem::replace(&mut h, a));
            pre.push(z);
        }
        let last = self.layers.last().expect("at least one layer");
        let logits = h.dot(&last.weight) + &last.bias;
        inputs.push(h);
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged("non-finite logits".into()));
        }
        Ok((logits, ForwardCache { inputs, pre }))
    }

    /// Parameter gradients given d(loss)/d(logits) for the cached batch.
    pub(crate) fn backward(
        &self,
        cache: &ForwardCache,
        masks: Option<&DropoutMasks>,
        dlogits: ArrayView2<f64>,
    ) -> NetworkWeights {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta = dlogits.to_owned();
        for l in (0..self.layers.len()).rev() {
            let weight_grad = cache.inputs[l].t().dot(&delta);
            let bias_grad = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.layers[l].weight.t());
                if let Some(m) = masks {
                    back *= &m.0[l - 1];
                }
                Zip::from(&mut back).and(&cache.pre[l - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
            grads.push(Dense {
                weight: weight_grad,
                bias: bias_grad,
            });
        }
        grads.reverse();
        NetworkWeights { layers: grads }
    }
}

pub struct Forward {
    pub logits: Array2<f64>,
    pub probabilities: Array2<f64>,
}

pub(crate) struct ForwardCache {
    /// Input to each layer (post activation and dropout for hidden layers).
    inputs: Vec<Array2<f64>>,
    /// Hidden pre-activations.
    pre: Vec<Array2<f64>>,
}

/// Inverted-dropout masks, one per hidden layer: each entry is 0 (dropped)
/// or 1/(1 − p) (kept), one row per point.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks(pub Vec<Array2<f64>>);

impl DropoutMasks {
    /// Fresh masks for `rows` points, or `None` when the rate is zero.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, rows: usize, config: &MlpConfig) -> Option<Self> {
        let p = config.dropout_rate;
        if p == 0.0 {
            return None;
        }
        let keep = 1.0 / (1.0 - p);
        let masks = (0..config.hidden_layers)
            .map(|_| {
                Array2::from_shape_simple_fn((rows, config.hidden_width), || {
                    if rng.random::<f64>() < p {
                        0.0
                    } else {
                        keep
                    }
                })
            })
            .collect();
        Some(Self(masks))
    }
}

pub fn softmax_row(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e0 = (z[0] - m).exp();
    let e1 = (z[1] - m).exp();
    let s = e0 + e1;
    [e0 / s, e1 / s]
}

pub fn softmax_rows(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(logits.dim());
    for (row, mut o) in logits.rows().into_iter().zip(out.rows_mut()) {
        let p = softmax_row([row[0], row[1]]);
        o[0] = p[0];
        o[1] = p[1];
    }
    out
}

/// Feature matrix (n × 2) of a point list.
pub fn features(points: &[LabeledPoint]) -> Array2<f64> {
    Array2::from_shape_fn((points.len(), INPUT_DIM), |(i, j)| if j == 0 { points[i].x1 } else { points[i].x2 })
}

pub fn coords_matrix(points: &[[f64; 2]]) -> Array2<f64> {
    Array2::from_shape_fn((points.len(), INPUT_DIM), |(i, j)| points[i][j])
}

#[derive(Serialize, Deserialize)]
struct LayerRecord {
    rows: usize,
    cols: usize,
    /// Row-major fan_in × fan_out.
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightsRecord {
    layers: Vec<LayerRecord>,
}

impl From<NetworkWeights> for WeightsRecord {
    fn from(w: NetworkWeights) -> Self {
        let layers = w
            .layers
            .into_iter()
            .map(|l| {
                let (rows, cols) = l.weight.dim();
                LayerRecord {
                    rows,
                    cols,
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                }
            })
            .collect();
        Self { layers }
    }
}

impl TryFrom<WeightsRecord> for NetworkWeights {
    type Error = String;

    fn try_from(r: WeightsRecord) -> std::result::Result<Self, String> {
        let layers = r
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                if l.bias.len() != l.cols {
                    return Err(format!("layer {i}: bias length {} != cols {}", l.bias.len(), l.cols));
                }
                let weight = Array2::from_shape_vec((l.rows, l.cols), l.weight)
                    .map_err(|e| format!("layer {i}: {e}"))?;
                Ok(Dense {
                    weight,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        if layers.is_empty() {
            return Err("network has no layers".into());
        }
        for w in layers.windows(2) {
            if w[0].weight.ncols() != w[1].weight.nrows() {
                return Err("consecutive layer shapes do not chain".into());
            }
        }
        Ok(NetworkWeights { layers })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn tiny() -> MlpConfig {
        MlpConfig {
            hidden_layers: 2,
            hidden_width: 5,
            dropout_rate: 0.0,
        }
    }

    #[test]
    fn zero_weights_give_uniform_probabilities() {
        let w = NetworkWeights::zeros(&tiny());
        let f = w.forward(array![[3.0, -7.0], [0.0, 0.0]].view(), None).unwrap();
        for p in f.probabilities.iter() {
            assert_eq!(*p, 0.5);
        }
    }

    #[test]
    fn softmax_is_shift_invariant() {
        assert_eq!(softmax_row([4.2, 4.2]), [0.5, 0.5]);
        let a = softmax_row([1.0, 3.0]);
        let b = softmax_row([101.0, 103.0]);
        assert!((a[0] - b[0]).abs() < 1e-15);
        assert!((a[0] + a[1] - 1.0).abs() < 1e-15);
        let big = softmax_row([1000.0, -1000.0]);
        assert_eq!(big, [1.0, 0.0]);
    }

    #[test]
    fn init_matches_config_and_serializes() {
        let cfg = tiny();
        let w = NetworkWeights::init(&cfg, &mut crate::rng::seeded(1));
        assert!(w.matches(&cfg));
        assert_eq!(w.num_parameters(), 2 * 5 + 5 + 5 * 5 + 5 + 5 * 2 + 2);
        let json = serde_json::to_string(&w).unwrap();
        let back: NetworkWeights = serde_json::from_str(&json).unwrap();
        assert_eq!(w, back);
    }

    #[test]
    fn malformed_checkpoint_is_rejected() {
        let bad = r#"{"layers":[{"rows":2,"cols":3,"weight":[1,2,3],"bias":[0,0,0]}]}"#;
        assert!(serde_json::from_str::<NetworkWeights>(bad).is_err());
    }

    #[test]
    fn dropout_masks_scale_survivors() {
        let cfg = MlpConfig {
            dropout_rate: 0.3,
            ..tiny()
        };
        let masks = DropoutMasks::sample(&mut crate::rng::seeded(2), 1000, &cfg).unwrap();
        assert_eq!(masks.0.len(), 2);
        let keep = 1.0 / 0.7;
        let kept = masks.0[0].iter().filter(|&&v| v == keep).count();
        assert!(masks.0[0].iter().all(|&v| v == 0.0 || v == keep));
        assert!((kept as f64 / 5000.0 - 0.7).abs() < 0.03);
        assert!(DropoutMasks::sample(&mut crate::rng::seeded(2), 10, &tiny()).is_none());
    }

    #[test]
    fn masked_units_contribute_nothing() {
        let cfg = MlpConfig {
            hidden_layers: 1,
            hidden_width: 3,
            dropout_rate: 0.5,
        };
        let w = NetworkWeights::init(&cfg, &mut crate::rng::seeded(3));
        let x = array![[1.0, 2.0]];
        let all_dropped = DropoutMasks(vec![Array2::zeros((1, 3))]);
        let f = w.forward(x.view(), Some(&all_dropped)).unwrap();
        let last = &w.layers[1];
        assert!((f.logits[[0, 0]] - last.bias[0]).abs() < 1e-15);
        assert!((f.logits[[0, 1]] - last.bias[1]).abs() < 1e-15);
    }
}
