//! Layer stacks, their parameters and the two R2C models.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::layers::{layer_backward, layer_forward, Cache, LayerSpec};
use super::tensor::Tensor;
use crate::covariance::ToeplitzColumn;
use crate::spectrum::{Aps, ApsScale};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Radar APS to communication APS, fully convolutional.
    Aps,
    /// Radar covariance column to communication covariance column.
    Col,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Aps => "aps",
            ModelKind::Col => "col",
        }
    }

    /// Layer stack for an `n`-antenna array.
    pub fn layers(self, n: usize) -> Vec<LayerSpec> {
        match self {
            ModelKind::Aps => aps_net(n),
            ModelKind::Col => col_net(n),
        }
    }

    /// Per-sample input shape for an `n`-antenna array.
    pub fn input_shape(self, n: usize) -> Vec<usize> {
        match self {
            ModelKind::Aps => vec![1, n],
            ModelKind::Col => vec![2 * n],
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "aps" => Ok(ModelKind::Aps),
            "col" => Ok(ModelKind::Col),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}` (expected aps or col)"))),
        }
    }
}

/// Encoder-decoder of 1-D convolutions; shape preserving for `n` divisible by 4.
pub fn aps_net(_n: usize) -> Vec<LayerSpec> {
    let conv = |i, o, k, p| LayerSpec::Conv1d {
        in_channels: i,
        out_channels: o,
        kernel_size: k,
        padding: p,
    };
    let act = || LayerSpec::LeakyRelu { negative_slope: 0.1 };
    vec![
        conv(1, 16, 5, 2),
        act(),
        LayerSpec::MaxPool1d { factor: 2 },
        conv(16, 32, 5, 2),
        act(),
        LayerSpec::MaxPool1d { factor: 2 },
        conv(32, 32, 3, 1),
        act(),
        LayerSpec::UpSample1d { factor: 2 },
        conv(32, 16, 3, 1),
        act(),
        LayerSpec::UpSample1d { factor: 2 },
        conv(16, 1, 3, 1),
    ]
}

/// Three tanh hidden layers of width `4n` between `2n`-wide input and output.
pub fn col_net(n: usize) -> Vec<LayerSpec> {
    let fc = |i, o| LayerSpec::FullyConnected { in_dim: i, out_dim: o };
    vec![
        fc(2 * n, 4 * n),
        LayerSpec::Tanh,
        fc(4 * n, 4 * n),
        LayerSpec::Tanh,
        fc(4 * n, 4 * n),
        LayerSpec::Tanh,
        fc(4 * n, 2 * n),
    ]
}

/// Weights of a layer stack plus the input normalizer.
///
/// `normalizer` is the per-dataset max-abs scale: inputs are divided by it
/// before the first layer. For the APS model the outputs live in the same
/// normalized log domain and are multiplied back.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ParamsFile", try_from = "ParamsFile")]
pub struct NetworkParams {
    pub model: ModelKind,
    pub layers: Vec<LayerSpec>,
    /// `params[i]` holds `[weight, bias]` for layer `i`, or nothing.
    pub params: Vec<Vec<Tensor>>,
    pub normalizer: f64,
}

/// On-disk layout: tensors keyed by `"<layer>.weight"` / `"<layer>.bias"`.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    model: ModelKind,
    layers: Vec<LayerSpec>,
    tensors: BTreeMap<String, Tensor>,
    normalizer: f64,
}

const PARAM_NAMES: [&str; 2] = ["weight", "bias"];

fn tensor_key(layer: usize, slot: usize) -> String {
    format!("{layer:02}.{}", PARAM_NAMES[slot])
}

impl From<NetworkParams> for ParamsFile {
    fn from(p: NetworkParams) -> Self {
        let mut tensors = BTreeMap::new();
        for (i, ts) in p.params.into_iter().enumerate() {
            for (slot, t) in ts.into_iter().enumerate() {
                tensors.insert(tensor_key(i, slot), t);
            }
        }
        Self {
            model: p.model,
            layers: p.layers,
            tensors,
            normalizer: p.normalizer,
        }
    }
}

impl TryFrom<ParamsFile> for NetworkParams {
    type Error = Error;

    fn try_from(mut f: ParamsFile) -> Result<Self> {
        let mut params = Vec::with_capacity(f.layers.len());
        for (i, spec) in f.layers.iter().enumerate() {
            let mut ts = Vec::new();
            for slot in 0..spec.param_shapes().len() {
                let key = tensor_key(i, slot);
                let t = f
                    .tensors
                    .remove(&key)
                    .ok_or_else(|| Error::DimensionMismatch(format!("missing tensor `{key}`")))?;
                ts.push(t);
            }
            params.push(ts);
        }
        if let Some(extra) = f.tensors.keys().next() {
            return Err(Error::DimensionMismatch(format!("unexpected tensor `{extra}`")));
        }
        let p = NetworkParams {
            model: f.model,
            layers: f.layers,
            params,
            normalizer: f.normalizer,
        };
        p.validate()?;
        Ok(p)
    }
}

impl NetworkParams {
    /// All-zero parameters with unit normalizer.
    pub fn zeros(model: ModelKind, n: usize) -> Result<Self> {
        let layers = model.layers(n);
        let params = layers
            .iter()
            .map(|l| l.param_shapes().iter().map(|s| Tensor::zeros(s)).collect())
            .collect();
        let p = Self {
            model,
            layers,
            params,
            normalizer: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Glorot-uniform weights `U(+-sqrt(6 / (fan_in + fan_out)))`, zero biases.
    pub fn init<R: Rng + ?Sized>(model: ModelKind, n: usize, rng: &mut R) -> Result<Self> {
        let mut p = Self::zeros(model, n)?;
        for (spec, ts) in p.layers.iter().zip(p.params.iter_mut()) {
            if let (Some((fan_in, fan_out)), Some(w)) = (spec.fans(), ts.first_mut()) {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                w.data.iter_mut().for_each(|v| *v = rng.random_range(-bound..bound));
            }
        }
        Ok(p)
    }

    /// Array size fixed by the layer widths; the APS model is length agnostic.
    pub fn array_size(&self) -> Option<usize> {
        match (self.model, self.layers.first()) {
            (ModelKind::Col, Some(LayerSpec::FullyConnected { in_dim, .. })) => Some(in_dim / 2),
            _ => None,
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.params.iter().flatten().map(Tensor::len).sum()
    }

    /// Checks that tensor shapes match the layers, the layers chain for the
    /// model's input, and every value is finite.
    pub fn validate(&self) -> Result<()> {
        if self.params.len() != self.layers.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} parameter groups for {} layers",
                self.params.len(),
                self.layers.len()
            )));
        }
        for (i, (spec, ts)) in self.layers.iter().zip(&self.params).enumerate() {
            let want = spec.param_shapes();
            if want.len() != ts.len() || want.iter().zip(ts).any(|(w, t)| *w != t.shape) {
                return Err(Error::DimensionMismatch(format!("layer {i}: parameter shapes do not fit {spec:?}")));
            }
            for t in ts {
                t.check()?;
                if !t.is_finite() {
                    return Err(Error::InvalidConfig(format!("layer {i}: non-finite parameter")));
                }
            }
        }
        if !(self.normalizer.is_finite() && self.normalizer > 0.0) {
            return Err(Error::InvalidConfig(format!("normalizer must be positive, got {}", self.normalizer)));
        }
        let probe = match self.model {
            ModelKind::Aps => vec![1, 64],
            ModelKind::Col => vec![2 * self.array_size().unwrap_or(1)],
        };
        self.output_shape(&probe).map(|_| ())
    }

    /// Per-sample output shape for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        self.layers
            .iter()
            .try_fold(input.to_vec(), |shape, l| l.output_shape(&shape))
    }

    /// Forward pass over a batched tensor, keeping caches for backward.
    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, Vec<Cache>)> {
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for (spec, ts) in self.layers.iter().zip(&self.params) {
            let (y, c) = layer_forward(spec, ts, &h)?;
            caches.push(c);
            h = y;
        }
        Ok((h, caches))
    }

    /// Forward pass without caches.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        let mut h = x.clone();
        for (spec, ts) in self.layers.iter().zip(&self.params) {
            h = layer_forward(spec, ts, &h)?.0;
        }
        Ok(h)
    }

    /// Parameter gradients given the loss gradient at the output.
    pub fn backward(&self, caches: &[Cache], grad_out: &Tensor) -> Result<Vec<Vec<Tensor>>> {
        let mut grads = vec![Vec::new(); self.layers.len()];
        let mut g = grad_out.clone();
        for i in (0..self.layers.len()).rev() {
            let (gi, gp) = layer_backward(&self.layers[i], &self.params[i], &caches[i], &g)?;
            grads[i] = gp;
            g = gi;
        }
        Ok(grads)
    }

    /// Stacks per-sample feature vectors into a normalized batch tensor.
    pub fn batch_input(&self, samples: &[&[f64]]) -> Result<Tensor> {
        let width = samples.first().map_or(0, |s| s.len());
        if samples.iter().any(|s| s.len() != width) {
            return Err(Error::DimensionMismatch("ragged batch".into()));
        }
        let inv = 1.0 / self.normalizer;
        let data = samples.iter().flat_map(|s| s.iter().map(move |v| v * inv)).collect();
        let shape = match self.model {
            ModelKind::Aps => vec![samples.len(), 1, width],
            ModelKind::Col => vec![samples.len(), width],
        };
        Tensor::new(shape, data)
    }
}

/// Predicted communication APS (log scale) from a radar APS (log scale).
pub fn aps_net_apply(params: &NetworkParams, d_r_log: &Aps) -> Result<Aps> {
    if params.model != ModelKind::Aps {
        return Err(Error::MissingModel("aps_net_apply needs APS-model parameters".into()));
    }
    if d_r_log.scale != ApsScale::LogDb {
        return Err(Error::InvalidConfig("APS model input must be log scale".into()));
    }
    let x = params.batch_input(&[&d_r_log.values])?;
    let y = params.predict(&x)?;
    Ok(Aps::log_db(y.data.iter().map(|v| v * params.normalizer).collect()))
}

/// Predicted communication covariance column from a radar covariance column.
pub fn col_net_apply(params: &NetworkParams, r_r: &ToeplitzColumn) -> Result<ToeplitzColumn> {
    if params.model != ModelKind::Col {
        return Err(Error::MissingModel("col_net_apply needs column-model parameters".into()));
    }
    let channels = r_r.to_channels();
    let x = params.batch_input(&[&channels])?;
    let y = params.predict(&x)?;
    Ok(ToeplitzColumn::from_channels(&y.data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn aps_net_preserves_length() {
        for n in [16, 32, 64] {
            let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
            let p = NetworkParams::init(ModelKind::Aps, n, &mut rng).unwrap();
            assert_eq!(p.output_shape(&[1, n]).unwrap(), vec![1, n]);
            let d = Aps::log_db((0..n).map(|i| -(i as f64)).collect());
            assert_eq!(aps_net_apply(&p, &d).unwrap().len(), n);
        }
    }

    #[test]
    fn zero_weights_give_zero_output() {
        let p = NetworkParams::zeros(ModelKind::Aps, 16).unwrap();
        let d = Aps::log_db(vec![-3.0; 16]);
        assert!(aps_net_apply(&p, &d).unwrap().values.iter().all(|&v| v == 0.0));

        let p = NetworkParams::zeros(ModelKind::Col, 8).unwrap();
        let r = ToeplitzColumn {
            col: vec![C64::new(1.0, 0.0); 8],
        };
        let out = col_net_apply(&p, &r).unwrap();
        assert_eq!(out.len(), 8);
        assert!(out.col.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn apply_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = NetworkParams::init(ModelKind::Aps, 32, &mut rng).unwrap();
        let d = Aps::log_db((0..32).map(|i| (i as f64).sin()).collect());
        assert_eq!(aps_net_apply(&p, &d).unwrap(), aps_net_apply(&p, &d).unwrap());
    }

    #[test]
    fn col_hidden_activations_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = NetworkParams::init(ModelKind::Col, 8, &mut rng).unwrap();
        let x = p.batch_input(&[&[5.0; 16]]).unwrap();
        let (_, caches) = p.forward(&x).unwrap();
        for c in caches {
            if let Cache::Output(t) = c {
                assert!(t.data.iter().all(|v| (-1.0..=1.0).contains(v)));
            }
        }
    }

    #[test]
    fn json_round_trip_uses_named_tensors() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut p = NetworkParams::init(ModelKind::Col, 4, &mut rng).unwrap();
        p.normalizer = 2.5;
        let json = serde_json::to_string(&p).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["model"], "col");
        assert!(v["tensors"]["00.weight"]["shape"].is_array());
        assert_eq!(v["layers"][1]["kind"], "tanh");
        let back: NetworkParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn rejects_wrong_tensor_shape() {
        let p = NetworkParams::zeros(ModelKind::Col, 4).unwrap();
        let mut file: ParamsFile = p.into();
        file.tensors.insert("00.bias".into(), Tensor::zeros(&[3]));
        assert!(NetworkParams::try_from(file).is_err());
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(NetworkParams::zeros(ModelKind::Aps, 64).unwrap().num_parameters(), 16 * 5 + 16 + 32 * 16 * 5 + 32 + 32 * 32 * 3 + 32 + 16 * 32 * 3 + 16 + 16 * 3 + 1);
        let n = 64;
        let col = (2 * n * 4 * n + 4 * n) + 2 * (4 * n * 4 * n + 4 * n) + (4 * n * 2 * n + 2 * n);
        assert_eq!(NetworkParams::zeros(ModelKind::Col, n).unwrap().num_parameters(), col);
    }
}
