//! Adam, mini-batch training with early stopping, and gradient checking.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{mse_loss, ColApsOperator};
use super::network::{ModelKind, NetworkParams};
use super::tensor::Tensor;
use crate::{Error, Result};

/// Samples per independent forward/backward work item. Fixed so that the
/// gradient reduction order does not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub max_epochs: usize,
    /// Epochs without a strict validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            max_epochs: 1000,
            patience: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_eps > 0.0) {
            return bad(format!("adam_eps must be positive, got {}", self.adam_eps));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        Ok(())
    }

    /// Generator for weight initialization, independent of the shuffle stream.
    pub fn init_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        rng
    }

    fn shuffle_rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(1);
        rng
    }
}

/// First and second moment estimates per parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<Tensor>>,
    pub v: Vec<Vec<Tensor>>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let zeros: Vec<Vec<Tensor>> = params
            .params
            .iter()
            .map(|ts| ts.iter().map(Tensor::zeros_like).collect())
            .collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut NetworkParams,
    grads: &[Vec<Tensor>],
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    let fits = |a: &[Vec<Tensor>]| {
        a.len() == params.params.len()
            && a.iter()
                .zip(&params.params)
                .all(|(x, p)| x.len() == p.len() && x.iter().zip(p).all(|(u, w)| u.shape == w.shape))
    };
    if !fits(grads) || !fits(&state.m) || !fits(&state.v) {
        return Err(Error::DimensionMismatch("gradients or optimizer state do not match the parameters".into()));
    }
    state.t += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    for (i, ts) in params.params.iter_mut().enumerate() {
        for (j, p) in ts.iter_mut().enumerate() {
            let g = &grads[i][j].data;
            let m = &mut state.m[i][j].data;
            let v = &mut state.v[i][j].data;
            for k in 0..p.data.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p.data[k] -= cfg.learning_rate * mh / (vh.sqrt() + cfg.adam_eps);
            }
        }
    }
    Ok(())
}

/// What the network output is compared against.
#[derive(Clone, Debug)]
pub enum Objective {
    /// Mean squared error against targets in the network's output domain.
    Mse,
    /// Squared error between the APS of the predicted column and a linear target APS.
    ColAps(ColApsOperator),
}

/// Paired inputs and targets in physical units; input normalization is
/// applied from the parameters' normalizer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl Samples {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Largest absolute input value (1 for an all-zero set).
    pub fn input_max_abs(&self) -> f64 {
        max_abs(self.inputs.iter().flatten())
    }

    /// Largest absolute value over inputs and targets.
    pub fn max_abs(&self) -> f64 {
        max_abs(self.inputs.iter().chain(&self.targets).flatten())
    }
}

fn max_abs<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let m = values.fold(0.0f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Scale applied to targets before comparing them with network outputs.
fn target_scale(params: &NetworkParams) -> f64 {
    match params.model {
        ModelKind::Aps => 1.0 / params.normalizer,
        ModelKind::Col => 1.0,
    }
}

/// Sum of per-sample losses over `idx`, and optionally the gradient of that sum.
fn chunk_loss(
    params: &NetworkParams,
    objective: &Objective,
    data: &Samples,
    idx: &[usize],
    with_grad: bool,
) -> Result<(f64, Option<Vec<Vec<Tensor>>>)> {
    let inputs: Vec<&[f64]> = idx.iter().map(|&i| data.inputs[i].as_slice()).collect();
    let x = params.batch_input(&inputs)?;
    let (y, caches) = if with_grad {
        params.forward(&x)?
    } else {
        (params.predict(&x)?, Vec::new())
    };
    let batch = idx.len();
    let (loss, grad) = match objective {
        Objective::Mse => {
            let s = target_scale(params);
            let target = Tensor::new(
                y.shape.clone(),
                idx.iter().flat_map(|&i| data.targets[i].iter().map(move |v| v * s)).collect(),
            )?;
            let (l, mut g) = mse_loss(&y, &target)?;
            g.scale(batch as f64);
            (l * batch as f64, g)
        }
        Objective::ColAps(op) => {
            let width = y.len() / batch;
            let mut g = y.zeros_like();
            let mut total = 0.0;
            for (b, &i) in idx.iter().enumerate() {
                let (l, gb) = op.loss(&y.data[b * width..(b + 1) * width], &data.targets[i])?;
                total += l;
                g.data[b * width..(b + 1) * width].copy_from_slice(&gb);
            }
            (total, g)
        }
    };
    if !with_grad {
        return Ok((loss, None));
    }
    Ok((loss, Some(params.backward(&caches, &grad)?)))
}

/// Mean per-sample loss over `idx` with its gradient, computed in fixed-size
/// chunks in parallel and reduced in chunk order.
fn batch_loss(
    params: &NetworkParams,
    objective: &Objective,
    data: &Samples,
    idx: &[usize],
    with_grad: bool,
) -> Result<(f64, Option<Vec<Vec<Tensor>>>)> {
    let parts: Vec<_> = idx
        .par_chunks(CHUNK)
        .map(|c| chunk_loss(params, objective, data, c, with_grad))
        .collect::<Result<_>>()?;
    let n = idx.len() as f64;
    let mut loss = 0.0;
    let mut grads: Option<Vec<Vec<Tensor>>> = None;
    for (l, g) in parts {
        loss += l;
        if let Some(g) = g {
            match grads.as_mut() {
                None => grads = Some(g),
                Some(acc) => {
                    for (a, b) in acc.iter_mut().flatten().zip(g.iter().flatten()) {
                        a.add_assign(b);
                    }
                }
            }
        }
    }
    if let Some(g) = grads.as_mut() {
        g.iter_mut().flatten().for_each(|t| t.scale(1.0 / n));
    }
    Ok((loss / n, grads))
}

/// Mean per-sample loss over a whole set.
pub fn evaluate(params: &NetworkParams, objective: &Objective, data: &Samples) -> Result<f64> {
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(batch_loss(params, objective, data, &idx, false)?.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters at the epoch with the lowest validation loss.
    pub params: NetworkParams,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

fn check_samples(name: &str, s: &Samples) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidConfig(format!("{name} set is empty")));
    }
    if s.inputs.len() != s.targets.len() {
        return Err(Error::DimensionMismatch(format!(
            "{name} set has {} inputs and {} targets",
            s.inputs.len(),
            s.targets.len()
        )));
    }
    Ok(())
}

/// Mini-batch Adam on shuffled epochs with early stopping on validation loss.
///
/// Epoch `e` (1-based) is recorded with the mean training loss over its
/// batches and the validation loss after its last update. Training stops once
/// `patience` epochs pass without a strict improvement, or at `max_epochs`.
pub fn train(
    init: NetworkParams,
    objective: &Objective,
    train_set: &Samples,
    val_set: &Samples,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    check_samples("training", train_set)?;
    check_samples("validation", val_set)?;
    let mut params = init;
    let mut state = AdamState::new(&params);
    let mut rng = cfg.shuffle_rng();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best = (params.clone(), 0, f64::INFINITY);
    let mut stale = 0;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let (loss, grads) = batch_loss(&params, objective, train_set, batch, true)?;
            if !loss.is_finite() {
                return Err(Error::DivergedLoss { epoch, loss });
            }
            total += loss * batch.len() as f64;
            adam_step(&mut params, &grads.expect("gradient requested"), &mut state, cfg)?;
        }
        let train_loss = total / train_set.len() as f64;
        let val_loss = evaluate(&params, objective, val_set)?;
        if !val_loss.is_finite() {
            return Err(Error::DivergedLoss { epoch, loss: val_loss });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        if val_loss < best.2 {
            best = (params.clone(), epoch, val_loss);
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (params, best_epoch, best_val_loss) = best;
    Ok(TrainOutcome {
        params,
        history,
        best_epoch,
        best_val_loss,
    })
}

/// Largest relative error between analytic and central-difference gradients
/// of the mean loss over `data`, on `count` parameters drawn uniformly from
/// all tensors. The relative error is `|a - n| / max(|a|, |n|, 1e-8)`.
///
/// Each parameter is probed with steps `eps`, `10 eps` and `eps / 10` and the
/// closest agreement counts: a step that crosses a ReLU or max-pool kink, or
/// one swamped by rounding on a tiny gradient, would otherwise flag a
/// correct gradient. A wrong gradient disagrees at every step.
pub fn grad_check<R: Rng + ?Sized>(
    params: &NetworkParams,
    objective: &Objective,
    data: &Samples,
    eps: f64,
    count: usize,
    rng: &mut R,
) -> Result<f64> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::InvalidConfig(format!("finite-difference step {eps} outside [1e-7, 1e-3]")));
    }
    check_samples("gradient-check", data)?;
    let idx: Vec<usize> = (0..data.len()).collect();
    let grads = batch_loss(params, objective, data, &idx, true)?.1.expect("gradient requested");
    let slots: Vec<(usize, usize)> = params
        .params
        .iter()
        .enumerate()
        .flat_map(|(i, ts)| (0..ts.len()).map(move |j| (i, j)))
        .collect();
    let sizes: Vec<usize> = slots.iter().map(|&(i, j)| params.params[i][j].len()).collect();
    let total: usize = sizes.iter().sum();

    let mut worst = 0.0f64;
    let mut probe = params.clone();
    for _ in 0..count {
        let mut k = rng.random_range(0..total);
        let mut s = 0;
        while k >= sizes[s] {
            k -= sizes[s];
            s += 1;
        }
        let (i, j) = slots[s];
        let orig = params.params[i][j].data[k];
        let analytic = grads[i][j].data[k];
        let mut rel = f64::INFINITY;
        for h in [eps, 10.0 * eps, 0.1 * eps] {
            probe.params[i][j].data[k] = orig + h;
            let hi = batch_loss(&probe, objective, data, &idx, false)?.0;
            probe.params[i][j].data[k] = orig - h;
            let lo = batch_loss(&probe, objective, data, &idx, false)?.0;
            probe.params[i][j].data[k] = orig;
            let numeric = (hi - lo) / (2.0 * h);
            rel = rel.min((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8));
            if rel < 1e-7 {
                break;
            }
        }
        worst = worst.max(rel);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layers::LayerSpec;

    fn scalar_params(value: f64) -> NetworkParams {
        NetworkParams {
            model: ModelKind::Col,
            layers: vec![LayerSpec::FullyConnected { in_dim: 2, out_dim: 2 }],
            params: vec![vec![
                Tensor::new(vec![2, 2], vec![value, 0.0, 0.0, value]).unwrap(),
                Tensor::zeros(&[2]),
            ]],
            normalizer: 1.0,
        }
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let mut p = scalar_params(0.5);
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let g: Vec<Vec<Tensor>> = p.params.iter().map(|ts| ts.iter().map(Tensor::zeros_like).collect()).collect();
        adam_step(&mut p, &g, &mut st, &TrainConfig::default()).unwrap();
        assert_eq!(p, before);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn adam_first_step_is_lr() {
        let mut p = scalar_params(0.0);
        let mut st = AdamState::new(&p);
        let mut g: Vec<Vec<Tensor>> = p.params.iter().map(|ts| ts.iter().map(Tensor::zeros_like).collect()).collect();
        g[0][0].data[0] = 1.0;
        let cfg = TrainConfig::default();
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        let want = -1e-3 / (1.0 + 1e-8);
        assert!((p.params[0][0].data[0] - want).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for bad in [
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { learning_rate: 0.0, ..Default::default() },
            TrainConfig { adam_beta1: 1.0, ..Default::default() },
            TrainConfig { patience: 0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    fn identity_task(n: usize, seed: u64) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        Samples {
            targets: inputs.clone(),
            inputs,
        }
    }

    fn linear_net(seed: u64) -> NetworkParams {
        let mut p = NetworkParams {
            model: ModelKind::Col,
            layers: vec![LayerSpec::FullyConnected { in_dim: 4, out_dim: 4 }],
            params: vec![vec![Tensor::zeros(&[4, 4]), Tensor::zeros(&[4])]],
            normalizer: 1.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        p.params[0][0].data.iter_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        p
    }

    #[test]
    fn learns_identity() {
        let cfg = TrainConfig {
            batch_size: 8,
            learning_rate: 0.02,
            max_epochs: 50,
            patience: 50,
            ..Default::default()
        };
        let out = train(linear_net(1), &Objective::Mse, &identity_task(64, 2), &identity_task(32, 3), &cfg).unwrap();
        let first = out.history[0].val_loss;
        assert!(out.best_val_loss * 10.0 <= first, "{first} -> {}", out.best_val_loss);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            batch_size: 8,
            max_epochs: 5,
            seed: 9,
            ..Default::default()
        };
        let run = || train(linear_net(1), &Objective::Mse, &identity_task(40, 2), &identity_task(16, 3), &cfg).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.history, b.history);
        assert_eq!(a.params, b.params);
    }

    #[test]
    fn patience_one_with_flat_validation_stops_after_two_epochs() {
        // zero learning signal: targets equal to a zero network's output
        let data = Samples {
            inputs: vec![vec![0.0; 4]; 8],
            targets: vec![vec![0.0; 4]; 8],
        };
        let cfg = TrainConfig {
            patience: 1,
            max_epochs: 10,
            ..Default::default()
        };
        let mut p = linear_net(0);
        p.params[0][0].data.iter_mut().for_each(|v| *v = 0.0);
        let out = train(p, &Objective::Mse, &data, &data, &cfg).unwrap();
        assert_eq!(out.history.len(), 2);
    }

    #[test]
    fn best_params_reproduce_best_val_loss() {
        let cfg = TrainConfig {
            batch_size: 8,
            max_epochs: 20,
            ..Default::default()
        };
        let val = identity_task(16, 3);
        let out = train(linear_net(1), &Objective::Mse, &identity_task(40, 2), &val, &cfg).unwrap();
        let min = out.history.iter().map(|r| r.val_loss).fold(f64::INFINITY, f64::min);
        assert_eq!(out.best_val_loss, min);
        assert_eq!(evaluate(&out.params, &Objective::Mse, &val).unwrap(), min);
    }

    #[test]
    fn empty_sets_are_rejected() {
        let r = train(linear_net(1), &Objective::Mse, &Samples::default(), &identity_task(4, 1), &TrainConfig::default());
        assert!(matches!(r, Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = identity_task(8, 1);
        data.targets[0][0] = f64::INFINITY;
        let r = train(linear_net(1), &Objective::Mse, &data, &identity_task(4, 2), &TrainConfig::default());
        assert!(matches!(r, Err(Error::DivergedLoss { epoch: 1, .. })));
    }

    #[test]
    fn grad_check_rejects_bad_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(grad_check(&linear_net(1), &Objective::Mse, &identity_task(4, 1), 1e-2, 10, &mut rng).is_err());
    }
}
