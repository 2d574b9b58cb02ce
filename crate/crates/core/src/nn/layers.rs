//! Layer kinds with hand-written forward and backward passes.
//!
//! Convolutional tensors are `[batch, channels, length]`; fully connected
//! tensors are `[batch, features]`. Convolution runs as im2col followed by a
//! single GEMM over the whole batch.

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        padding: usize,
    },
    MaxPool1d {
        factor: usize,
    },
    UpSample1d {
        factor: usize,
    },
    FullyConnected {
        in_dim: usize,
        out_dim: usize,
    },
    LeakyRelu {
        negative_slope: f64,
    },
    Tanh,
}

/// State saved by a forward pass for the matching backward pass.
#[derive(Clone, Debug)]
pub enum Cache {
    Conv { cols: Vec<f64>, in_shape: Vec<usize> },
    Pool { argmax: Vec<usize>, in_shape: Vec<usize> },
    Shape(Vec<usize>),
    Input(Tensor),
    Output(Tensor),
}

impl LayerSpec {
    /// Shapes of the weight and bias tensors, empty for parameter-free layers.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => vec![vec![out_channels, in_channels, kernel_size], vec![out_channels]],
            LayerSpec::FullyConnected { in_dim, out_dim } => vec![vec![out_dim, in_dim], vec![out_dim]],
            _ => Vec::new(),
        }
    }

    /// `(fan_in, fan_out)` for weight initialization.
    pub fn fans(&self) -> Option<(usize, usize)> {
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => Some((in_channels * kernel_size, out_channels * kernel_size)),
            LayerSpec::FullyConnected { in_dim, out_dim } => Some((in_dim, out_dim)),
            _ => None,
        }
    }

    /// Per-sample output shape (no batch dimension) for a per-sample input shape.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |what: &str| {
            Err(Error::DimensionMismatch(format!(
                "{what}: layer {self:?} cannot take input {input:?}"
            )))
        };
        match *self {
            LayerSpec::Conv1d {
                in_channels,
                out_channels,
                kernel_size,
                padding,
            } => {
                if input.len() != 2 || input[0] != in_channels {
                    return mismatch("channel count");
                }
                let padded = input[1] + 2 * padding;
                if padded < kernel_size {
                    return mismatch("kernel longer than padded input");
                }
                Ok(vec![out_channels, padded - kernel_size + 1])
            }
            LayerSpec::MaxPool1d { factor } => {
                if input.len() != 2 || factor == 0 || input[1] % factor != 0 {
                    return mismatch("pool factor must divide the length");
                }
                Ok(vec![input[0], input[1] / factor])
            }
            LayerSpec::UpSample1d { factor } => {
                if input.len() != 2 || factor == 0 {
                    return mismatch("upsample needs [channels, length]");
                }
                Ok(vec![input[0], input[1] * factor])
            }
            LayerSpec::FullyConnected { in_dim, out_dim } => {
                if input.len() != 1 || input[0] != in_dim {
                    return mismatch("feature count");
                }
                Ok(vec![out_dim])
            }
            LayerSpec::LeakyRelu { .. } | LayerSpec::Tanh => Ok(input.to_vec()),
        }
    }
}

fn check_params(spec: &LayerSpec, params: &[Tensor]) -> Result<()> {
    let want = spec.param_shapes();
    if want.len() != params.len() || want.iter().zip(params).any(|(w, p)| *w != p.shape) {
        return Err(Error::DimensionMismatch(format!(
            "parameters {:?} do not fit {spec:?}",
            params.iter().map(|p| &p.shape).collect::<Vec<_>>()
        )));
    }
    Ok(())
}

fn split_batch(x: &Tensor) -> Result<(usize, Vec<usize>)> {
    x.check()?;
    if x.shape.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "expected a batched tensor, got shape {:?}",
            x.shape
        )));
    }
    Ok((x.shape[0], x.shape[1..].to_vec()))
}

/// `c = a * b` (row-major, `a: m x k`, `b: k x n`, optional transposes via strides).
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a`, `b` and a dense
    // row-major `m x n` view of `c`, checked by the debug assertion above.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

pub fn layer_forward(spec: &LayerSpec, params: &[Tensor], x: &Tensor) -> Result<(Tensor, Cache)> {
    check_params(spec, params)?;
    let (batch, sample_shape) = split_batch(x)?;
    let out_shape = spec.output_shape(&sample_shape)?;
    let mut full_shape = vec![batch];
    full_shape.extend(&out_shape);

    match *spec {
        LayerSpec::Conv1d {
            in_channels: c_in,
            out_channels: c_out,
            kernel_size: ks,
            padding,
        } => {
            let l_in = sample_shape[1];
            let l_out = out_shape[1];
            let width = batch * l_out;
            let mut cols = vec![0.0; c_in * ks * width];
            for c in 0..c_in {
                for k in 0..ks {
                    let row = &mut cols[(c * ks + k) * width..(c * ks + k + 1) * width];
                    for b in 0..batch {
                        let src = &x.data[(b * c_in + c) * l_in..(b * c_in + c + 1) * l_in];
                        for t in 0..l_out {
                            let pos = t + k;
                            if pos >= padding && pos - padding < l_in {
                                row[b * l_out + t] = src[pos - padding];
                            }
                        }
                    }
                }
            }
            let mut ymat = vec![0.0; c_out * width];
            let kdim = c_in * ks;
            gemm(
                c_out,
                kdim,
                width,
                &params[0].data,
                (kdim as isize, 1),
                &cols,
                (width as isize, 1),
                0.0,
                &mut ymat,
            );
            let mut y = Tensor::zeros(&full_shape);
            for b in 0..batch {
                for o in 0..c_out {
                    let bias = params[1].data[o];
                    let dst = &mut y.data[(b * c_out + o) * l_out..(b * c_out + o + 1) * l_out];
                    let src = &ymat[o * width + b * l_out..o * width + (b + 1) * l_out];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d = s + bias;
                    }
                }
            }
            Ok((
                y,
                Cache::Conv {
                    cols,
                    in_shape: x.shape.clone(),
                },
            ))
        }
        LayerSpec::MaxPool1d { factor } => {
            let mut y = Tensor::zeros(&full_shape);
            let mut argmax = vec![0; y.len()];
            for (o, (dst, arg)) in y.data.iter_mut().zip(argmax.iter_mut()).enumerate() {
                let start = o * factor;
                let mut best = start;
                for i in start + 1..start + factor {
                    if x.data[i] > x.data[best] {
                        best = i;
                    }
                }
                *dst = x.data[best];
                *arg = best;
            }
            Ok((
                y,
                Cache::Pool {
                    argmax,
                    in_shape: x.shape.clone(),
                },
            ))
        }
        LayerSpec::UpSample1d { factor } => {
            let mut y = Tensor::zeros(&full_shape);
            for (i, v) in y.data.iter_mut().enumerate() {
                *v = x.data[i / factor];
            }
            Ok((y, Cache::Shape(x.shape.clone())))
        }
        LayerSpec::FullyConnected { in_dim, out_dim } => {
            let mut y = Tensor::zeros(&full_shape);
            for b in 0..batch {
                y.data[b * out_dim..(b + 1) * out_dim].copy_from_slice(&params[1].data);
            }
            // y = x W^T + b
            gemm(
                batch,
                in_dim,
                out_dim,
                &x.data,
                (in_dim as isize, 1),
                &params[0].data,
                (1, in_dim as isize),
                1.0,
                &mut y.data,
            );
            Ok((y, Cache::Input(x.clone())))
        }
        LayerSpec::LeakyRelu { negative_slope } => {
            let data = x.data.iter().map(|&v| if v >= 0.0 { v } else { negative_slope * v }).collect();
            Ok((
                Tensor {
                    shape: x.shape.clone(),
                    data,
                },
                Cache::Input(x.clone()),
            ))
        }
        LayerSpec::Tanh => {
            let y = Tensor {
                shape: x.shape.clone(),
                data: x.data.iter().map(|v| v.tanh()).collect(),
            };
            Ok((y.clone(), Cache::Output(y)))
        }
    }
}

/// Gradient of the loss with respect to the layer input and parameters.
pub fn layer_backward(
    spec: &LayerSpec,
    params: &[Tensor],
    cache: &Cache,
    grad_out: &Tensor,
) -> Result<(Tensor, Vec<Tensor>)> {
    check_params(spec, params)?;
    let bad_cache = || Err(Error::DimensionMismatch(format!("cache does not belong to {spec:?}")));
    match (spec, cache) {
        (
            &LayerSpec::Conv1d {
                in_channels: c_in,
                out_channels: c_out,
                kernel_size: ks,
                padding,
            },
            Cache::Conv { cols, in_shape },
        ) => {
            let (batch, l_in) = (in_shape[0], in_shape[2]);
            let l_out = grad_out.shape[2];
            let width = batch * l_out;
            let kdim = c_in * ks;
            let mut dmat = vec![0.0; c_out * width];
            let mut dbias = Tensor::zeros(&[c_out]);
            for b in 0..batch {
                for o in 0..c_out {
                    let src = &grad_out.data[(b * c_out + o) * l_out..(b * c_out + o + 1) * l_out];
                    dmat[o * width + b * l_out..o * width + (b + 1) * l_out].copy_from_slice(src);
                    dbias.data[o] += src.iter().sum::<f64>();
                }
            }
            let mut dweight = Tensor::zeros(&params[0].shape);
            // dW = dY cols^T
            gemm(
                c_out,
                width,
                kdim,
                &dmat,
                (width as isize, 1),
                cols,
                (1, width as isize),
                0.0,
                &mut dweight.data,
            );
            // dcols = W^T dY
            let mut dcols = vec![0.0; kdim * width];
            gemm(
                kdim,
                c_out,
                width,
                &params[0].data,
                (1, kdim as isize),
                &dmat,
                (width as isize, 1),
                0.0,
                &mut dcols,
            );
            let mut dx = Tensor::zeros(in_shape);
            for c in 0..c_in {
                for k in 0..ks {
                    let row = &dcols[(c * ks + k) * width..(c * ks + k + 1) * width];
                    for b in 0..batch {
                        let dst = &mut dx.data[(b * c_in + c) * l_in..(b * c_in + c + 1) * l_in];
                        for t in 0..l_out {
                            let pos = t + k;
                            if pos >= padding && pos - padding < l_in {
                                dst[pos - padding] += row[b * l_out + t];
                            }
                        }
                    }
                }
            }
            Ok((dx, vec![dweight, dbias]))
        }
        (LayerSpec::MaxPool1d { .. }, Cache::Pool { argmax, in_shape }) => {
            let mut dx = Tensor::zeros(in_shape);
            for (g, &i) in grad_out.data.iter().zip(argmax) {
                dx.data[i] += g;
            }
            Ok((dx, Vec::new()))
        }
        (&LayerSpec::UpSample1d { factor }, Cache::Shape(in_shape)) => {
            let mut dx = Tensor::zeros(in_shape);
            for (i, g) in grad_out.data.iter().enumerate() {
                dx.data[i / factor] += g;
            }
            Ok((dx, Vec::new()))
        }
        (&LayerSpec::FullyConnected { in_dim, out_dim }, Cache::Input(x)) => {
            let batch = x.shape[0];
            let mut dweight = Tensor::zeros(&[out_dim, in_dim]);
            // dW = dY^T x
            gemm(
                out_dim,
                batch,
                in_dim,
                &grad_out.data,
                (1, out_dim as isize),
                &x.data,
                (in_dim as isize, 1),
                0.0,
                &mut dweight.data,
            );
            let mut dbias = Tensor::zeros(&[out_dim]);
            for row in grad_out.data.chunks(out_dim) {
                for (d, g) in dbias.data.iter_mut().zip(row) {
                    *d += g;
                }
            }
            let mut dx = x.zeros_like();
            // dX = dY W
            gemm(
                batch,
                out_dim,
                in_dim,
                &grad_out.data,
                (out_dim as isize, 1),
                &params[0].data,
                (in_dim as isize, 1),
                0.0,
                &mut dx.data,
            );
            Ok((dx, vec![dweight, dbias]))
        }
        (&LayerSpec::LeakyRelu { negative_slope }, Cache::Input(x)) => {
            let data = x
                .data
                .iter()
                .zip(&grad_out.data)
                .map(|(&v, &g)| if v >= 0.0 { g } else { negative_slope * g })
                .collect();
            Ok((
                Tensor {
                    shape: x.shape.clone(),
                    data,
                },
                Vec::new(),
            ))
        }
        (LayerSpec::Tanh, Cache::Output(y)) => {
            let data = y.data.iter().zip(&grad_out.data).map(|(&v, &g)| g * (1.0 - v * v)).collect();
            Ok((
                Tensor {
                    shape: y.shape.clone(),
                    data,
                },
                Vec::new(),
            ))
        }
        _ => bad_cache(),
    }
}
