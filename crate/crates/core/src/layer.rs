//! Dense layers: `out = act(x · w + b)` and its exact backward pass.
//!
//! Weights have shape `(fan_in, fan_out)` so a batch of row samples
//! multiplies on the left.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Pre-activations are clamped to this magnitude before the sigmoid, which
/// keeps its output strictly inside (0, 1).
pub const SIGMOID_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "sigmoid" => Some(Activation::Sigmoid),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }

    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    #[inline]
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Logistic function in the two-branch stable form.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-SIGMOID_CLAMP, SIGMOID_CLAMP);
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Forward state needed by [`dense_backward`].
#[derive(Debug, Clone)]
pub struct LayerCache {
    pub input: Matrix,
    pub pre_activation: Matrix,
    pub activation: Activation,
}

/// Layer gradients, chained with the upstream gradient.
#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub grad_input: Matrix,
    pub grad_weights: Matrix,
    pub grad_bias: Vec<f64>,
}

pub fn dense_forward(
    x: &Matrix,
    w: &Matrix,
    b: &[f64],
    act: Activation,
) -> Result<(Matrix, LayerCache)> {
    if x.cols() != w.rows() {
        return Err(Error::dim("dense_forward", x.shape(), w.shape()));
    }
    if b.len() != w.cols() {
        return Err(Error::dim("dense_forward bias", w.shape(), (1, b.len())));
    }
    let pre = x.matmul(w)?.add_row_broadcast(b)?;
    let out = pre.map(|z| act.apply(z));
    Ok((
        out,
        LayerCache {
            input: x.clone(),
            pre_activation: pre,
            activation: act,
        },
    ))
}

pub fn dense_backward(cache: &LayerCache, w: &Matrix, grad_out: &Matrix) -> Result<LayerGrads> {
    if grad_out.shape() != cache.pre_activation.shape() {
        return Err(Error::dim(
            "dense_backward",
            grad_out.shape(),
            cache.pre_activation.shape(),
        ));
    }
    if cache.input.cols() != w.rows() || w.cols() != grad_out.cols() {
        return Err(Error::dim("dense_backward weights", cache.input.shape(), w.shape()));
    }
    let act = cache.activation;
    let grad_pre = grad_out.zip_map(&cache.pre_activation, |g, z| g * act.derivative(z))?;
    Ok(LayerGrads {
        grad_input: grad_pre.matmul_t(w)?,
        grad_weights: cache.input.t_matmul(&grad_pre)?,
        grad_bias: grad_pre.sum_rows(),
    })
}
