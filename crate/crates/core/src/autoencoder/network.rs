//! Forward pass, least-squares loss and its exact gradient.

use crate::error::{Error, Result};

use super::params::AeParams;

pub fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Derivative of ReLU, taken as 0 at the kink.
fn relu_grad(pre: f64) -> f64 {
    if pre > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Hidden-unit dropout mask. Kept units are scaled by `1 / (1 - rate)`
/// (inverted dropout), so inference uses the network unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask {
    keep: Vec<bool>,
    rate: f64,
}

impl DropoutMask {
    pub fn new(keep: Vec<bool>, rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::InvalidValue(format!(
                "dropout rate must lie in [0, 1), got {rate}"
            )));
        }
        Ok(Self { keep, rate })
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn keep(&self) -> &[bool] {
        &self.keep
    }

    /// Multiplier applied to hidden unit `j`.
    fn factor(&self, j: usize) -> f64 {
        if self.keep[j] {
            1.0 / (1.0 - self.rate)
        } else {
            0.0
        }
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden_pre: Vec<f64>,
    /// Hidden output after ReLU and dropout.
    pub h: Vec<f64>,
    pub out_pre: Vec<f64>,
    pub o: Vec<f64>,
}

fn check_shapes(params: &AeParams, x: &[f64], mask: Option<&DropoutMask>) -> Result<()> {
    if x.len() != params.n_in() {
        return Err(Error::Dimension(format!(
            "input has {} entries, network expects {}",
            x.len(),
            params.n_in()
        )));
    }
    if let Some(m) = mask {
        if m.len() != params.n_hidden() {
            return Err(Error::Dimension(format!(
                "dropout mask has {} entries, hidden layer has {}",
                m.len(),
                params.n_hidden()
            )));
        }
    }
    Ok(())
}

/// `h = relu(W x + b)` (masked when training), `o = relu(W_out h + b_out)`.
pub fn forward(params: &AeParams, x: &[f64], mask: Option<&DropoutMask>) -> Result<Activations> {
    check_shapes(params, x, mask)?;
    Ok(forward_unchecked(params, x, mask))
}

fn forward_unchecked(params: &AeParams, x: &[f64], mask: Option<&DropoutMask>) -> Activations {
    let (n_in, n_hidden) = (params.n_in(), params.n_hidden());
    let hidden_pre: Vec<f64> = params
        .w
        .chunks_exact(n_in)
        .zip(&params.b)
        .map(|(row, b)| dot(row, x) + b)
        .collect();
    let h: Vec<f64> = hidden_pre
        .iter()
        .enumerate()
        .map(|(j, &p)| {
            let a = relu(p);
            match mask {
                Some(m) => a * m.factor(j),
                None => a,
            }
        })
        .collect();
    let out_pre: Vec<f64> = params
        .w_out
        .chunks_exact(n_hidden)
        .zip(&params.b_out)
        .map(|(row, b)| dot(row, &h) + b)
        .collect();
    let o = out_pre.iter().map(|&p| relu(p)).collect();
    Activations {
        hidden_pre,
        h,
        out_pre,
        o,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sum of squared differences.
pub fn loss(o: &[f64], target: &[f64]) -> Result<f64> {
    if o.len() != target.len() {
        return Err(Error::Dimension(format!(
            "output has {} entries, target {}",
            o.len(),
            target.len()
        )));
    }
    Ok(o.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum())
}

/// Gradient of the single-sample loss with respect to every parameter.
pub fn backward(
    params: &AeParams,
    x: &[f64],
    target: &[f64],
    mask: Option<&DropoutMask>,
) -> Result<AeParams> {
    let mut grads = AeParams::zeros(params.n_in(), params.n_hidden());
    accumulate_gradients(params, x, target, mask, &mut grads)?;
    Ok(grads)
}

/// Adds this sample's gradient into `grads` and returns its loss.
pub fn accumulate_gradients(
    params: &AeParams,
    x: &[f64],
    target: &[f64],
    mask: Option<&DropoutMask>,
    grads: &mut AeParams,
) -> Result<f64> {
    check_shapes(params, x, mask)?;
    if target.len() != params.n_in() {
        return Err(Error::Dimension(format!(
            "target has {} entries, network outputs {}",
            target.len(),
            params.n_in()
        )));
    }
    if !grads.same_shape(params) {
        return Err(Error::Dimension("gradient buffer shape mismatch".into()));
    }
    let (n_in, n_hidden) = (params.n_in(), params.n_hidden());
    let act = forward_unchecked(params, x, mask);

    let mut sample_loss = 0.0;
    let delta_out: Vec<f64> = act
        .o
        .iter()
        .zip(target)
        .zip(&act.out_pre)
        .map(|((o, t), pre)| {
            sample_loss += (o - t) * (o - t);
            2.0 * (o - t) * relu_grad(*pre)
        })
        .collect();

    let mut d_h = vec![0.0; n_hidden];
    for (i, &d) in delta_out.iter().enumerate() {
        grads.b_out[i] += d;
        if d == 0.0 {
            continue;
        }
        let w_row = &params.w_out[i * n_hidden..(i + 1) * n_hidden];
        let g_row = &mut grads.w_out[i * n_hidden..(i + 1) * n_hidden];
        for j in 0..n_hidden {
            g_row[j] += d * act.h[j];
            d_h[j] += d * w_row[j];
        }
    }

    for j in 0..n_hidden {
        let scale = mask.map_or(1.0, |m| m.factor(j));
        let d = d_h[j] * scale * relu_grad(act.hidden_pre[j]);
        grads.b[j] += d;
        if d == 0.0 {
            continue;
        }
        let g_row = &mut grads.w[j * n_in..(j + 1) * n_in];
        for (g, &xk) in g_row.iter_mut().zip(x) {
            *g += d * xk;
        }
    }
    Ok(sample_loss)
}
