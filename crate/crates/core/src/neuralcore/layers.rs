//! Layer kernels on `(channels, rows, cols)` tensors.

use super::{Activation, NeuralError, Tensor};

fn chw(t: &Tensor, what: &str) -> Result<(usize, usize, usize), NeuralError> {
    match *t.shape() {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(NeuralError::ShapeMismatch(format!(
            "{what}: expected (channels, rows, cols), got {:?}",
            t.shape()
        ))),
    }
}

/// Row and column ranges of output positions whose input tap `(dy, dx)` falls inside the image.
#[inline]
fn valid_range(len: usize, offset: isize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).min(len as isize).max(0) as usize;
    (lo, hi.max(lo))
}

/// Stride-1 cross-correlation with zero "same" padding, plus bias, then the activation.
pub fn conv_forward(
    input: &Tensor,
    filters: &Tensor,
    bias: &Tensor,
    activation: Activation,
) -> Result<Tensor, NeuralError> {
    let (in_c, h, w) = chw(input, "conv input")?;
    let [out_c, f_c, k, k2] = *filters.shape() else {
        return Err(NeuralError::ShapeMismatch(format!(
            "filter bank must be 4-D, got {:?}",
            filters.shape()
        )));
    };
    if f_c != in_c || k != k2 || k % 2 == 0 || bias.shape() != [out_c] {
        return Err(NeuralError::ShapeMismatch(format!(
            "filters {:?} / bias {:?} do not fit input {:?}",
            filters.shape(),
            bias.shape(),
            input.shape()
        )));
    }
    let pad = (k / 2) as isize;
    let plane = h * w;
    let x = input.data();
    let f = filters.data();
    let mut out = vec![0.0; out_c * plane];
    for (oc, out_plane) in out.chunks_exact_mut(plane).enumerate() {
        out_plane.fill(bias.data()[oc]);
        for ic in 0..in_c {
            let in_plane = &x[ic * plane..(ic + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = valid_range(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = valid_range(w, dx);
                    let wt = f[((oc * in_c + ic) * k + ky) * k + kx];
                    if wt == 0.0 {
                        continue;
                    }
                    for y in y0..y1 {
                        let src_row = (y as isize + dy) as usize * w;
                        let src = &in_plane[(src_row as isize + x0 as isize + dx) as usize..];
                        let dst = &mut out_plane[y * w + x0..y * w + x1];
                        for (d, s) in dst.iter_mut().zip(src) {
                            *d += wt * s;
                        }
                    }
                }
            }
        }
    }
    match activation {
        Activation::Relu => out.iter_mut().for_each(|v| *v = v.max(0.0)),
    }
    Ok(Tensor::new(vec![out_c, h, w], out).expect("shape computed"))
}

/// Gradients of a conv layer given the upstream gradient at its activated output.
///
/// Accumulates into `grad_filters` / `grad_bias` and returns the gradient with
/// respect to the input when `want_input_grad` is set.
pub(crate) fn conv_backward(
    input: &Tensor,
    filters: &Tensor,
    activated: &Tensor,
    grad_out: &mut [f64],
    grad_filters: &mut [f64],
    grad_bias: &mut [f64],
    want_input_grad: bool,
) -> Option<Vec<f64>> {
    let [in_c, h, w] = *input.shape() else {
        unreachable!("checked in forward")
    };
    let [out_c, _, k, _] = *filters.shape() else {
        unreachable!("checked in forward")
    };
    let pad = (k / 2) as isize;
    let plane = h * w;
    let x = input.data();
    let f = filters.data();
    // ReLU subgradient: zero where the unit was clamped (including exactly 0).
    for (g, a) in grad_out.iter_mut().zip(activated.data()) {
        if *a <= 0.0 {
            *g = 0.0;
        }
    }
    let mut grad_in = want_input_grad.then(|| vec![0.0; in_c * plane]);
    for oc in 0..out_c {
        let g_plane = &grad_out[oc * plane..(oc + 1) * plane];
        grad_bias[oc] += g_plane.iter().sum::<f64>();
        for ic in 0..in_c {
            let in_plane = &x[ic * plane..(ic + 1) * plane];
            for ky in 0..k {
                let dy = ky as isize - pad;
                let (y0, y1) = valid_range(h, dy);
                for kx in 0..k {
                    let dx = kx as isize - pad;
                    let (x0, x1) = valid_range(w, dx);
                    let widx = ((oc * in_c + ic) * k + ky) * k + kx;
                    let wt = f[widx];
                    let mut acc = 0.0;
                    for y in y0..y1 {
                        let src_off = ((y as isize + dy) as usize * w) as isize + x0 as isize + dx;
                        let src = &in_plane[src_off as usize..src_off as usize + (x1 - x0)];
                        let g = &g_plane[y * w + x0..y * w + x1];
                        acc += g.iter().zip(src).map(|(a, b)| a * b).sum::<f64>();
                        if let Some(gi) = grad_in.as_mut() {
                            let dst = &mut gi[ic * plane + src_off as usize..][..x1 - x0];
                            for (d, gv) in dst.iter_mut().zip(g) {
                                *d += wt * gv;
                            }
                        }
                    }
                    grad_filters[widx] += acc;
                }
            }
        }
    }
    grad_in
}

/// 2x2 max pooling, stride 2, dropping a trailing odd row/column.
///
/// Also returns, for every output cell, the flat input index of the maximum
/// (first in row-major order on ties).
pub fn maxpool_with_indices(input: &Tensor) -> Result<(Tensor, Vec<usize>), NeuralError> {
    let (c, h, w) = chw(input, "pool input")?;
    if h < 2 || w < 2 {
        return Err(NeuralError::ShapeTooSmall { rows: h, cols: w });
    }
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut idx = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let base = ch * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let top = base + 2 * oy * w + 2 * ox;
                let mut best = top;
                for cand in [top + 1, top + w, top + w + 1] {
                    if x[cand] > x[best] {
                        best = cand;
                    }
                }
                out.push(x[best]);
                idx.push(best);
            }
        }
    }
    Ok((Tensor::new(vec![c, oh, ow], out).expect("shape computed"), idx))
}

pub fn maxpool_forward(input: &Tensor) -> Result<Tensor, NeuralError> {
    maxpool_with_indices(input).map(|(t, _)| t)
}

/// Numerically stable softmax (max-logit subtraction).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

pub fn dense_logits(features: &[f64], weights: &Tensor, bias: &Tensor) -> Result<Vec<f64>, NeuralError> {
    let [classes, fan_in] = *weights.shape() else {
        return Err(NeuralError::ShapeMismatch(format!(
            "dense weights must be 2-D, got {:?}",
            weights.shape()
        )));
    };
    if fan_in != features.len() || bias.shape() != [classes] {
        return Err(NeuralError::ShapeMismatch(format!(
            "{} features into weights {:?} / bias {:?}",
            features.len(),
            weights.shape(),
            bias.shape()
        )));
    }
    Ok(weights
        .data()
        .chunks_exact(fan_in)
        .zip(bias.data())
        .map(|(row, b)| b + row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>())
        .collect())
}

/// Class probabilities `softmax(W·features + b)`.
pub fn dense_softmax_forward(features: &[f64], weights: &Tensor, bias: &Tensor) -> Result<Vec<f64>, NeuralError> {
    dense_logits(features, weights, bias).map(|z| softmax(&z))
}
