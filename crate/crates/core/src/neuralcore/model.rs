use rand::Rng;

use super::layers::{conv_backward, conv_forward, dense_logits, maxpool_with_indices, softmax};
use super::{ArchConfig, NeuralError, Tensor};
use crate::imaging::GreyImage;
use crate::rng;
use crate::txcore::ClassLabel;

/// Probabilities below this are floored before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// A mini-batch of images with their true classes.
pub type Batch<'a> = [(&'a GreyImage, ClassLabel)];

/// Every learnable tensor of a network, in [`ArchConfig::param_shapes`] order:
/// `(filters, bias)` per conv stage, then dense weights and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub arch: ArchConfig,
    pub tensors: Vec<Tensor>,
}

/// Gradients, shaped tensor-for-tensor like [`ModelParams::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub tensors: Vec<Tensor>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ModelParams) -> Self {
        ParamGrads {
            tensors: params.tensors.iter().map(|t| Tensor::zeros(t.shape())).collect(),
        }
    }

    pub fn is_congruent(&self, params: &ModelParams) -> bool {
        self.tensors.len() == params.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&params.tensors)
                .all(|(a, b)| a.same_shape(b))
    }

    pub fn same_shapes(&self, other: &ParamGrads) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.same_shape(b))
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
    }

    pub fn add_assign(&mut self, other: &ParamGrads) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data_mut().iter_mut().zip(b.data()) {
                *x += y;
            }
        }
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors.iter().flat_map(|t| t.data().iter().copied())
    }
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init(arch: &ArchConfig, seed: u64) -> Result<Self, NeuralError> {
        arch.validate()?;
        let mut r = rng::seeded(seed);
        let tensors = arch
            .param_shapes()
            .into_iter()
            .map(|shape| {
                if shape.len() == 1 {
                    return Tensor::zeros(&shape);
                }
                let (fan_in, fan_out) = match shape[..] {
                    [o, i, kh, kw] => (i * kh * kw, o * kh * kw),
                    [o, i] => (i, o),
                    _ => unreachable!("weights are 2-D or 4-D"),
                };
                let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let n: usize = shape.iter().product();
                let data = (0..n).map(|_| r.random_range(-a..a)).collect();
                Tensor::new(shape, data).expect("shape computed")
            })
            .collect();
        Ok(ModelParams {
            arch: arch.clone(),
            tensors,
        })
    }

    pub fn conv_filters(&self, layer: usize) -> &Tensor {
        &self.tensors[2 * layer]
    }

    pub fn conv_bias(&self, layer: usize) -> &Tensor {
        &self.tensors[2 * layer + 1]
    }

    pub fn dense_weights(&self) -> &Tensor {
        &self.tensors[self.tensors.len() - 2]
    }

    pub fn dense_bias(&self) -> &Tensor {
        &self.tensors[self.tensors.len() - 1]
    }

    pub fn param_count(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.tensors.iter().flat_map(|t| t.data().iter().copied())
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        self.arch.validate()?;
        let shapes = self.arch.param_shapes();
        if shapes.len() != self.tensors.len()
            || shapes.iter().zip(&self.tensors).any(|(s, t)| s[..] != *t.shape())
        {
            return Err(NeuralError::ShapeMismatch(
                "parameter tensors do not match the architecture".into(),
            ));
        }
        Ok(())
    }

    fn check_image(&self, img: &GreyImage) -> Result<(), NeuralError> {
        let want = (self.arch.input_rows, self.arch.input_cols);
        if img.dims() != want {
            return Err(NeuralError::ShapeMismatch(format!(
                "image is {:?}, model expects {want:?}",
                img.dims()
            )));
        }
        Ok(())
    }
}

pub fn init_model(arch: &ArchConfig, seed: u64) -> Result<ModelParams, NeuralError> {
    ModelParams::init(arch, seed)
}

/// Pixels scaled to [0, 1] as a single-channel tensor.
pub fn image_tensor(img: &GreyImage) -> Tensor {
    let data = img.pixels().iter().map(|&p| p as f64 / 255.0).collect();
    Tensor::new(vec![1, img.rows(), img.cols()], data).expect("image dims are positive")
}

/// Intermediate values of one forward pass.
struct Trace {
    /// Input to each conv stage.
    stage_inputs: Vec<Tensor>,
    /// Activated conv output of each stage.
    activated: Vec<Tensor>,
    /// Argmax indices of each pooling step.
    pool_indices: Vec<Vec<usize>>,
    features: Tensor,
    probs: Vec<f64>,
}

fn forward_trace(model: &ModelParams, img: &GreyImage) -> Result<Trace, NeuralError> {
    model.check_image(img)?;
    let mut x = image_tensor(img);
    let mut stage_inputs = Vec::with_capacity(model.arch.conv_layers.len());
    let mut activated = Vec::with_capacity(model.arch.conv_layers.len());
    let mut pool_indices = Vec::with_capacity(model.arch.conv_layers.len());
    for (i, spec) in model.arch.conv_layers.iter().enumerate() {
        let a = conv_forward(&x, model.conv_filters(i), model.conv_bias(i), spec.activation)?;
        let (pooled, idx) = maxpool_with_indices(&a)?;
        stage_inputs.push(std::mem::replace(&mut x, pooled));
        activated.push(a);
        pool_indices.push(idx);
    }
    let logits = dense_logits(x.data(), model.dense_weights(), model.dense_bias())?;
    Ok(Trace {
        stage_inputs,
        activated,
        pool_indices,
        features: x,
        probs: softmax(&logits),
    })
}

/// Class probabilities for one image.
pub fn forward(model: &ModelParams, img: &GreyImage) -> Result<Vec<f64>, NeuralError> {
    forward_trace(model, img).map(|t| t.probs)
}

/// Flattened input of the dense layer for one image.
pub fn features(model: &ModelParams, img: &GreyImage) -> Result<Vec<f64>, NeuralError> {
    forward_trace(model, img).map(|t| t.features.into_data())
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &ModelParams, img: &GreyImage) -> Result<ClassLabel, NeuralError> {
    let probs = forward(model, img)?;
    Ok(ClassLabel::from_index(argmax(&probs)).expect("class_count is 7"))
}

fn sample_loss(probs: &[f64], label: ClassLabel) -> f64 {
    -probs[label.index()].max(PROB_FLOOR).ln()
}

/// Mean sparse categorical cross-entropy over the batch.
pub fn batch_loss(model: &ModelParams, batch: &Batch<'_>) -> Result<f64, NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let mut total = 0.0;
    for (img, label) in batch {
        total += sample_loss(&forward(model, img)?, *label);
    }
    Ok(total / batch.len() as f64)
}

fn accumulate_sample(
    model: &ModelParams,
    img: &GreyImage,
    label: ClassLabel,
    grads: &mut ParamGrads,
) -> Result<f64, NeuralError> {
    let trace = forward_trace(model, img)?;
    let loss = sample_loss(&trace.probs, label);
    let n = model.tensors.len();

    // Fused softmax + cross-entropy gradient at the logits.
    let mut dlogits = trace.probs.clone();
    dlogits[label.index()] -= 1.0;

    let feats = trace.features.data();
    let fan_in = feats.len();
    let w = model.dense_weights().data();
    let mut dfeat = vec![0.0; fan_in];
    {
        let (head, tail) = grads.tensors.split_at_mut(n - 1);
        let gw = head[n - 2].data_mut();
        let gb = tail[0].data_mut();
        for (l, &dl) in dlogits.iter().enumerate() {
            gb[l] += dl;
            let row = &w[l * fan_in..(l + 1) * fan_in];
            let grow = &mut gw[l * fan_in..(l + 1) * fan_in];
            for j in 0..fan_in {
                grow[j] += dl * feats[j];
                dfeat[j] += row[j] * dl;
            }
        }
    }

    let mut upstream = dfeat;
    for layer in (0..model.arch.conv_layers.len()).rev() {
        // Route the pooled gradient back to the max positions.
        let activated = &trace.activated[layer];
        let mut dact = vec![0.0; activated.len()];
        for (g, &src) in upstream.iter().zip(&trace.pool_indices[layer]) {
            dact[src] += g;
        }
        let (left, right) = grads.tensors.split_at_mut(2 * layer + 1);
        let gf = left[2 * layer].data_mut();
        let gbias = right[0].data_mut();
        let grad_in = conv_backward(
            &trace.stage_inputs[layer],
            model.conv_filters(layer),
            activated,
            &mut dact,
            gf,
            gbias,
            layer > 0,
        );
        match grad_in {
            Some(g) => upstream = g,
            None => break,
        }
    }
    Ok(loss)
}

/// Mean loss and its exact gradient with respect to every parameter.
///
/// Per-sample gradients are summed in batch order, so the result is
/// bit-stable for a given batch.
pub fn backward(model: &ModelParams, batch: &Batch<'_>) -> Result<(f64, ParamGrads), NeuralError> {
    if batch.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let mut grads = ParamGrads::zeros_like(model);
    let mut total = 0.0;
    for (img, label) in batch {
        total += accumulate_sample(model, img, *label, &mut grads)?;
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    Ok((total * inv, grads))
}
