#![allow(dead_code)]

use rand::Rng;
use txguard_core::imaging::GreyImage;
use txguard_core::neuralcore::{backward, batch_loss, ArchConfig, ConvSpec, ModelParams};
use txguard_core::rng;
use txguard_core::ClassLabel;

/// Two conv stages on an 8x8 input: 80 + 1168 + 455 = 1703 parameters.
pub fn small_arch() -> ArchConfig {
    ArchConfig {
        input_rows: 8,
        input_cols: 8,
        conv_layers: vec![ConvSpec::relu(8), ConvSpec::relu(16)],
        class_count: 7,
    }
}

pub fn random_batch(rows: usize, cols: usize, n: usize, seed: u64) -> Vec<(GreyImage, ClassLabel)> {
    let mut r = rng::seeded(seed);
    (0..n)
        .map(|k| {
            let pixels = (0..rows * cols).map(|_| r.random()).collect();
            (
                GreyImage::new(rows, cols, pixels).unwrap(),
                ClassLabel::from_index(k % 7).unwrap(),
            )
        })
        .collect()
}

pub struct GradReport {
    pub params: usize,
    /// Parameters whose +-h probe crossed a ReLU or max-pool switch.
    pub kinks: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

/// Relative error with a floor on the denominator so exactly-zero gradients
/// (dead units) compare on absolute terms.
pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Straightforward re-implementation of the forward pass with explicit index
/// arithmetic. Returns the mean loss plus the activation pattern (ReLU signs
/// and pooling winners) so probes that straddle a kink can be recognised.
pub fn reference_loss(model: &ModelParams, batch: &[(&GreyImage, ClassLabel)]) -> (f64, Vec<u32>) {
    let arch = &model.arch;
    let mut pattern = Vec::new();
    let mut total = 0.0;
    for (img, label) in batch {
        let (mut c, mut h, mut w) = (1usize, arch.input_rows, arch.input_cols);
        let mut x: Vec<f64> = img.pixels().iter().map(|&p| p as f64 / 255.0).collect();
        for (layer, spec) in arch.conv_layers.iter().enumerate() {
            let f = model.tensors[2 * layer].data();
            let b = model.tensors[2 * layer + 1].data();
            let k = spec.kernel as isize;
            let pad = k / 2;
            let oc = spec.filters;
            let mut y = vec![0.0; oc * h * w];
            for o in 0..oc {
                for r in 0..h as isize {
                    for q in 0..w as isize {
                        let mut acc = b[o];
                        for i in 0..c {
                            for dy in 0..k {
                                for dx in 0..k {
                                    let (rr, qq) = (r + dy - pad, q + dx - pad);
                                    if rr < 0 || qq < 0 || rr >= h as isize || qq >= w as isize {
                                        continue;
                                    }
                                    let wi = ((o * c + i) * spec.kernel + dy as usize) * spec.kernel + dx as usize;
                                    acc += f[wi] * x[(i * h + rr as usize) * w + qq as usize];
                                }
                            }
                        }
                        pattern.push((acc > 0.0) as u32);
                        y[(o * h + r as usize) * w + q as usize] = acc.max(0.0);
                    }
                }
            }
            let (ph, pw) = (h / 2, w / 2);
            let mut pooled = vec![0.0; oc * ph * pw];
            for o in 0..oc {
                for r in 0..ph {
                    for q in 0..pw {
                        let mut best = (f64::NEG_INFINITY, 0u32);
                        for (n, (dr, dq)) in [(0, 0), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
                            let v = y[(o * h + 2 * r + dr) * w + 2 * q + dq];
                            if v > best.0 {
                                best = (v, n as u32);
                            }
                        }
                        pattern.push(best.1);
                        pooled[(o * ph + r) * pw + q] = best.0;
                    }
                }
            }
            x = pooled;
            c = oc;
            h = ph;
            w = pw;
        }
        let wd = model.tensors[model.tensors.len() - 2].data();
        let bd = model.tensors[model.tensors.len() - 1].data();
        let logits: Vec<f64> = (0..arch.class_count)
            .map(|l| bd[l] + (0..x.len()).map(|j| wd[l * x.len() + j] * x[j]).sum::<f64>())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_z = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
        total += log_z - logits[label.index()];
    }
    (total / batch.len() as f64, pattern)
}

/// Perturbs every parameter by +-h and compares the central difference of the
/// reference loss with the analytic gradient. Probes whose two sides fall on
/// different activation patterns are counted as kinks and not compared.
pub fn finite_difference_check(model: &ModelParams, batch_seed: u64, batch_size: usize, h: f64) -> GradReport {
    let owned = random_batch(model.arch.input_rows, model.arch.input_cols, batch_size, batch_seed);
    let batch: Vec<_> = owned.iter().map(|(i, l)| (i, *l)).collect();
    let (loss, grads) = backward(model, &batch).unwrap();
    let (ref_loss, _) = reference_loss(model, &batch);
    assert!((loss - ref_loss).abs() <= 1e-12 * ref_loss.abs().max(1.0), "{loss} vs {ref_loss}");
    assert!((batch_loss(model, &batch).unwrap() - loss).abs() <= 1e-12);
    let mut probe = model.clone();
    let mut max_rel: f64 = 0.0;
    let mut max_abs: f64 = 0.0;
    let mut count = 0;
    let mut kinks = 0;
    for t in 0..probe.tensors.len() {
        for j in 0..probe.tensors[t].len() {
            let orig = probe.tensors[t].data()[j];
            probe.tensors[t].data_mut()[j] = orig + h;
            let (up, up_pattern) = reference_loss(&probe, &batch);
            probe.tensors[t].data_mut()[j] = orig - h;
            let (down, down_pattern) = reference_loss(&probe, &batch);
            probe.tensors[t].data_mut()[j] = orig;
            count += 1;
            if up_pattern != down_pattern {
                kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.tensors[t].data()[j];
            max_rel = max_rel.max(rel_error(analytic, numeric));
            max_abs = max_abs.max((analytic - numeric).abs());
        }
    }
    GradReport {
        params: count,
        kinks,
        max_rel_error: max_rel,
        max_abs_error: max_abs,
    }
}
