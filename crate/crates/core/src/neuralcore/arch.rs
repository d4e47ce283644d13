use serde::{Deserialize, Serialize};

use super::NeuralError;
use crate::imaging::ImageMode;
use crate::txcore::ClassLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

/// One convolution stage; every stage is followed by 2x2/stride-2 max pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub filters: usize,
    /// Odd square kernel side.
    pub kernel: usize,
    pub activation: Activation,
}

impl ConvSpec {
    pub fn relu(filters: usize) -> Self {
        ConvSpec {
            filters,
            kernel: 3,
            activation: Activation::Relu,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchConfig {
    pub input_rows: usize,
    pub input_cols: usize,
    pub conv_layers: Vec<ConvSpec>,
    pub class_count: usize,
}

/// Input and output geometry of one conv + pool stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageShape {
    pub in_channels: usize,
    pub rows: usize,
    pub cols: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub pooled_rows: usize,
    pub pooled_cols: usize,
}

impl ArchConfig {
    /// conv(8) -> pool -> conv(16) -> pool -> dense(7), sized for the image mode.
    pub fn default_for(mode: ImageMode) -> Self {
        let (input_rows, input_cols) = mode.dims();
        ArchConfig {
            input_rows,
            input_cols,
            conv_layers: vec![ConvSpec::relu(8), ConvSpec::relu(16)],
            class_count: ClassLabel::COUNT,
        }
    }

    pub fn with_value(with_value: bool) -> Self {
        Self::default_for(ImageMode::for_value(with_value))
    }

    pub fn stages(&self) -> Vec<StageShape> {
        let mut channels = 1;
        let (mut rows, mut cols) = (self.input_rows, self.input_cols);
        self.conv_layers
            .iter()
            .map(|c| {
                let s = StageShape {
                    in_channels: channels,
                    rows,
                    cols,
                    out_channels: c.filters,
                    kernel: c.kernel,
                    pooled_rows: rows / 2,
                    pooled_cols: cols / 2,
                };
                channels = c.filters;
                rows /= 2;
                cols /= 2;
                s
            })
            .collect()
    }

    /// `(channels, rows, cols)` of the tensor entering the dense layer.
    pub fn feature_shape(&self) -> (usize, usize, usize) {
        match self.stages().last() {
            Some(s) => (s.out_channels, s.pooled_rows, s.pooled_cols),
            None => (1, self.input_rows, self.input_cols),
        }
    }

    pub fn flatten_size(&self) -> usize {
        let (c, r, k) = self.feature_shape();
        c * r * k
    }

    pub fn validate(&self) -> Result<(), NeuralError> {
        let bad = |m: String| Err(NeuralError::InvalidArch(m));
        if self.class_count != ClassLabel::COUNT {
            return bad(format!("class_count must be {}", ClassLabel::COUNT));
        }
        if self.input_rows == 0 || self.input_cols == 0 {
            return bad("empty input".into());
        }
        for (i, s) in self.stages().iter().enumerate() {
            let spec = self.conv_layers[i];
            if spec.filters == 0 || spec.kernel % 2 == 0 {
                return bad(format!("conv layer {i}: need filters > 0 and an odd kernel"));
            }
            if s.rows < 2 || s.cols < 2 {
                return bad(format!("conv layer {i}: {}x{} input cannot be pooled", s.rows, s.cols));
            }
        }
        Ok(())
    }

    /// Shapes of every learnable tensor, in parameter order.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        let mut shapes = Vec::new();
        for s in self.stages() {
            shapes.push(vec![s.out_channels, s.in_channels, s.kernel, s.kernel]);
            shapes.push(vec![s.out_channels]);
        }
        shapes.push(vec![self.class_count, self.flatten_size()]);
        shapes.push(vec![self.class_count]);
        shapes
    }

    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for i in 0..self.conv_layers.len() {
            names.push(format!("conv{i}.filters"));
            names.push(format!("conv{i}.bias"));
        }
        names.push("dense.weights".into());
        names.push("dense.bias".into());
        names
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|s| s.iter().product::<usize>())
            .sum()
    }
}
