//! Nominal quantized network: layer descriptions, 6-bit weight codes, and
//! lowering of convolutions to sparse dense-equivalent layers.
//!
//! The network realizes
//!
//! ```text
//! h₁ = W₁ x + b₁                   (no activation in front of the first layer)
//! hₖ = Wₖ ReLU(hₖ₋₁) + bₖ,  k ≥ 2
//! y  = ReLU(h_κ)                    (appended unit-weight output stage)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Number of quantization levels.
pub const NUM_CODES: usize = 64;
/// Largest weight code.
pub const MAX_CODE: u8 = 63;
const WEIGHT_RANGE: f64 = 2.0;

/// Nominal weight of a 6-bit code on the uniform grid over `[-2, 2]`.
pub fn dequantize(code: u8) -> Result<f64> {
    if code > MAX_CODE {
        return Err(Error::CodeOutOfRange(code as i64));
    }
    Ok(-WEIGHT_RANGE + code as f64 * (2.0 * WEIGHT_RANGE / MAX_CODE as f64))
}

/// Nearest code for a real weight, clamped to the grid.
pub fn quantize(w: f64) -> u8 {
    let step = 2.0 * WEIGHT_RANGE / MAX_CODE as f64;
    ((w + WEIGHT_RANGE) / step).round().clamp(0.0, MAX_CODE as f64) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    Conv,
}

/// Geometry of a valid (unpadded) 2-D convolution. Inputs are laid out
/// channel-major: index `(c · height + y) · width + x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvMeta {
    pub in_height: usize,
    pub in_width: usize,
    pub in_channels: usize,
    pub filter_size: usize,
    pub stride: usize,
}

impl ConvMeta {
    pub fn out_height(&self) -> usize {
        (self.in_height - self.filter_size) / self.stride + 1
    }

    pub fn out_width(&self) -> usize {
        (self.in_width - self.filter_size) / self.stride + 1
    }

    pub fn input_len(&self) -> usize {
        self.in_height * self.in_width * self.in_channels
    }

    pub fn filter_len(&self) -> usize {
        self.filter_size * self.filter_size * self.in_channels
    }

    fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.filter_size == 0 || self.in_channels == 0 {
            return Err(Error::Structure("conv_meta sizes must be positive".into()));
        }
        if self.filter_size > self.in_height || self.filter_size > self.in_width {
            return Err(Error::Structure(format!(
                "filter {} larger than input {}×{}",
                self.filter_size, self.in_height, self.in_width
            )));
        }
        Ok(())
    }
}

/// One layer as stored in the network file. For dense layers
/// `weight_codes` is `n_out × n_in`; for conv layers it holds one row per
/// filter of length `filter_size² · in_channels` and `bias` has one entry per
/// filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub weight_codes: Vec<Vec<u8>>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv_meta: Option<ConvMeta>,
}

/// Dense-equivalent layer. `None` marks a structural zero: no physical
/// connection and no variation.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweredLayer {
    pub rows: usize,
    pub cols: usize,
    pub codes: Vec<Option<u8>>,
    pub bias: Vec<f64>,
}

impl LoweredLayer {
    pub fn code(&self, r: usize, c: usize) -> Option<u8> {
        self.codes[r * self.cols + c]
    }

    /// Nominal weights with zeros at structural positions.
    pub fn nominal_weights(&self) -> Vec<f64> {
        self.codes
            .iter()
            .map(|c| c.map_or(0.0, |c| dequantize(c).expect("validated code")))
            .collect()
    }

    pub fn column_codes(&self, c: usize) -> Vec<Option<u8>> {
        (0..self.rows).map(|r| self.code(r, c)).collect()
    }
}

impl LayerSpec {
    pub fn dense(weight_codes: Vec<Vec<u8>>, bias: Vec<f64>) -> Self {
        Self {
            kind: LayerKind::Dense,
            weight_codes,
            bias,
            conv_meta: None,
        }
    }

    pub fn conv(filters: Vec<Vec<u8>>, bias: Vec<f64>, meta: ConvMeta) -> Self {
        Self {
            kind: LayerKind::Conv,
            weight_codes: filters,
            bias,
            conv_meta: Some(meta),
        }
    }

    pub fn input_dim(&self) -> Result<usize> {
        match self.kind {
            LayerKind::Dense => Ok(self.weight_codes.first().map_or(0, Vec::len)),
            LayerKind::Conv => Ok(self.meta()?.input_len()),
        }
    }

    pub fn output_dim(&self) -> Result<usize> {
        match self.kind {
            LayerKind::Dense => Ok(self.weight_codes.len()),
            LayerKind::Conv => {
                let m = self.meta()?;
                Ok(m.out_height() * m.out_width() * self.weight_codes.len())
            }
        }
    }

    fn meta(&self) -> Result<ConvMeta> {
        self.conv_meta
            .ok_or_else(|| Error::Structure("conv layer without conv_meta".into()))
    }

    fn validate(&self) -> Result<()> {
        for row in &self.weight_codes {
            if let Some(c) = row.iter().find(|c| **c > MAX_CODE) {
                return Err(Error::CodeOutOfRange(*c as i64));
            }
        }
        let width = match self.kind {
            LayerKind::Dense => self.input_dim()?,
            LayerKind::Conv => {
                let m = self.meta()?;
                m.validate()?;
                m.filter_len()
            }
        };
        if self.weight_codes.iter().any(|r| r.len() != width) {
            return Err(Error::Structure(format!("weight_codes rows must have {width} entries")));
        }
        check_dim("bias length", self.weight_codes.len(), self.bias.len())
    }

    /// Dense-equivalent form. Dense layers map one-to-one; conv layers become
    /// a sparse matrix whose nonzeros reuse the filter codes.
    pub fn lower(&self) -> Result<LoweredLayer> {
        self.validate()?;
        match self.kind {
            LayerKind::Dense => {
                let rows = self.weight_codes.len();
                let cols = self.input_dim()?;
                Ok(LoweredLayer {
                    rows,
                    cols,
                    codes: self.weight_codes.iter().flatten().map(|c| Some(*c)).collect(),
                    bias: self.bias.clone(),
                })
            }
            LayerKind::Conv => lower_conv(&self.weight_codes, &self.bias, &self.meta()?),
        }
    }
}

fn lower_conv(filters: &[Vec<u8>], bias: &[f64], m: &ConvMeta) -> Result<LoweredLayer> {
    let (oh, ow, k) = (m.out_height(), m.out_width(), m.filter_size);
    let rows = filters.len() * oh * ow;
    let cols = m.input_len();
    let mut codes = vec![None; rows * cols];
    let mut out_bias = Vec::with_capacity(rows);
    for (f, filter) in filters.iter().enumerate() {
        for oy in 0..oh {
            for ox in 0..ow {
                let r = (f * oh + oy) * ow + ox;
                out_bias.push(bias[f]);
                for c in 0..m.in_channels {
                    for ky in 0..k {
                        for kx in 0..k {
                            let y = oy * m.stride + ky;
                            let x = ox * m.stride + kx;
                            let col = (c * m.in_height + y) * m.in_width + x;
                            codes[r * cols + col] = Some(filter[(c * k + ky) * k + kx]);
                        }
                    }
                }
            }
        }
    }
    Ok(LoweredLayer {
        rows,
        cols,
        codes,
        bias: out_bias,
    })
}

/// Ordered layers of the nominal network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layers: Vec<LayerSpec>) -> Result<Self> {
        let net = Self { input_dim, layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::Structure("network has no layers".into()));
        }
        let mut dim = self.input_dim;
        for layer in &self.layers {
            layer.validate()?;
            check_dim("layer input dimension", dim, layer.input_dim()?)?;
            dim = layer.output_dim()?;
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.layers
            .last()
            .and_then(|l| l.output_dim().ok())
            .unwrap_or(0)
    }

    pub fn lowered(&self) -> Result<Vec<LoweredLayer>> {
        self.validate()?;
        self.layers.iter().map(LayerSpec::lower).collect()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let net: Self = serde_json::from_str(s)?;
        net.validate()?;
        Ok(net)
    }

    /// Forward pass with dequantized weights.
    pub fn nominal_forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim("nominal_forward input", self.input_dim, x.len())?;
        let layers = self.lowered()?;
        Ok(nominal_forward_lowered(&layers, x))
    }
}

pub(crate) fn nominal_forward_lowered(layers: &[LoweredLayer], x: &[f64]) -> Vec<f64> {
    let mut h = x.to_vec();
    for (k, layer) in layers.iter().enumerate() {
        if k > 0 {
            relu_in_place(&mut h);
        }
        let w = layer.nominal_weights();
        h = (0..layer.rows)
            .map(|r| {
                let row = &w[r * layer.cols..(r + 1) * layer.cols];
                row.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>() + layer.bias[r]
            })
            .collect();
    }
    relu_in_place(&mut h);
    h
}

fn relu_in_place(h: &mut [f64]) {
    for v in h.iter_mut() {
        *v = v.max(0.0);
    }
}

/// Predicted class of an output vector. Multi-output: argmax with the lowest
/// index winning ties. Single output: class 1 when the output exceeds 0.5.
pub fn predicted_class(y: &[f64]) -> usize {
    if y.len() == 1 {
        return usize::from(y[0] > BINARY_THRESHOLD);
    }
    let mut best = 0;
    for (i, v) in y.iter().enumerate() {
        if *v > y[best] {
            best = i;
        }
    }
    best
}

/// Decision threshold for single-output (binary) networks.
pub const BINARY_THRESHOLD: f64 = 0.5;
