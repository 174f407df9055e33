//! Flat binary model file, little-endian throughout.
//!
//! ```text
//! magic     8 bytes  "CGAINMDL"
//! version   u32      1
//! width     u64      feature count d
//! cond      u64      condition block width
//! config    conditioning u8, alpha f64, batch u64, iterations u64,
//!           hidden_mult u64, optimizer u8, lr f64, beta1 f64, beta2 f64,
//!           epsilon f64, sign u8, noise f64, log_interval u64,
//!           early_stop u8, window u64, tolerance f64, stratified u8
//! schema    d x (name str, kind u8, min f64, max f64)
//! classes   u64 count, then count x str
//! nets      generator, discriminator: hidden act u8, output act u8,
//!           widths 4 x u64, then W1 b1 W2 b2 W3 b3 as f64
//! ```
//! Strings are a u32 byte length followed by UTF-8.

use std::path::Path;

use super::loss::AdversarialSign;
use super::model::{ImputerConfig, ImputerModel};
use crate::data::{ColumnKind, ColumnSpec, FeatureSchema};
use crate::error::{Error, Result};
use crate::nn::{Activation, DenseNet, Layer, Matrix, OptimizerConfig, OptimizerKind};

pub const MAGIC: &[u8; 8] = b"CGAINMDL";
pub const FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
    fn f64s(&mut self, values: &[f64]) {
        for &v in values {
            self.f64(v);
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes"));
        usize::try_from(v).map_err(|_| Error::ModelFormat(format!("size {v} out of range")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(Error::ModelFormat(format!("invalid flag byte {b}"))),
        }
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::ModelFormat("string is not UTF-8".into()))
    }
    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("array too large".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

fn write_net(w: &mut Writer, net: &DenseNet) {
    w.u8(net.hidden_activation().code());
    w.u8(net.output_activation().code());
    let layers = net.layers();
    w.u64(layers[0].fan_in());
    for layer in layers {
        w.u64(layer.fan_out());
    }
    for layer in layers {
        w.f64s(layer.weights.as_slice());
        w.f64s(&layer.bias);
    }
}

fn read_net(r: &mut Reader) -> Result<DenseNet> {
    let activation = |code: u8| {
        Activation::from_code(code).ok_or_else(|| Error::ModelFormat(format!("unknown activation {code}")))
    };
    let hidden = activation(r.u8()?)?;
    let output = activation(r.u8()?)?;
    let mut widths = [0usize; 4];
    for w in &mut widths {
        *w = r.u64()?;
    }
    let mut layers = Vec::with_capacity(3);
    for i in 0..3 {
        let weights = Matrix::from_vec(widths[i], widths[i + 1], r.f64s(widths[i] * widths[i + 1])?)?;
        let bias = r.f64s(widths[i + 1])?;
        layers.push(Layer { weights, bias });
    }
    let layers: [Layer; 3] = layers.try_into().expect("three layers");
    DenseNet::from_layers(layers, hidden, output)
}

/// Serializes `model` to bytes.
pub fn encode_model(model: &ImputerModel) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION);
    w.u64(model.width());
    w.u64(model.condition_width());
    let c = model.config();
    w.u8(u8::from(c.conditioning));
    w.f64(c.alpha);
    w.u64(c.batch_size);
    w.u64(c.iterations);
    w.u64(c.hidden_mult);
    w.u8(match c.optimizer.kind {
        OptimizerKind::Sgd => 0,
        OptimizerKind::Adam => 1,
    });
    w.f64(c.optimizer.learning_rate);
    w.f64(c.optimizer.beta1);
    w.f64(c.optimizer.beta2);
    w.f64(c.optimizer.epsilon);
    w.u8(c.adversarial_sign.code());
    w.f64(c.noise_scale);
    w.u64(c.log_interval);
    w.u8(u8::from(c.early_stop));
    w.u64(c.early_stop_window);
    w.f64(c.early_stop_tolerance);
    w.u8(u8::from(c.stratified_batches));
    for col in &model.schema().columns {
        w.str(&col.name);
        w.u8(col.kind.code());
        w.f64(col.min);
        w.f64(col.max);
    }
    w.u64(model.class_names().len());
    for name in model.class_names() {
        w.str(name);
    }
    write_net(&mut w, model.generator());
    write_net(&mut w, model.discriminator());
    w.0
}

/// Parses bytes produced by [`encode_model`].
pub fn decode_model(bytes: &[u8]) -> Result<ImputerModel> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let width = r.u64()?;
    let condition_width = r.u64()?;
    let conditioning = r.bool()?;
    let alpha = r.f64()?;
    let batch_size = r.u64()?;
    let iterations = r.u64()?;
    let hidden_mult = r.u64()?;
    let kind = match r.u8()? {
        0 => OptimizerKind::Sgd,
        1 => OptimizerKind::Adam,
        k => return Err(Error::ModelFormat(format!("unknown optimizer {k}"))),
    };
    let optimizer = OptimizerConfig {
        kind,
        learning_rate: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        epsilon: r.f64()?,
    };
    let sign_code = r.u8()?;
    let adversarial_sign = AdversarialSign::from_code(sign_code)
        .ok_or_else(|| Error::ModelFormat(format!("unknown adversarial sign {sign_code}")))?;
    let config = ImputerConfig {
        conditioning,
        alpha,
        batch_size,
        iterations,
        hidden_mult,
        optimizer,
        adversarial_sign,
        noise_scale: r.f64()?,
        log_interval: r.u64()?,
        early_stop: r.bool()?,
        early_stop_window: r.u64()?,
        early_stop_tolerance: r.f64()?,
        stratified_batches: r.bool()?,
    };
    config.validate().map_err(|e| Error::ModelFormat(format!("stored config: {e}")))?;

    let mut columns = Vec::with_capacity(width.min(1 << 16));
    for _ in 0..width {
        let name = r.str()?;
        let code = r.u8()?;
        let kind = ColumnKind::from_code(code)
            .ok_or_else(|| Error::ModelFormat(format!("unknown column kind {code}")))?;
        columns.push(ColumnSpec {
            name,
            kind,
            min: r.f64()?,
            max: r.f64()?,
        });
    }
    let schema = FeatureSchema { columns };
    schema.validate()?;
    let class_count = r.u64()?;
    let mut class_names = Vec::with_capacity(class_count.min(1 << 16));
    for _ in 0..class_count {
        class_names.push(r.str()?);
    }
    let generator = read_net(&mut r)?;
    let discriminator = read_net(&mut r)?;
    if r.pos != bytes.len() {
        return Err(Error::ModelFormat(format!(
            "{} trailing bytes",
            bytes.len() - r.pos
        )));
    }
    ImputerModel::from_parts(generator, discriminator, condition_width, config, schema, class_names)
}

pub fn save_model(model: &ImputerModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ImputerModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
