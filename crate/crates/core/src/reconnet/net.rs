use std::fmt;
use std::str::FromStr;

use super::batchnorm::BatchNorm2d;
use super::conv::{convt_out_size, CenterCrop, ConvTranspose2d};
use super::layers::{Dense, Encoder, Layer, Relu};
use super::loss::{combined_loss, LossValue};
use super::{Adam, Param};
use crate::numerics::{child_seed, Matrix, SeededRng};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecoderKind {
    Mlp,
    ConvT,
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecoderKind::Mlp => "mlp",
            DecoderKind::ConvT => "convt",
        })
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mlp" => Ok(DecoderKind::Mlp),
            "convt" | "conv" => Ok(DecoderKind::ConvT),
            other => Err(Error::Config(format!("unknown decoder kind '{other}'"))),
        }
    }
}

/// Architecture and training hyperparameters of the reconstruction network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetConfig {
    pub n_points: usize,
    pub out_dim: usize,
    pub out_shape: Option<(usize, usize)>,
    pub decoder_kind: DecoderKind,
    pub target_hidden: usize,
    pub context_hidden: usize,
    pub mlp_hidden: Vec<usize>,
    /// Output channels of the strided transposed-convolution blocks.
    pub conv_channels: Vec<usize>,
    pub batch_size: usize,
    pub lr: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub l1_weight: f64,
    pub seed: u64,
}

impl NetConfig {
    pub fn new(n_points: usize, out_dim: usize) -> Self {
        NetConfig {
            n_points,
            out_dim,
            out_shape: None,
            decoder_kind: DecoderKind::Mlp,
            target_hidden: 16,
            context_hidden: 64,
            mlp_hidden: vec![256, 512],
            conv_channels: vec![512, 256, 128, 64],
            batch_size: 64,
            lr: 1e-5,
            max_epochs: 500,
            patience: 20,
            l1_weight: 1.0,
            seed: 0,
        }
    }

    pub fn input_width(&self) -> usize {
        2 * self.n_points
    }

    pub fn code_width(&self) -> usize {
        self.target_hidden + self.context_hidden
    }

    /// Sets one field from its textual form, as used by config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{value}' for '{key}'")))
        }
        fn list(key: &str, value: &str) -> Result<Vec<usize>> {
            let v = value.trim().trim_start_matches('[').trim_end_matches(']');
            if v.trim().is_empty() {
                return Ok(Vec::new());
            }
            v.split(',').map(|p| parse(key, p)).collect()
        }
        match key.trim() {
            "n_points" => self.n_points = parse(key, value)?,
            "out_dim" => self.out_dim = parse(key, value)?,
            "out_shape" => {
                let v = value.trim();
                self.out_shape = if v.is_empty() || v == "none" {
                    None
                } else {
                    let (h, w) = v
                        .split_once('x')
                        .ok_or_else(|| Error::Config(format!("out_shape must look like HxW, got '{v}'")))?;
                    Some((parse(key, h)?, parse(key, w)?))
                }
            }
            "decoder_kind" | "decoder" => self.decoder_kind = value.trim().parse()?,
            "target_hidden" => self.target_hidden = parse(key, value)?,
            "context_hidden" => self.context_hidden = parse(key, value)?,
            "mlp_hidden" => self.mlp_hidden = list(key, value)?,
            "conv_channels" => self.conv_channels = list(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "lr" => self.lr = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "l1_weight" => self.l1_weight = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            other => return Err(Error::Config(format!("unknown network setting '{other}'"))),
        }
        Ok(())
    }

    /// `key=value` lines accepted back by [`NetConfig::from_text`].
    pub fn to_text(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let shape = self.out_shape.map_or("none".to_string(), |(h, w)| format!("{h}x{w}"));
        format!(
            "n_points={}\nout_dim={}\nout_shape={}\ndecoder_kind={}\ntarget_hidden={}\ncontext_hidden={}\n\
             mlp_hidden={}\nconv_channels={}\nbatch_size={}\nlr={:e}\nmax_epochs={}\npatience={}\nl1_weight={:e}\nseed={}\n",
            self.n_points,
            self.out_dim,
            shape,
            self.decoder_kind,
            self.target_hidden,
            self.context_hidden,
            join(&self.mlp_hidden),
            join(&self.conv_channels),
            self.batch_size,
            self.lr,
            self.max_epochs,
            self.patience,
            self.l1_weight,
            self.seed
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = NetConfig::new(0, 0);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got '{line}'")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_points < 2 {
            return bad(format!("n_points must be at least 2, got {}", self.n_points));
        }
        if self.out_dim == 0 {
            return bad("out_dim must be positive".into());
        }
        if self.target_hidden == 0 || self.context_hidden == 0 {
            return bad("encoder widths must be positive".into());
        }
        if let Some((h, w)) = self.out_shape {
            if h * w != self.out_dim {
                return bad(format!("out_shape {h}x{w} does not match out_dim {}", self.out_dim));
            }
        }
        if self.mlp_hidden.contains(&0) || self.conv_channels.contains(&0) {
            return bad("layer widths must be positive".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(self.l1_weight.is_finite() && self.l1_weight >= 0.0) {
            return bad(format!("l1_weight must be nonnegative, got {}", self.l1_weight));
        }
        if self.decoder_kind == DecoderKind::ConvT {
            self.convt_plan()?;
        }
        Ok(())
    }

    /// Spatial chain of the transposed-convolution decoder as
    /// `(channels, size)` after each block, ending with the cropped
    /// single-channel output.
    fn convt_plan(&self) -> Result<Vec<(usize, usize)>> {
        let mut shapes = vec![(self.code_width(), 1)];
        let mut size = 1;
        for (i, &ch) in self.conv_channels.iter().enumerate() {
            let (k, s, p) = if i == 0 { (4, 1, 0) } else { (4, 2, 1) };
            size = convt_out_size(size, k, s, p).unwrap_or(0);
            shapes.push((ch, size));
        }
        let describe = |shapes: &[(usize, usize)]| {
            shapes
                .iter()
                .map(|(c, s)| format!("{c}x{s}x{s}"))
                .collect::<Vec<_>>()
                .join(" -> ")
        };
        let target = match self.out_shape {
            Some((h, w)) if h == w => h,
            other => {
                return Err(Error::Config(format!(
                    "convt decoder needs a square out_shape, got {other:?}; layers: {}",
                    describe(&shapes)
                )))
            }
        };
        if self.conv_channels.is_empty() || target > size {
            return Err(Error::Config(format!(
                "convt decoder cannot produce {target}x{target}; layers: {}",
                describe(&shapes)
            )));
        }
        shapes.push((1, target));
        Ok(shapes)
    }

    /// Human-readable per-layer description of the network.
    pub fn layer_plan(&self) -> Result<Vec<String>> {
        self.validate()?;
        Ok(build_layers(self, &mut SeededRng::new(0))
            .iter()
            .map(|l| l.name())
            .collect())
    }
}

/// Bias of the output layer at initialization. The output layer starts with
/// zero weights so that every output unit begins above the final ReLU's kink;
/// with random weights a share of units start (and stay) dead.
pub const OUTPUT_BIAS_INIT: f64 = 0.5;

fn output_init(weight: &mut Param, bias: &mut Param) {
    weight.value.iter_mut().for_each(|v| *v = 0.0);
    bias.value.iter_mut().for_each(|v| *v = OUTPUT_BIAS_INIT);
}

fn build_layers(cfg: &NetConfig, rng: &mut SeededRng) -> Vec<Box<dyn Layer>> {
    let mut layers: Vec<Box<dyn Layer>> = Vec::new();
    layers.push(Box::new(Encoder::new(
        cfg.n_points,
        cfg.target_hidden,
        cfg.context_hidden,
        rng,
    )));
    match cfg.decoder_kind {
        DecoderKind::Mlp => {
            let mut width = cfg.code_width();
            for &h in &cfg.mlp_hidden {
                layers.push(Box::new(Dense::new(width, h, rng)));
                layers.push(Box::new(Relu::new(h)));
                width = h;
            }
            let mut out = Dense::new(width, cfg.out_dim, rng);
            output_init(&mut out.weight, &mut out.bias);
            layers.push(Box::new(out));
            layers.push(Box::new(Relu::new(cfg.out_dim)));
        }
        DecoderKind::ConvT => {
            let (mut ch, mut size) = (cfg.code_width(), 1);
            for (i, &out_ch) in cfg.conv_channels.iter().enumerate() {
                let (k, s, p) = if i == 0 { (4, 1, 0) } else { (4, 2, 1) };
                let conv = ConvTranspose2d::new(ch, out_ch, k, s, p, size, rng);
                size = conv.out_size;
                ch = out_ch;
                layers.push(Box::new(conv));
                layers.push(Box::new(BatchNorm2d::new(ch, size * size)));
                layers.push(Box::new(Relu::new(ch * size * size)));
            }
            let target = cfg.out_shape.map_or(size, |(h, _)| h);
            if target != size {
                layers.push(Box::new(CenterCrop::new(ch, size, target)));
            }
            let mut out = ConvTranspose2d::new(ch, 1, 1, 1, 0, target, rng);
            output_init(&mut out.weight, &mut out.bias);
            layers.push(Box::new(out));
            layers.push(Box::new(Relu::new(target * target)));
        }
    }
    layers
}

/// The reconstruction network: split encoder followed by a decoder.
pub struct ReconNet {
    config: NetConfig,
    layers: Vec<Box<dyn Layer>>,
    optimizer: Adam,
}

impl fmt::Debug for ReconNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReconNet")
            .field("layers", &self.layers.iter().map(|l| l.name()).collect::<Vec<_>>())
            .field("step", &self.optimizer.step)
            .finish()
    }
}

impl ReconNet {
    pub fn new(config: NetConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(child_seed(config.seed, 0));
        let layers = build_layers(&config, &mut rng);
        Ok(ReconNet {
            config,
            layers,
            optimizer: Adam::default(),
        })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn layer_names(&self) -> Vec<String> {
        self.layers.iter().map(|l| l.name()).collect()
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.optimizer.step
    }

    fn check_inputs(&self, inputs: &Matrix) -> Result<()> {
        if inputs.cols() != self.config.input_width() {
            return Err(Error::validation(format!(
                "network expects inputs of length {}, got {}",
                self.config.input_width(),
                inputs.cols()
            )));
        }
        Ok(())
    }

    /// Inference on a batch of flattened embeddings (one per row).
    pub fn predict(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_inputs(inputs)?;
        Ok(self.layers.iter().fold(inputs.clone(), |x, l| l.infer(&x)))
    }

    /// Output of the encoder alone.
    pub fn encode(&self, inputs: &Matrix) -> Result<Matrix> {
        self.check_inputs(inputs)?;
        Ok(self.layers[0].infer(inputs))
    }

    /// Training-mode forward pass that records what backpropagation needs.
    pub fn forward_train(&mut self, inputs: &Matrix) -> Result<Matrix> {
        self.check_inputs(inputs)?;
        let mut x = inputs.clone();
        for layer in &mut self.layers {
            x = layer.forward(&x);
        }
        Ok(x)
    }

    /// Accumulates parameter gradients for the recorded forward pass.
    pub fn backward(&mut self, grad_out: &Matrix) {
        let mut g = grad_out.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g);
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// One optimizer step on a batch; returns the batch loss before the update.
    pub fn train_step(&mut self, inputs: &Matrix, targets: &Matrix) -> Result<LossValue> {
        let pred = self.forward_train(inputs)?;
        if targets.shape() != pred.shape() {
            return Err(Error::validation(format!(
                "targets have shape {:?}, network produces {:?}",
                targets.shape(),
                pred.shape()
            )));
        }
        let (loss, grad) = combined_loss(&pred, targets, self.config.l1_weight);
        self.zero_grad();
        self.backward(&grad);
        let lr = self.config.lr;
        let params = self.layers.iter_mut().flat_map(|l| l.params_mut());
        self.optimizer.step(params, lr);
        if !self.params().iter().all(|p| p.value.iter().all(|v| v.is_finite())) {
            return Err(Error::Numerical("non-finite parameter after optimizer step".into()));
        }
        Ok(loss)
    }

    /// Inference-mode loss averaged over all entries of the set.
    pub fn evaluate(&self, inputs: &Matrix, targets: &Matrix) -> Result<LossValue> {
        let pred = self.predict(inputs)?;
        if targets.shape() != pred.shape() {
            return Err(Error::validation("targets do not match network output shape"));
        }
        Ok(combined_loss(&pred, targets, self.config.l1_weight).0)
    }

    /// Parameter values followed by non-trainable buffers, in declaration order.
    pub fn state(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = Vec::new();
        for layer in &self.layers {
            out.extend(layer.params().into_iter().map(|p| p.value.clone()));
            out.extend(layer.buffers().into_iter().cloned());
        }
        out
    }

    pub fn load_state(&mut self, state: &[Vec<f64>]) -> Result<()> {
        let expected: Vec<usize> = self.state().iter().map(Vec::len).collect();
        let found: Vec<usize> = state.iter().map(Vec::len).collect();
        if expected != found {
            return Err(Error::validation(format!(
                "state has tensor sizes {found:?}, network expects {expected:?}"
            )));
        }
        let mut it = state.iter();
        for layer in &mut self.layers {
            for p in layer.params_mut() {
                p.value.copy_from_slice(it.next().expect("length checked"));
            }
            for b in layer.buffers_mut() {
                b.copy_from_slice(it.next().expect("length checked"));
            }
        }
        Ok(())
    }

    /// All state tensors concatenated.
    pub fn flat_state(&self) -> Vec<f64> {
        self.state().concat()
    }

    pub fn state_len(&self) -> usize {
        self.state().iter().map(Vec::len).sum()
    }

    pub fn load_flat_state(&mut self, flat: &[f64]) -> Result<()> {
        let sizes: Vec<usize> = self.state().iter().map(Vec::len).collect();
        let total: usize = sizes.iter().sum();
        if flat.len() != total {
            return Err(Error::validation(format!(
                "flat state has {} values, network expects {total}",
                flat.len()
            )));
        }
        let mut offset = 0;
        let tensors: Vec<Vec<f64>> = sizes
            .iter()
            .map(|&s| {
                let t = flat[offset..offset + s].to_vec();
                offset += s;
                t
            })
            .collect();
        self.load_state(&tensors)
    }
}
