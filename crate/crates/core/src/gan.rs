//! Adversarial training of the generator/discriminator pair on attack-only rows.
//!
//! Each batch runs one discriminator update (real rows against as many generated
//! rows, smoothed targets) followed by one generator update through the frozen
//! discriminator. Epochs shuffle the attack rows with the run seed.

use std::io::Write;
use std::path::Path;

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::flow_data::FlowDataset;
use crate::neural::{bce_sigmoid_grad, Activation, AdamConfig, AdamState, DenseNetwork, BCE_EPS};
use crate::rng::{self, Rng};
use crate::{Error, Result};

/// Generator hidden widths.
pub const GENERATOR_HIDDEN: [usize; 2] = [64, 128];
/// Discriminator hidden widths.
pub const DISCRIMINATOR_HIDDEN: [usize; 2] = [128, 64];
/// Target the generator trains its fakes towards.
pub const GENERATOR_TARGET: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GanConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub real_label: f64,
    pub fake_label: f64,
    /// Latent width; `None` means the feature count.
    pub latent_dim: Option<usize>,
    pub seed: u64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            batch_size: 4096,
            lr: 0.001,
            real_label: 0.9,
            fake_label: 0.1,
            latent_dim: None,
            seed: 0,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.fake_label && self.fake_label < self.real_label && self.real_label <= 1.0) {
            return Err(Error::Config(format!(
                "labels must satisfy 0 < fake ({}) < real ({}) <= 1",
                self.fake_label, self.real_label
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("lr must be finite and >= 0".into()));
        }
        if self.latent_dim == Some(0) {
            return Err(Error::Config("latent_dim must be >= 1".into()));
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.lr,
            ..AdamConfig::default()
        }
    }
}

/// Generator (latent → 64 → 128 → d) and discriminator (d → 128 → 64 → 1) with
/// their optimizer states.
#[derive(Debug, Clone, PartialEq)]
pub struct GanModel {
    pub generator: DenseNetwork,
    pub discriminator: DenseNetwork,
    pub g_state: AdamState,
    pub d_state: AdamState,
}

const HIDDEN_ACTS: [Activation; 3] = [Activation::Relu, Activation::Relu, Activation::Sigmoid];

impl GanModel {
    pub fn init(d: usize, cfg: &GanConfig, rng: &mut Rng) -> Result<Self> {
        cfg.validate()?;
        if d == 0 {
            return Err(Error::Config("feature count must be >= 1".into()));
        }
        let latent = cfg.latent_dim.unwrap_or(d);
        let generator = DenseNetwork::init(
            &[latent, GENERATOR_HIDDEN[0], GENERATOR_HIDDEN[1], d],
            &HIDDEN_ACTS,
            rng,
        )?;
        let discriminator = DenseNetwork::init(
            &[d, DISCRIMINATOR_HIDDEN[0], DISCRIMINATOR_HIDDEN[1], 1],
            &HIDDEN_ACTS,
            rng,
        )?;
        Ok(Self {
            g_state: AdamState::new(&generator, cfg.adam()),
            d_state: AdamState::new(&discriminator, cfg.adam()),
            generator,
            discriminator,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.generator.input_size()
    }

    pub fn feature_dim(&self) -> usize {
        self.discriminator.input_size()
    }

    pub fn generate(&self, n: usize, rng: &mut Rng) -> Array2<f64> {
        let z = sample_noise(n, self.latent_dim(), rng);
        self.generator
            .forward(&z.view())
            .expect("latent width matches generator")
    }

    /// One discriminator update on `real` plus an equal number of fakes.
    pub fn discriminator_step(
        &mut self,
        real: &ArrayView2<f64>,
        cfg: &GanConfig,
        rng: &mut Rng,
    ) -> Result<DiscriminatorLosses> {
        let m = real.nrows();
        if m == 0 {
            return Err(Error::EmptyDataset);
        }
        if real.ncols() != self.feature_dim() {
            return Err(Error::Dimension {
                expected: self.feature_dim(),
                found: real.ncols(),
                context: "real batch width",
            });
        }
        let fake = self.generate(m, rng);
        let batch = concatenate(Axis(0), &[real.view(), fake.view()]).expect("equal widths");
        let mut targets = Array2::from_elem((2 * m, 1), cfg.real_label);
        targets.slice_mut(s![m.., ..]).fill(cfg.fake_label);

        let cache = self.discriminator.forward_cached(&batch.view())?;
        let pred = cache.output();
        let loss_real = mean_bce(pred.slice(s![..m, 0]).iter(), cfg.real_label);
        let loss_fake = mean_bce(pred.slice(s![m.., 0]).iter(), cfg.fake_label);
        if !loss_real.is_finite() || !loss_fake.is_finite() {
            return Err(Error::NonFinite("discriminator loss"));
        }
        let correct = pred.slice(s![..m, 0]).iter().filter(|&&p| p > 0.5).count()
            + pred.slice(s![m.., 0]).iter().filter(|&&p| p < 0.5).count();

        let grad = bce_sigmoid_grad(pred, &targets);
        let grads = self.discriminator.backward(&cache, grad)?;
        self.d_state.step(&mut self.discriminator, &grads.layers)?;
        Ok(DiscriminatorLosses {
            real: loss_real,
            fake: loss_fake,
            accuracy: correct as f64 / (2 * m) as f64,
        })
    }

    /// One generator update on `n` fresh latent draws, pushing the frozen
    /// discriminator's output towards [`GENERATOR_TARGET`].
    pub fn generator_step(&mut self, n: usize, _cfg: &GanConfig, rng: &mut Rng) -> Result<f64> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let z = sample_noise(n, self.latent_dim(), rng);
        let g_cache = self.generator.forward_cached(&z.view())?;
        let fake = g_cache.output();
        let d_cache = self.discriminator.forward_cached(&fake.view())?;
        let pred = d_cache.output();
        let loss = mean_bce(pred.iter(), GENERATOR_TARGET);
        if !loss.is_finite() {
            return Err(Error::NonFinite("generator loss"));
        }
        let targets = Array2::from_elem(pred.raw_dim(), GENERATOR_TARGET);
        let d_grads = self
            .discriminator
            .backward(&d_cache, bce_sigmoid_grad(pred, &targets))?;
        // Chain through the generator's output sigmoid.
        let mut d_logits = d_grads.input;
        ndarray::Zip::from(&mut d_logits)
            .and(fake)
            .for_each(|g, &a| *g *= a * (1.0 - a));
        let g_grads = self.generator.backward(&g_cache, d_logits)?;
        self.g_state.step(&mut self.generator, &g_grads.layers)?;
        Ok(loss)
    }
}

fn mean_bce<'a>(pred: impl ExactSizeIterator<Item = &'a f64>, target: f64) -> f64 {
    let n = pred.len() as f64;
    pred.map(|&p| {
        let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
        -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
    })
    .sum::<f64>()
        / n
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorLosses {
    pub real: f64,
    pub fake: f64,
    /// Fraction of real rows scored above 0.5 and fakes below, before the update.
    pub accuracy: f64,
}

/// I.i.d. standard-normal latent draws.
pub fn sample_noise(n: usize, d: usize, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, d), || StandardNormal.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub d_loss_real: f64,
    pub d_loss_fake: f64,
    pub g_loss: f64,
    pub d_accuracy: f64,
}

impl EpochRecord {
    /// Mean discriminator loss over real and fake rows.
    pub fn d_loss(&self) -> f64 {
        (self.d_loss_real + self.d_loss_fake) / 2.0
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub records: Vec<EpochRecord>,
}

pub const TRAIN_LOG_HEADER: &str = "epoch,d_loss_real,d_loss_fake,g_loss,d_accuracy";

impl EpochRecord {
    pub fn csv_line(&self) -> String {
        use crate::numfmt::exact;
        format!(
            "{},{},{},{},{}",
            self.epoch,
            exact(self.d_loss_real),
            exact(self.d_loss_fake),
            exact(self.g_loss),
            exact(self.d_accuracy)
        )
    }
}

impl TrainLog {
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::from(TRAIN_LOG_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(path, e))
    }
}

/// Trains on a normalized, attack-only dataset.
pub fn train(attack_data: &FlowDataset, cfg: &GanConfig) -> Result<(GanModel, TrainLog)> {
    train_with(attack_data, cfg, |_| {})
}

/// [`train`] with a callback after every completed epoch. On divergence the
/// callback has already seen every finished epoch.
pub fn train_with(
    attack_data: &FlowDataset,
    cfg: &GanConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(GanModel, TrainLog)> {
    if !attack_data.is_normalized() {
        return Err(Error::Config("GAN training needs normalized data".into()));
    }
    if attack_data.labels().iter().any(|&l| l != 1) {
        return Err(Error::Config(
            "GAN training takes attack rows (label 1) only".into(),
        ));
    }
    train_matrix(attack_data.features(), cfg, &mut on_epoch)
}

/// Training on a bare matrix whose cells lie in [0, 1].
pub fn train_matrix(
    data: &Array2<f64>,
    cfg: &GanConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<(GanModel, TrainLog)> {
    cfg.validate()?;
    let n = data.nrows();
    if n == 0 || data.ncols() == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng::seeded(cfg.seed);
    let mut model = GanModel::init(data.ncols(), cfg, &mut rng)?;
    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut real_sum, mut fake_sum, mut g_sum, mut acc_sum) = (0.0, 0.0, 0.0, 0.0);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = data.select(Axis(0), chunk);
            let m = chunk.len() as f64;
            let d = model
                .discriminator_step(&batch.view(), cfg, &mut rng)
                .map_err(|e| diverged(e, epoch))?;
            let g = model
                .generator_step(chunk.len(), cfg, &mut rng)
                .map_err(|e| diverged(e, epoch))?;
            real_sum += d.real * m;
            fake_sum += d.fake * m;
            g_sum += g * m;
            acc_sum += d.accuracy * m;
        }
        let record = EpochRecord {
            epoch,
            d_loss_real: real_sum / n as f64,
            d_loss_fake: fake_sum / n as f64,
            g_loss: g_sum / n as f64,
            d_accuracy: acc_sum / n as f64,
        };
        on_epoch(&record);
        log.records.push(record);
    }
    Ok((model, log))
}

fn diverged(e: Error, epoch: usize) -> Error {
    match e {
        Error::NonFinite(what) => Error::Diverged { what, epoch },
        Error::NonFiniteGradient { .. } => Error::Diverged {
            what: "gradient",
            epoch,
        },
        other => other,
    }
}
