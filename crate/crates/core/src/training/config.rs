use crate::adam::AdamConfig;
use crate::error::{Error, Result};
use crate::kv::KvMap;
use crate::model::{DecoderInit, LossMode, LossWeights, ModelDims};

/// Optimization settings. Defaults reproduce the reference protocol: 30 in,
/// 60 out, batches of 200, 30 epochs, lr 0.00141 halved every 5 epochs,
/// alpha 1, beta 2.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub p: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub base_lr: f64,
    pub halve_every: usize,
    pub alpha: f64,
    pub beta: f64,
    pub mode: LossMode,
    pub seed: u64,
    pub hidden: usize,
    pub latent: usize,
    pub decoder_init: DecoderInit,
    /// Global L2 gradient-norm clip; off when `None`.
    pub clip_norm: Option<f64>,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: 30,
            p: 60,
            batch_size: 200,
            epochs: 30,
            base_lr: 0.00141,
            halve_every: 5,
            alpha: 1.0,
            beta: 2.0,
            mode: LossMode::TrajAutoEnc,
            seed: 0,
            hidden: 512,
            latent: 256,
            decoder_init: DecoderInit::Full,
            clip_norm: None,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn dims(&self) -> ModelDims {
        ModelDims { k: self.k, p: self.p, hidden: self.hidden, latent: self.latent, decoder_init: self.decoder_init }
    }

    pub fn loss_weights(&self) -> Result<LossWeights> {
        LossWeights::new(self.alpha, self.beta, self.mode)
    }

    pub fn validate(&self) -> Result<()> {
        self.dims().validate()?;
        self.loss_weights()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 || self.epochs == 0 || self.halve_every == 0 {
            return bad(format!(
                "batch_size ({}), epochs ({}) and halve_every ({}) must be positive",
                self.batch_size, self.epochs, self.halve_every
            ));
        }
        if !(self.base_lr > 0.0 && self.base_lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.base_lr));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0 && c.is_finite()) {
                return bad(format!("clip_norm must be positive, got {c}"));
            }
        }
        let AdamConfig { beta1, beta2, eps } = self.adam;
        if !((0.0..1.0).contains(&beta1) && (0.0..1.0).contains(&beta2) && eps > 0.0) {
            return bad(format!("invalid Adam settings beta1={beta1} beta2={beta2} eps={eps}"));
        }
        Ok(())
    }

    /// Overlays the keys present in `kv` on top of `self`.
    pub fn apply_kv(mut self, kv: &KvMap) -> Result<Self> {
        self.k = kv.get_or("k", self.k)?;
        self.p = kv.get_or("p", self.p)?;
        self.batch_size = kv.get_or("batch_size", self.batch_size)?;
        self.epochs = kv.get_or("epochs", self.epochs)?;
        self.base_lr = kv.get_or("lr", self.base_lr)?;
        self.halve_every = kv.get_or("halve_every", self.halve_every)?;
        self.alpha = kv.get_or("alpha", self.alpha)?;
        self.beta = kv.get_or("beta", self.beta)?;
        self.mode = kv.get_or("mode", self.mode)?;
        self.seed = kv.get_or("seed", self.seed)?;
        self.hidden = kv.get_or("hidden", self.hidden)?;
        self.latent = kv.get_or("latent", self.latent)?;
        self.decoder_init = kv.get_or("decoder_init", self.decoder_init)?;
        match kv.get_str("clip_norm") {
            None => {}
            Some("none") | Some("off") => self.clip_norm = None,
            Some(_) => self.clip_norm = kv.get("clip_norm")?,
        }
        self.adam.beta1 = kv.get_or("adam_beta1", self.adam.beta1)?;
        self.adam.beta2 = kv.get_or("adam_beta2", self.adam.beta2)?;
        self.adam.eps = kv.get_or("adam_eps", self.adam.eps)?;
        Ok(self)
    }

    pub fn from_kv(kv: &KvMap) -> Result<Self> {
        Self::default().apply_kv(kv)
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("k", self.k);
        kv.set("p", self.p);
        kv.set("batch_size", self.batch_size);
        kv.set("epochs", self.epochs);
        kv.set("lr", self.base_lr);
        kv.set("halve_every", self.halve_every);
        kv.set("alpha", self.alpha);
        kv.set("beta", self.beta);
        kv.set("mode", self.mode);
        kv.set("seed", self.seed);
        kv.set("hidden", self.hidden);
        kv.set("latent", self.latent);
        kv.set("decoder_init", self.decoder_init.as_str());
        kv.set("clip_norm", self.clip_norm.map_or("none".to_string(), |c| c.to_string()));
        kv.set("adam_beta1", self.adam.beta1);
        kv.set("adam_beta2", self.adam.beta2);
        kv.set("adam_eps", self.adam.eps);
        kv
    }
}

/// `base_lr * 0.5^floor(epoch / halve_every)`.
pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    let halvings = (epoch / cfg.halve_every.max(1)).min(i32::MAX as usize) as i32;
    cfg.base_lr * 0.5f64.powi(halvings)
}
