use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Token-selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "adaptprune")]
    AdaptPrune,
    #[serde(rename = "fastv_topk")]
    FastvTopk,
    #[serde(rename = "fitprune_single")]
    FitpruneSingle,
    #[serde(rename = "skip")]
    Skip,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "random_3x3")]
    Random3x3,
    #[serde(rename = "maxpool_3x3")]
    Maxpool3x3,
    #[serde(rename = "avgpool_3x3")]
    Avgpool3x3,
    #[serde(rename = "last_fraction")]
    LastFraction,
}

impl Strategy {
    pub const ALL: [Strategy; 9] = [
        Strategy::AdaptPrune,
        Strategy::FastvTopk,
        Strategy::FitpruneSingle,
        Strategy::Skip,
        Strategy::Random,
        Strategy::Random3x3,
        Strategy::Maxpool3x3,
        Strategy::Avgpool3x3,
        Strategy::LastFraction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AdaptPrune => "adaptprune",
            Strategy::FastvTopk => "fastv_topk",
            Strategy::FitpruneSingle => "fitprune_single",
            Strategy::Skip => "skip",
            Strategy::Random => "random",
            Strategy::Random3x3 => "random_3x3",
            Strategy::Maxpool3x3 => "maxpool_3x3",
            Strategy::Avgpool3x3 => "avgpool_3x3",
            Strategy::LastFraction => "last_fraction",
        }
    }

    pub fn needs_seed(self) -> bool {
        matches!(self, Strategy::Random | Strategy::Random3x3)
    }

    /// Strategies that honour `gaussian_enabled` at all.
    pub fn supports_correction(self) -> bool {
        matches!(self, Strategy::AdaptPrune | Strategy::FastvTopk)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let found = match key.as_str() {
            "fastv" | "topk" => Some(Strategy::FastvTopk),
            "fitprune" => Some(Strategy::FitpruneSingle),
            "last" => Some(Strategy::LastFraction),
            other => Strategy::ALL.into_iter().find(|st| st.name() == other),
        };
        found.ok_or_else(|| {
            let valid = Strategy::ALL.map(Strategy::name).join(", ");
            Error::validation(
                "strategy",
                format!("unknown strategy {s:?}; valid names: {valid}, fastv"),
            )
        })
    }
}

/// Width of the Gaussian correction mask, in patches.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum GaussianSigma {
    /// `max(H, W) / 3`, evaluated per sub-image.
    #[default]
    Auto,
    Fixed(f64),
}

impl GaussianSigma {
    pub fn resolve(self, height: u32, width: u32) -> f64 {
        match self {
            GaussianSigma::Auto => f64::from(height.max(width)) / 3.0,
            GaussianSigma::Fixed(s) => s,
        }
    }
}

impl fmt::Display for GaussianSigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaussianSigma::Auto => f.write_str("auto"),
            GaussianSigma::Fixed(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for GaussianSigma {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GaussianSigma::Auto);
        }
        let v: f64 = s.parse().map_err(|_| {
            Error::validation(
                "gaussian_sigma",
                format!("expected a number or \"auto\", got {s:?}"),
            )
        })?;
        Ok(GaussianSigma::Fixed(v))
    }
}

impl Serialize for GaussianSigma {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            GaussianSigma::Auto => serializer.serialize_str("auto"),
            GaussianSigma::Fixed(s) => serializer.serialize_f64(*s),
        }
    }
}

impl<'de> Deserialize<'de> for GaussianSigma {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Number(v) => Ok(GaussianSigma::Fixed(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// All knobs of the pruning engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneConfig {
    /// Spatial decay width, patches.
    pub sigma_d: f64,
    /// Similarity decay width, dimensionless.
    pub sigma_s: f64,
    /// Fraction of tokens retained, in (0, 1].
    pub keep_fraction: f64,
    pub gaussian_sigma: GaussianSigma,
    /// Gaussian correction switch; honoured by adaptprune and fastv_topk.
    pub gaussian_enabled: bool,
    pub similarity_enabled: bool,
    /// Suppression radius as a multiple of `sigma_d`; `None` suppresses the whole sub-image.
    pub cutoff_multiplier: Option<f64>,
    pub strategy: Strategy,
    pub seed: Option<u64>,
    /// Record a per-iteration trace (adaptive NMS only).
    pub trace: bool,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            sigma_d: 2.0,
            sigma_s: 0.5,
            keep_fraction: 0.1,
            gaussian_sigma: GaussianSigma::Auto,
            gaussian_enabled: true,
            similarity_enabled: true,
            cutoff_multiplier: Some(3.0),
            strategy: Strategy::AdaptPrune,
            seed: None,
            trace: false,
        }
    }
}

impl PruneConfig {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_keep(mut self, keep_fraction: f64) -> Self {
        self.keep_fraction = keep_fraction;
        self
    }

    /// Effective correction switch for the configured strategy.
    pub fn correction_enabled(&self) -> bool {
        self.strategy.supports_correction() && self.gaussian_enabled
    }

    /// Number of retained tokens for a grid of `n_tokens`: `max(1, round(keep × n))`.
    pub fn keep_count(&self, n_tokens: usize) -> usize {
        keep_count(self.keep_fraction, n_tokens)
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_common()?;
        if let Some(m) = self.cutoff_multiplier {
            if !(m >= 1.0 && m.is_finite()) {
                return Err(Error::validation(
                    "cutoff_multiplier",
                    format!("must be >= 1, got {m}"),
                ));
            }
        }
        Ok(())
    }

    /// Like [`validate`](Self::validate) but admits any positive cutoff multiplier.
    pub(crate) fn validate_common(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(
                    name,
                    format!("must be positive and finite, got {v}"),
                ))
            }
        };
        positive("sigma_d", self.sigma_d)?;
        positive("sigma_s", self.sigma_s)?;
        if let GaussianSigma::Fixed(s) = self.gaussian_sigma {
            positive("gaussian_sigma", s)?;
        }
        if !(self.keep_fraction > 0.0 && self.keep_fraction <= 1.0) {
            return Err(Error::validation(
                "keep_fraction",
                format!("must lie in (0, 1], got {}", self.keep_fraction),
            ));
        }
        if let Some(m) = self.cutoff_multiplier {
            positive("cutoff_multiplier", m)?;
        }
        if self.strategy.needs_seed() && self.seed.is_none() {
            return Err(Error::validation(
                "seed",
                format!(
                    "strategy {} is randomized and requires a seed",
                    self.strategy
                ),
            ));
        }
        Ok(())
    }
}

pub fn keep_count(keep_fraction: f64, n_tokens: usize) -> usize {
    let n = (keep_fraction * n_tokens as f64).round() as usize;
    n.clamp(1, n_tokens.max(1))
}
