//! The three forecasters, their shared training loop, and the report they
//! produce.

pub mod adam;
pub mod lstm;
pub mod metrics;
pub mod mlp;
pub mod network;
pub mod ols;
pub mod report;
pub mod split;
pub mod standardize;
mod train;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

pub use adam::{adam_step, AdamConfig, AdamMoments};
pub use lstm::{reshape_sequences, Lstm, LstmArch};
pub use metrics::{adjusted_r2, mse, r2};
pub use mlp::{Mlp, MlpArch};
pub use network::{gradient_check, BatchStats, Network};
pub use ols::{fit_ols, LinearModel};
pub use report::{EpochLoss, Forecast, TrainingReport};
pub use split::{split, DataSplit, SplitMode, SplitSpec};
pub use standardize::Standardizer;
pub use train::{fit_network, train};

use crate::session::write_atomic;
use crate::windowing::WindowConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Nn,
    Lstm,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Lr, ModelKind::Nn, ModelKind::Lstm];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Nn => "nn",
            ModelKind::Lstm => "lstm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "linear" => Ok(ModelKind::Lr),
            "nn" | "mlp" => Ok(ModelKind::Nn),
            "lstm" => Ok(ModelKind::Lstm),
            other => Err(Error::Config(format!("unknown model kind `{other}` (expected lr, nn or lstm)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub split: SplitSpec,
    pub mlp: MlpArch,
    pub lstm: LstmArch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 64,
            adam: AdamConfig::default(),
            seed: 0,
            split: SplitSpec::default(),
            mlp: MlpArch::default(),
            lstm: LstmArch::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        let a = &self.adam;
        if !(a.learning_rate > 0.0 && a.epsilon > 0.0 && (0.0..1.0).contains(&a.beta1) && (0.0..1.0).contains(&a.beta2)) {
            return Err(Error::Config("Adam needs lr > 0, eps > 0 and betas in [0, 1)".into()));
        }
        self.mlp.validate()?;
        self.lstm.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    Lr(LinearModel),
    Nn(Mlp),
    Lstm(Lstm),
}

impl Estimator {
    pub fn kind(&self) -> ModelKind {
        match self {
            Estimator::Lr(_) => ModelKind::Lr,
            Estimator::Nn(_) => ModelKind::Nn,
            Estimator::Lstm(_) => ModelKind::Lstm,
        }
    }

    /// Predictions in standardized target units.
    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self {
            Estimator::Lr(m) => m.predict(x).to_vec(),
            Estimator::Nn(m) => m.predict(x),
            Estimator::Lstm(m) => m.predict(x),
        }
    }

    /// `(trainable, non-trainable)` parameter counts.
    pub fn parameter_counts(&self) -> (usize, usize) {
        match self {
            Estimator::Lr(m) => (m.weights.len() + 1, 0),
            Estimator::Nn(m) => (m.n_params(), m.non_trainable_count()),
            Estimator::Lstm(m) => (m.n_params(), 0),
        }
    }
}

pub const MODEL_FORMAT: &str = "gsicast-model";
pub const MODEL_VERSION: u32 = 1;

/// A fitted estimator bundled with everything needed to forecast from raw
/// windows: the window layout and both standardizers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format: String,
    pub version: u32,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub x_scaler: Standardizer,
    pub y_scaler: Standardizer,
    pub estimator: Estimator,
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.estimator.kind()
    }

    /// Predictions in original target units for raw (unstandardized) rows.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.x_scaler.width() {
            return Err(Error::Shape(format!(
                "model expects {} columns, got {}",
                self.x_scaler.width(),
                x.ncols()
            )));
        }
        let xs = self.x_scaler.apply(x);
        Ok(self
            .estimator
            .predict(xs.view())
            .into_iter()
            .map(|v| self.y_scaler.inverse_scalar(v))
            .collect())
    }

    /// Target value `horizon` rows past the end of `window`, in original units.
    pub fn forecast(&self, window: &[f64]) -> Result<f64> {
        let x = ArrayView2::from_shape((1, window.len()), window).map_err(|e| Error::Shape(e.to_string()))?;
        Ok(self.predict(x)?[0])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: TrainedModel = serde_json::from_str(text)?;
        if model.format != MODEL_FORMAT || model.version != MODEL_VERSION {
            return Err(Error::Structure(format!(
                "unsupported model archive {} v{}",
                model.format, model.version
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing() {
        assert_eq!("LSTM".parse::<ModelKind>().unwrap(), ModelKind::Lstm);
        assert_eq!("linear".parse::<ModelKind>().unwrap(), ModelKind::Lr);
        assert!("svm".parse::<ModelKind>().is_err());
        assert_eq!(serde_json::to_string(&ModelKind::Nn).unwrap(), "\"nn\"");
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
    }
}
