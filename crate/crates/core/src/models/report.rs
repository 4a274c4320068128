use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelKind, TrainConfig};
use crate::session::write_atomic;
use crate::windowing::WindowConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    /// Mean squared error in standardized target units.
    pub train_loss: f64,
    pub test_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forecast {
    /// Rows ahead of the newest raw row.
    pub horizon: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub model: ModelKind,
    pub session_id: Option<String>,
    pub r2: f64,
    /// `None` when the test set is too small for the predictor count.
    pub adjusted_r2: Option<f64>,
    /// Headline accuracy: adjusted R² for the linear model, R² otherwise.
    pub score: f64,
    pub test_mse: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub predictors: usize,
    pub trainable_params: usize,
    pub non_trainable_params: usize,
    pub rank_deficient: bool,
    pub window: WindowConfig,
    pub train: TrainConfig,
    pub epochs: Vec<EpochLoss>,
    pub predictions: Vec<f64>,
    pub actuals: Vec<f64>,
    pub forecast: Option<Forecast>,
}

impl TrainingReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Two-column `actual,predicted` CSV of the test series.
    pub fn series_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["actual", "predicted"])?;
        for (a, p) in self.actuals.iter().zip(&self.predictions) {
            w.write_record([a.to_string(), p.to_string()])?;
        }
        w.into_inner().map_err(|e| Error::Structure(e.to_string()))
    }

    pub fn write_series(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.series_csv()?)
    }
}
