//! One training run end to end: session CSV, numeric extraction, feature
//! choice, windowing, fit, forecast.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::features::{extract_numeric, rank_by_correlation, FeatureManifest};
use crate::gsi::TARGET_COLUMN;
use crate::models::{train, Forecast, ModelKind, TrainConfig, TrainedModel, TrainingReport};
use crate::table::{NumericTable, RawTable};
use crate::windowing::{build_dataset_for, latest_window, SupervisedDataset, WindowConfig};
use crate::{Error, Result};

/// Rows required beyond `L + d` before a session is worth training on.
pub const MIN_EXTRA_ROWS: usize = 10;

pub const FEATURES_FILE: &str = "features.json";
pub const REPORT_FILE: &str = "report.json";
pub const SERIES_FILE: &str = "series.csv";
pub const MODEL_FILE: &str = "model.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum FeatureMode {
    /// The target itself plus its `k - 1` strongest correlates.
    Ranked { k: usize },
    /// An explicit ordered list.
    Fixed { features: Vec<String> },
}

impl Default for FeatureMode {
    fn default() -> Self {
        FeatureMode::Ranked { k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetRequest {
    pub lag: usize,
    pub horizon: usize,
    pub target: String,
    pub features: FeatureMode,
}

impl Default for DatasetRequest {
    fn default() -> Self {
        Self {
            lag: 15,
            horizon: 20,
            target: TARGET_COLUMN.to_string(),
            features: FeatureMode::default(),
        }
    }
}

impl DatasetRequest {
    pub fn new(lag: usize, horizon: usize) -> Self {
        Self {
            lag,
            horizon,
            ..Self::default()
        }
    }

    /// Minimum session length accepted for training.
    pub fn min_training_rows(&self) -> usize {
        self.lag + self.horizon + MIN_EXTRA_ROWS
    }

    pub fn check_training_rows(&self, available: usize) -> Result<()> {
        let required = self.min_training_rows();
        if available < required {
            return Err(Error::InsufficientRows { required, available });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub manifest: FeatureManifest,
    pub window: WindowConfig,
    pub dataset: SupervisedDataset,
}

pub fn load_numeric(csv_path: &Path) -> Result<NumericTable> {
    extract_numeric(&RawTable::read_csv(csv_path)?)
}

pub fn choose_features(table: &NumericTable, target: &str, mode: &FeatureMode) -> Result<FeatureManifest> {
    match mode {
        FeatureMode::Ranked { k: 0 } => Err(Error::Config("feature count must be at least 1".into())),
        FeatureMode::Ranked { k } => {
            if table.column(target).is_none() {
                return Err(Error::Lookup(target.to_string()));
            }
            let ranking = if *k > 1 {
                rank_by_correlation(table, target, k - 1)?.ranked
            } else {
                Vec::new()
            };
            let features = std::iter::once(target.to_string())
                .chain(ranking.iter().map(|r| r.column.clone()))
                .collect();
            Ok(FeatureManifest {
                target: target.to_string(),
                features,
                ranking,
            })
        }
        FeatureMode::Fixed { features } => {
            if features.is_empty() {
                return Err(Error::Config("fixed feature list is empty".into()));
            }
            for f in features.iter().chain(std::iter::once(&target.to_string())) {
                if table.column(f).is_none() {
                    return Err(Error::Lookup(f.clone()));
                }
            }
            Ok(FeatureManifest {
                target: target.to_string(),
                features: features.clone(),
                ranking: Vec::new(),
            })
        }
    }
}

pub fn prepare(table: &NumericTable, req: &DatasetRequest, session_id: Option<String>) -> Result<PreparedDataset> {
    if req.lag == 0 || req.horizon == 0 {
        return Err(Error::Config("L and d must both be at least 1".into()));
    }
    let manifest = choose_features(table, &req.target, &req.features)?;
    let window = WindowConfig::new(req.lag, req.horizon, manifest.features.clone(), req.target.clone());
    let dataset = build_dataset_for(table, &window, session_id)?;
    Ok(PreparedDataset {
        manifest,
        window,
        dataset,
    })
}

impl PreparedDataset {
    /// `X.csv`, `y.csv`, `provenance.json` and `features.json` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.dataset.write(dir)?;
        self.manifest.write(&dir.join(FEATURES_FILE))
    }
}

/// Trains `kind` on `table` and fills in the d-step forecast from the
/// newest window.
pub fn run(
    table: &NumericTable,
    req: &DatasetRequest,
    kind: ModelKind,
    cfg: &TrainConfig,
    session_id: Option<String>,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<(TrainedModel, TrainingReport)> {
    req.check_training_rows(table.nrows())?;
    let prepared = prepare(table, req, session_id)?;
    let (model, mut report) = train(kind, &prepared.dataset, cfg, progress)?;
    let window = latest_window(table, &prepared.window)?;
    report.forecast = Some(Forecast {
        horizon: req.horizon,
        value: model.forecast(&window)?,
    });
    Ok((model, report))
}

/// `report.json`, `series.csv` and `model.json` under `dir`.
pub fn write_outputs(dir: &Path, model: &TrainedModel, report: &TrainingReport) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    report.write(&dir.join(REPORT_FILE))?;
    report.write_series(&dir.join(SERIES_FILE))?;
    model.save(&dir.join(MODEL_FILE))
}
