//! Lagged, multi-step-ahead supervised dataset construction.
//!
//! With lag `L`, horizon `d`, `p` features and `n` raw rows, sample `k`
//! (0-based) concatenates raw rows `k..k+L` oldest first, and its label is the
//! target at raw row `k + L - 1 + d`. There are `n - L - d + 1` samples.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::table::NumericTable;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Number of consecutive raw rows joined into one sample (`L`).
    pub lag: usize,
    /// Steps between the window's last row and the label (`d`).
    pub horizon: usize,
    pub features: Vec<String>,
    pub target: String,
}

impl WindowConfig {
    pub fn new(lag: usize, horizon: usize, features: Vec<String>, target: impl Into<String>) -> Self {
        Self {
            lag,
            horizon,
            features,
            target: target.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lag == 0 || self.horizon == 0 {
            return Err(Error::Config(format!(
                "lag and horizon must be >= 1 (L={}, d={})",
                self.lag, self.horizon
            )));
        }
        if self.features.is_empty() {
            return Err(Error::Config("no input features".into()));
        }
        Ok(())
    }

    pub fn target_in_features(&self) -> bool {
        self.features.contains(&self.target)
    }

    /// Rows needed for a single sample.
    pub fn min_rows(&self) -> usize {
        self.lag + self.horizon
    }

    pub fn width(&self) -> usize {
        self.lag * self.features.len()
    }

    /// Column headers of a flattened sample: `f<j>_lag<i>`, where `i` counts
    /// back from the newest row of the window (lag 0).
    pub fn column_names(&self) -> Vec<String> {
        let p = self.features.len();
        (0..self.lag)
            .flat_map(|pos| (0..p).map(move |j| format!("f{j}_lag{}", self.lag - 1 - pos)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub session_id: Option<String>,
    pub config: WindowConfig,
    pub raw_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisedDataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub provenance: Provenance,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Writes `X.csv`, `y.csv` and `provenance.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut xw = csv::Writer::from_path(dir.join("X.csv"))?;
        xw.write_record(self.provenance.config.column_names())?;
        for row in self.x.rows() {
            xw.write_record(row.iter().map(f64::to_string))?;
        }
        xw.flush().map_err(|e| Error::io(dir.join("X.csv"), e))?;

        let mut yw = csv::Writer::from_path(dir.join("y.csv"))?;
        yw.write_record([&self.provenance.config.target])?;
        for v in &self.y {
            yw.write_record([v.to_string()])?;
        }
        yw.flush().map_err(|e| Error::io(dir.join("y.csv"), e))?;

        let prov = serde_json::to_string_pretty(&self.provenance)?;
        let path = dir.join("provenance.json");
        fs::write(&path, prov).map_err(|e| Error::io(&path, e))
    }
}

fn resolve(table: &NumericTable, cfg: &WindowConfig) -> Result<(Vec<usize>, usize)> {
    cfg.validate()?;
    let features = cfg
        .features
        .iter()
        .map(|f| table.position(f).ok_or_else(|| Error::Lookup(f.clone())))
        .collect::<Result<Vec<_>>>()?;
    let target = table
        .position(&cfg.target)
        .ok_or_else(|| Error::Lookup(cfg.target.clone()))?;
    Ok((features, target))
}

pub fn build_dataset(table: &NumericTable, cfg: &WindowConfig) -> Result<SupervisedDataset> {
    build_dataset_for(table, cfg, None)
}

pub fn build_dataset_for(
    table: &NumericTable,
    cfg: &WindowConfig,
    session_id: Option<String>,
) -> Result<SupervisedDataset> {
    let (features, target) = resolve(table, cfg)?;
    let n = table.nrows();
    if n < cfg.min_rows() {
        return Err(Error::InsufficientRows {
            required: cfg.min_rows(),
            available: n,
        });
    }
    let (lag, p) = (cfg.lag, features.len());
    let samples = n - lag - cfg.horizon + 1;
    let mut x = Array2::<f64>::zeros((samples, lag * p));
    for (k, mut row) in x.rows_mut().into_iter().enumerate() {
        for pos in 0..lag {
            for (j, &col) in features.iter().enumerate() {
                row[pos * p + j] = table.value(k + pos, col);
            }
        }
    }
    let labels = table.column_at(target);
    let y = Array1::from_iter((0..samples).map(|k| labels[k + lag - 1 + cfg.horizon]));
    Ok(SupervisedDataset {
        x,
        y,
        provenance: Provenance {
            session_id,
            config: cfg.clone(),
            raw_rows: n,
        },
    })
}

/// The last `L` rows flattened like a dataset row: the input for forecasting
/// `d` steps past the end of the data.
pub fn latest_window(table: &NumericTable, cfg: &WindowConfig) -> Result<Vec<f64>> {
    let (features, _) = resolve(table, cfg)?;
    let n = table.nrows();
    if n < cfg.lag {
        return Err(Error::InsufficientRows {
            required: cfg.lag,
            available: n,
        });
    }
    let start = n - cfg.lag;
    Ok((start..n)
        .flat_map(|r| features.iter().map(move |&c| table.value(r, c)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn table(ncols: usize, values: impl Fn(usize, usize) -> f64, nrows: usize) -> NumericTable {
        NumericTable::from_columns(
            (0..ncols)
                .map(|j| (format!("c{j}"), (0..nrows).map(|r| values(r, j)).collect()))
                .collect(),
        )
        .unwrap()
    }

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|j| format!("c{j}")).collect()
    }

    /// 1-based nested-loop construction straight from the sample/label table.
    fn brute_force(t: &NumericTable, cfg: &WindowConfig) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = t.nrows();
        let (l, d) = (cfg.lag, cfg.horizon);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut k = 1;
        while k + l - 1 + d <= n {
            let mut row = Vec::new();
            for r in k..=k + l - 1 {
                for f in &cfg.features {
                    row.push(t.column(f).unwrap()[r - 1]);
                }
            }
            xs.push(row);
            ys.push(t.column(&cfg.target).unwrap()[k + l - 1 + d - 1]);
            k += 1;
        }
        (xs, ys)
    }

    #[test]
    fn smallest_window() {
        let t = NumericTable::from_columns(vec![("g".into(), vec![10.0, 20.0, 30.0])]).unwrap();
        let cfg = WindowConfig::new(1, 1, vec!["g".into()], "g");
        let ds = build_dataset(&t, &cfg).unwrap();
        assert_eq!(ds.x, ndarray::array![[10.0], [20.0]]);
        assert_eq!(ds.y.to_vec(), vec![20.0, 30.0]);
    }

    #[test]
    fn worked_shape() {
        let t = table(10, |r, j| (r * 10 + j) as f64, 3849);
        let cfg = WindowConfig::new(7, 10, names(10), "c0");
        let ds = build_dataset(&t, &cfg).unwrap();
        assert_eq!(ds.x.dim(), (3833, 70));
        assert_eq!(ds.y.len(), 3833);
    }

    #[test]
    fn random_table_matches_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let t = table(4, |_, _| 0.0, 20);
        let t = NumericTable::from_columns(
            t.columns()
                .iter()
                .map(|c| (c.clone(), (0..20).map(|_| rng.random_range(-5.0..5.0)).collect()))
                .collect(),
        )
        .unwrap();
        let cfg = WindowConfig::new(3, 2, names(4), "c2");
        let ds = build_dataset(&t, &cfg).unwrap();
        let (xs, ys) = brute_force(&t, &cfg);
        assert_eq!(ds.x.nrows(), xs.len());
        for (k, row) in xs.iter().enumerate() {
            assert_eq!(ds.x.row(k).to_vec(), *row);
        }
        assert_eq!(ds.y.to_vec(), ys);
    }

    #[test]
    fn insufficient_rows_reports_minimum() {
        let t = table(2, |r, _| r as f64, 5);
        let cfg = WindowConfig::new(3, 3, names(2), "c0");
        match build_dataset(&t, &cfg) {
            Err(Error::InsufficientRows { required, available }) => {
                assert_eq!((required, available), (6, 5))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            latest_window(&table(2, |r, _| r as f64, 2), &cfg),
            Err(Error::InsufficientRows { required: 3, .. })
        ));
    }

    #[test]
    fn invalid_config() {
        let t = table(2, |r, _| r as f64, 10);
        assert!(matches!(
            build_dataset(&t, &WindowConfig::new(0, 1, names(2), "c0")),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_dataset(&t, &WindowConfig::new(1, 1, vec!["nope".into()], "c0")),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn latest_window_boundaries() {
        let cfg = WindowConfig::new(3, 2, names(2), "c0");
        let t = table(2, |r, j| (r * 2 + j) as f64, 3);
        assert_eq!(latest_window(&t, &cfg).unwrap(), vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        let longer = table(2, |r, j| (r * 2 + j) as f64, 4);
        let a = latest_window(&t, &cfg).unwrap();
        let b = latest_window(&longer, &cfg).unwrap();
        assert_eq!(&a[2..], &b[..4]);
        assert_eq!(&b[4..], &[6.0, 7.0]);
    }

    #[test]
    fn latest_window_is_the_last_sample_of_an_extended_table() {
        // Appending `d` rows makes the current tail the inputs of the last sample.
        let cfg = WindowConfig::new(4, 3, names(3), "c1");
        let t = table(3, |r, j| (r as f64).sin() * 10.0 + j as f64, 12);
        let extended = table(3, |r, j| (r as f64).sin() * 10.0 + j as f64, 15);
        let ds = build_dataset(&extended, &cfg).unwrap();
        assert_eq!(
            ds.x.row(ds.x.nrows() - 1).to_vec(),
            latest_window(&t, &cfg).unwrap()
        );
    }

    #[test]
    fn headers_name_feature_and_lag() {
        let cfg = WindowConfig::new(2, 1, names(2), "c0");
        assert_eq!(cfg.column_names(), ["f0_lag1", "f1_lag1", "f0_lag0", "f1_lag0"]);
    }

    proptest! {
        #[test]
        fn window_invariants(nrow in 2usize..50, p in 1usize..5, lag in 1usize..6, horizon in 1usize..6) {
            prop_assume!(nrow >= lag + horizon);
            // Each cell encodes its own (row, col) so provenance can be read back.
            let t = table(p, |r, j| (r * 100 + j) as f64, nrow);
            let cfg = WindowConfig::new(lag, horizon, names(p), "c0");
            let ds = build_dataset(&t, &cfg).unwrap();
            let samples = nrow - lag - horizon + 1;
            prop_assert_eq!(ds.x.dim(), (samples, lag * p));
            prop_assert_eq!(ds.y.len(), samples);
            for k in 0..samples {
                for c in 0..lag * p {
                    let v = ds.x[[k, c]] as usize;
                    prop_assert_eq!((v / 100, v % 100), (k + c / p, c % p));
                }
                prop_assert_eq!(ds.y[k] as usize / 100, k + lag - 1 + horizon);
                if k + 1 < samples {
                    let cur = ds.x.row(k);
                    let next = ds.x.row(k + 1);
                    prop_assert_eq!(&next.as_slice().unwrap()[..(lag - 1) * p], &cur.as_slice().unwrap()[p..]);
                }
            }
            if nrow > lag + horizon {
                let longer = build_dataset(&t, &WindowConfig::new(lag, horizon + 1, names(p), "c0")).unwrap();
                prop_assert_eq!(longer.len(), samples - 1);
                let wider = build_dataset(&t, &WindowConfig::new(lag + 1, horizon, names(p), "c0")).unwrap();
                prop_assert_eq!(wider.len(), samples - 1);
            }
        }
    }
}
