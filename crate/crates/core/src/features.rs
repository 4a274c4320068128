//! Numeric extraction, correlation ranking and column selection.

use std::cmp::Ordering;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::table::{NumericTable, RawTable};
use crate::{Error, Result};

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Keeps the columns whose every non-empty cell is a finite number. Gaps are
/// forward-filled; gaps before the first value become 0.
pub fn extract_numeric(table: &RawTable) -> Result<NumericTable> {
    if table.rows.is_empty() {
        return Err(Error::EmptyInput("table has no rows".into()));
    }
    let mut kept = Vec::new();
    'columns: for (j, name) in table.columns.iter().enumerate() {
        let mut values = Vec::with_capacity(table.rows.len());
        let mut last = 0.0;
        for row in &table.rows {
            let cell = row.get(j).map(String::as_str).unwrap_or("");
            if !cell.trim().is_empty() {
                match parse_number(cell) {
                    Some(v) => last = v,
                    None => continue 'columns,
                }
            }
            values.push(last);
        }
        kept.push((name.clone(), values));
    }
    NumericTable::with_rows(kept, table.rows.len())
}

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    debug_assert_eq!(x.len(), y.len());
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if x.is_empty() || constant(x) || constant(y) {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub column: String,
    pub score: f64,
}

/// Columns ordered by |correlation| with the target, strongest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub target: String,
    pub ranked: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn top(&self, k: usize) -> Vec<String> {
        self.ranked.iter().take(k).map(|r| r.column.clone()).collect()
    }
}

pub fn rank_by_correlation(table: &NumericTable, target: &str, k: usize) -> Result<FeatureRanking> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    let y = table
        .column(target)
        .ok_or_else(|| Error::Lookup(target.to_string()))?;
    if table.nrows() < 3 {
        return Err(Error::InsufficientRows {
            required: 3,
            available: table.nrows(),
        });
    }
    let mut ranked: Vec<RankedFeature> = table
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, name)| name.as_str() != target)
        .filter_map(|(i, name)| {
            pearson(table.column_at(i), y).map(|score| RankedFeature {
                column: name.clone(),
                score,
            })
        })
        .collect();
    ranked.sort_by(|a, b| match b.score.abs().total_cmp(&a.score.abs()) {
        Ordering::Equal => a.column.cmp(&b.column),
        other => other,
    });
    ranked.truncate(k);
    Ok(FeatureRanking {
        target: target.to_string(),
        ranked,
    })
}

/// Projection onto `names`, in the requested order.
pub fn select_features(table: &NumericTable, names: &[String]) -> Result<NumericTable> {
    let columns = names
        .iter()
        .map(|n| {
            table
                .column(n)
                .map(|v| (n.clone(), v.to_vec()))
                .ok_or_else(|| Error::Lookup(n.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    NumericTable::with_rows(columns, table.nrows())
}

/// The chosen inputs and target, handed from feature selection to windowing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureManifest {
    pub target: String,
    pub features: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ranking: Vec<RankedFeature>,
}

impl FeatureManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn raw(columns: &[&str], rows: &[&[&str]]) -> RawTable {
        RawTable::new(
            columns.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
    }

    fn numeric(cols: Vec<(&str, Vec<f64>)>) -> NumericTable {
        NumericTable::from_columns(cols.into_iter().map(|(n, v)| (n.to_string(), v)).collect())
            .unwrap()
    }

    #[test]
    fn text_columns_are_dropped() {
        let t = extract_numeric(&raw(&["gold", "hero_name"], &[&["1", "axe"], &["2", "axe"]])).unwrap();
        assert_eq!(t.columns(), ["gold"]);
        assert_eq!(t.column("gold").unwrap(), [1.0, 2.0]);
    }

    #[test]
    fn gaps_are_forward_filled() {
        let t = extract_numeric(&raw(&["a", "b"], &[&["5", ""], &["", "2"], &["7", ""]])).unwrap();
        assert_eq!(t.column("a").unwrap(), [5.0, 5.0, 7.0]);
        assert_eq!(t.column("b").unwrap(), [0.0, 2.0, 2.0]);
    }

    #[test]
    fn booleans_and_non_finite_text_are_not_numeric() {
        let t = extract_numeric(&raw(&["flag", "x"], &[&["true", "inf"], &["false", "1"]])).unwrap();
        assert_eq!(t.ncols(), 0);
        assert_eq!(t.nrows(), 2);
    }

    #[test]
    fn zero_rows_is_an_error() {
        assert!(matches!(
            extract_numeric(&raw(&["a"], &[])),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn self_copy_ranks_first_and_constants_are_excluded() {
        let t = numeric(vec![
            ("gold", vec![1.0, 4.0, 2.0, 8.0]),
            ("copy", vec![1.0, 4.0, 2.0, 8.0]),
            ("flat", vec![3.0; 4]),
            ("noise", vec![0.5, -1.0, 2.0, 0.0]),
        ]);
        let r = rank_by_correlation(&t, "gold", 10).unwrap();
        assert_eq!(r.ranked[0].column, "copy");
        assert!((r.ranked[0].score - 1.0).abs() < 1e-15);
        assert!(r.ranked.iter().all(|f| f.column != "flat" && f.column != "gold"));
        assert_eq!(r.ranked.len(), 2);
    }

    #[test]
    fn ranking_errors() {
        let t = numeric(vec![("a", vec![1.0, 2.0, 3.0])]);
        assert!(matches!(rank_by_correlation(&t, "zz", 1), Err(Error::Lookup(_))));
        assert!(matches!(rank_by_correlation(&t, "a", 0), Err(Error::Config(_))));
        let short = numeric(vec![("a", vec![1.0, 2.0]), ("b", vec![2.0, 1.0])]);
        assert!(matches!(
            rank_by_correlation(&short, "a", 1),
            Err(Error::InsufficientRows { .. })
        ));
        let flat = numeric(vec![("a", vec![1.0, 2.0, 3.0]), ("b", vec![2.0; 3])]);
        assert!(rank_by_correlation(&flat, "a", 3).unwrap().ranked.is_empty());
    }

    #[test]
    fn ties_break_by_name() {
        let t = numeric(vec![
            ("y", vec![1.0, 2.0, 3.0]),
            ("b", vec![2.0, 4.0, 6.0]),
            ("a", vec![-1.0, -2.0, -3.0]),
        ]);
        let r = rank_by_correlation(&t, "y", 5).unwrap();
        assert_eq!(r.top(2), ["a", "b"]);
    }

    #[test]
    fn selection() {
        let t = numeric(vec![("a", vec![1.0, 2.0]), ("b", vec![3.0, 4.0])]);
        let empty = select_features(&t, &[]).unwrap();
        assert_eq!((empty.ncols(), empty.nrows()), (0, 2));
        let all = select_features(&t, &t.columns().to_vec()).unwrap();
        assert_eq!(all, t);
        let swapped = select_features(&t, &["b".into(), "a".into()]).unwrap();
        assert_eq!(swapped.columns(), ["b", "a"]);
        assert!(matches!(select_features(&t, &["c".into()]), Err(Error::Lookup(_))));
    }

    /// Textbook single-pass formula, kept apart from the centered two-pass
    /// implementation above.
    fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..x.len() {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            syy += y[i] * y[i];
            sxy += x[i] * y[i];
        }
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn matches_direct_summation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let names = ["t", "a", "b", "c", "d"];
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|_| (0..40).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let t = numeric(names.iter().copied().zip(cols.clone()).collect());
        let r = rank_by_correlation(&t, "t", 3).unwrap();
        let mut expected: Vec<(String, f64)> = (1..5)
            .map(|i| (names[i].to_string(), pearson_oracle(&cols[i], &cols[0])))
            .collect();
        expected.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
        assert_eq!(r.ranked.len(), 3);
        for (got, (name, score)) in r.ranked.iter().zip(&expected) {
            assert_eq!(&got.column, name);
            assert!((got.score - score).abs() <= 1e-12, "{} vs {}", got.score, score);
        }
    }

    proptest! {
        #[test]
        fn extraction_is_idempotent(cells in proptest::collection::vec(
            proptest::collection::vec(prop_oneof![
                Just(String::new()),
                (-1e6f64..1e6).prop_map(|v| v.to_string()),
                "[a-z]{1,3}",
            ], 3), 1..12)) {
            let t = RawTable::new(vec!["a".into(), "b".into(), "c".into()], cells);
            let once = extract_numeric(&t).unwrap();
            let twice = extract_numeric(&once.to_raw()).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn pearson_affine_invariance(
            x in proptest::collection::vec(-100.0f64..100.0, 5..30),
            scale in 0.1f64..10.0, shift in -50.0f64..50.0, seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y: Vec<f64> = x.iter().map(|v| v * 0.3 + rng.random_range(-20.0..20.0)).collect();
            if let Some(base) = pearson(&x, &y) {
                let xt: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
                let yt: Vec<f64> = y.iter().map(|v| scale * v - shift).collect();
                let xn: Vec<f64> = x.iter().map(|v| -v).collect();
                prop_assert!((pearson(&xt, &y).unwrap() - base).abs() < 1e-9);
                prop_assert!((pearson(&x, &yt).unwrap() - base).abs() < 1e-9);
                prop_assert!((pearson(&xn, &y).unwrap() + base).abs() < 1e-9);
            }
        }

        #[test]
        fn large_k_returns_every_eligible_column(ncols in 1usize..6, k_extra in 0usize..4) {
            let cols: Vec<(String, Vec<f64>)> = (0..=ncols)
                .map(|j| (format!("c{j}"), (0..6).map(|i| ((i * (j + 2)) % 7) as f64 + j as f64).collect()))
                .collect();
            let t = NumericTable::from_columns(cols).unwrap();
            let eligible = (1..=ncols).filter(|&j| pearson(t.column_at(j), t.column_at(0)).is_some()).count();
            let r = rank_by_correlation(&t, "c0", ncols + k_extra).unwrap();
            prop_assert_eq!(r.ranked.len(), eligible);
        }
    }
}
