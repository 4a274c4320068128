//! Parameter sweeps: `d=30..100:10` (inclusive, step defaults to 1) or
//! `L=5,10,20`. Several sweeps combine as a cartesian product.

use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKey {
    Lag,
    Horizon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub key: GridKey,
    pub values: Vec<usize>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (key, spec) = s.split_once('=').ok_or_else(|| format!("grid `{s}` is not KEY=VALUES"))?;
        let key = match key.trim() {
            "L" | "l" | "lag" => GridKey::Lag,
            "d" | "D" | "horizon" => GridKey::Horizon,
            other => return Err(format!("unknown grid key `{other}` (expected L or d)")),
        };
        let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad number `{t}` in grid `{s}`: {e}"));
        let values = if let Some((start, rest)) = spec.split_once("..") {
            let (end, step) = match rest.split_once(':') {
                Some((end, step)) => (num(end)?, num(step)?),
                None => (num(rest)?, 1),
            };
            let start = num(start)?;
            if step == 0 || end < start {
                return Err(format!("grid `{s}` needs start <= end and a positive step"));
            }
            (start..=end).step_by(step).collect()
        } else {
            spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        if values.is_empty() || values.contains(&0) {
            return Err(format!("grid `{s}` must list positive values"));
        }
        Ok(Grid { key, values })
    }
}

/// Every `(L, d)` pair, sweeps varying fastest from the last one given.
pub fn expand(lag: usize, horizon: usize, grids: &[Grid]) -> Vec<(usize, usize)> {
    grids.iter().fold(vec![(lag, horizon)], |acc, g| {
        acc.iter()
            .flat_map(|&(l, d)| {
                g.values.iter().map(move |&v| match g.key {
                    GridKey::Lag => (v, d),
                    GridKey::Horizon => (l, v),
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_with_step() {
        let g: Grid = "d=30..100:10".parse().unwrap();
        assert_eq!(g.key, GridKey::Horizon);
        assert_eq!(g.values, vec![30, 40, 50, 60, 70, 80, 90, 100]);
        assert_eq!(expand(15, 20, &[g]).len(), 8);
    }

    #[test]
    fn lists_and_products() {
        let l: Grid = "L=5,20".parse().unwrap();
        let d: Grid = "d=2..3".parse().unwrap();
        assert_eq!(expand(1, 1, &[l, d]), vec![(5, 2), (5, 3), (20, 2), (20, 3)]);
        assert_eq!(expand(7, 9, &[]), vec![(7, 9)]);
    }

    #[test]
    fn rejects_nonsense() {
        for bad in ["d", "x=1", "d=5..1", "d=1..5:0", "d=0", "d=a"] {
            assert!(bad.parse::<Grid>().is_err(), "{bad}");
        }
    }
}
