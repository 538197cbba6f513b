//! Rank grids: per-mode lists expanded as a cartesian product.
//!
//! Syntax is one list per mode separated by `;`, each list a comma-separated
//! mix of integers and inclusive ranges `a-b` or stepped ranges `a-b:s`:
//! `"1-20;1,2,4,8"`. With `tie`, the first list drives both of the first two
//! modes (`R_1 = R_2`) and the string lists the remaining modes after it.

use mcca::{MccaError, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankGrid {
    points: Vec<Vec<usize>>,
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    let bad = || MccaError::InvalidRanks(format!("cannot parse rank list '{s}'"));
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (range, step) = match item.split_once(':') {
            Some((r, st)) => (r, st.trim().parse::<usize>().map_err(|_| bad())?),
            None => (item, 1),
        };
        if step == 0 {
            return Err(bad());
        }
        match range.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend((a..=b).step_by(step));
            }
            None => out.push(range.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

impl RankGrid {
    pub fn parse(spec: &str, tie: bool) -> Result<Self> {
        let mut lists = spec.split(';').map(parse_list).collect::<Result<Vec<_>>>()?;
        if tie {
            let first = lists[0].clone();
            lists.insert(1, first);
        }
        Ok(Self::cartesian(&lists, tie))
    }

    /// A grid with a single rank tuple.
    pub fn single(ranks: Vec<usize>) -> Self {
        Self { points: vec![ranks] }
    }

    fn cartesian(lists: &[Vec<usize>], tie: bool) -> Self {
        let mut points: Vec<Vec<usize>> = vec![Vec::new()];
        for (k, list) in lists.iter().enumerate() {
            if tie && k == 1 {
                points.iter_mut().for_each(|p| p.push(p[0]));
                continue;
            }
            points = points
                .into_iter()
                .flat_map(|p| {
                    list.iter().map(move |&r| {
                        let mut q = p.clone();
                        q.push(r);
                        q
                    })
                })
                .collect();
        }
        Self { points }
    }

    pub fn points(&self) -> &[Vec<usize>] {
        &self.points
    }

    pub fn n_modes(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Checks every point against the dataset shape.
    pub fn validate(&self, shape: &[usize]) -> Result<()> {
        Self::validate_points(&self.points, shape)
    }

    pub(crate) fn validate_points(points: &[Vec<usize>], shape: &[usize]) -> Result<()> {
        for p in points {
            if p.len() != shape.len() {
                return Err(MccaError::InvalidRanks(format!(
                    "grid point {p:?} has {} modes, data has {}",
                    p.len(),
                    shape.len()
                )));
            }
            if let Some((k, _)) = p.iter().zip(shape).enumerate().find(|(_, (&r, &s))| r == 0 || r > s) {
                return Err(MccaError::InvalidRanks(format!(
                    "grid point {p:?} exceeds shape {shape:?} in mode {}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}
