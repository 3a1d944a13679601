//! Rectangular linear assignment by shortest augmenting paths.
//!
//! Every row of an `n x m` cost matrix (`n <= m`) is matched to a distinct
//! column with minimum total cost. Dual potentials are kept for rows and
//! columns; each row insertion runs one Dijkstra-like search over reduced
//! costs, so the whole solve is `O(n^2 m)`.

use crate::error::{invalid, Result};

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return invalid(format!("expected {} entries for a {rows}x{cols} matrix, got {}", rows * cols, data.len()));
        }
        if let Some(bad) = data.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return invalid(format!("costs must be finite and nonnegative, found {bad}"));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> f64>(rows: usize, cols: usize, mut f: F) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return invalid("ragged cost matrix");
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

/// An injective assignment of rows to columns and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Matching {
    /// `assignment[i]` is the column matched to row `i`.
    pub assignment: Vec<usize>,
    pub cost: f64,
}

const NONE: usize = usize::MAX;

/// Minimum-cost injective assignment of all rows into distinct columns.
pub fn assignment_solve(cost: &CostMatrix) -> Result<Matching> {
    let (n, m) = (cost.rows, cost.cols);
    if n > m {
        return invalid(format!("{n} rows cannot be injected into {m} columns; transpose the matrix"));
    }
    if n == 0 {
        return Ok(Matching { assignment: Vec::new(), cost: 0.0 });
    }

    let mut u = vec![0.0f64; n];
    let mut v = vec![0.0f64; m];
    let mut col4row = vec![NONE; n];
    let mut row4col = vec![NONE; m];
    let mut path = vec![NONE; m];
    let mut shortest = vec![f64::INFINITY; m];
    let mut scanned_rows = vec![false; n];
    let mut scanned_cols = vec![false; m];
    let mut remaining: Vec<usize> = Vec::with_capacity(m);

    for cur_row in 0..n {
        // Dijkstra over reduced costs from `cur_row` to the nearest free column.
        remaining.clear();
        remaining.extend((0..m).rev());
        scanned_rows.iter_mut().for_each(|s| *s = false);
        scanned_cols.iter_mut().for_each(|s| *s = false);
        shortest.iter_mut().for_each(|s| *s = f64::INFINITY);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            scanned_rows[i] = true;
            let mut lowest = f64::INFINITY;
            let mut index = NONE;
            for (it, &j) in remaining.iter().enumerate() {
                let reduced = min_val + cost.get(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    path[j] = i;
                    shortest[j] = reduced;
                }
                if shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == NONE) {
                    lowest = shortest[j];
                    index = it;
                }
            }
            min_val = lowest;
            if index == NONE || !min_val.is_finite() {
                unreachable!("finite costs always admit an augmenting path");
            }
            let j = remaining.swap_remove(index);
            scanned_cols[j] = true;
            if row4col[j] == NONE {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..n {
            if scanned_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..m {
            if scanned_cols[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }

    let total = col4row.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
    Ok(Matching { assignment: col4row, cost: total })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    /// Exhaustive minimum over injections rows -> columns.
    pub(crate) fn brute_force(cost: &CostMatrix) -> f64 {
        fn go(cost: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, best: &mut f64) {
            if row == cost.rows() {
                *best = best.min(acc);
                return;
            }
            for j in 0..cost.cols() {
                if !used[j] {
                    used[j] = true;
                    go(cost, row + 1, used, acc + cost.get(row, j), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        go(cost, 0, &mut vec![false; cost.cols()], 0.0, &mut best);
        best
    }

    #[test]
    fn zero_diagonal() {
        let c = CostMatrix::from_fn(3, 3, |i, j| if i == j { 0.0 } else { 1.0 }).unwrap();
        let m = assignment_solve(&c).unwrap();
        assert_eq!(m.cost, 0.0);
        assert_eq!(m.assignment, vec![0, 1, 2]);
    }

    #[test]
    fn two_by_two() {
        let c = CostMatrix::from_rows(&[vec![0.1, 0.9], vec![0.8, 0.2]]).unwrap();
        let m = assignment_solve(&c).unwrap();
        assert!((m.cost - 0.3).abs() < 1e-15);
        assert!((m.cost - brute_force(&c)).abs() < 1e-15);
    }

    #[test]
    fn single_row_takes_the_minimum() {
        let c = CostMatrix::from_rows(&[vec![0.4, 0.7, 0.05, 0.3]]).unwrap();
        let m = assignment_solve(&c).unwrap();
        assert_eq!(m.assignment, vec![2]);
        assert_eq!(m.cost, 0.05);
    }

    #[test]
    fn errors() {
        let tall = CostMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(assignment_solve(&tall).is_err());
        assert!(CostMatrix::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(CostMatrix::new(1, 2, vec![1.0, -1.0]).is_err());
        assert!(CostMatrix::new(1, 2, vec![1.0]).is_err());
    }

    #[test]
    fn agrees_with_brute_force_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let n = rng.random_range(1..=6);
            let m = rng.random_range(n..=7);
            // coarse values create ties, which exercise the free-column preference
            let c = CostMatrix::from_fn(n, m, |_, _| (rng.random_range(0..10) as f64) / 4.0).unwrap();
            let sol = assignment_solve(&c).unwrap();
            let mut seen = vec![false; m];
            for &j in &sol.assignment {
                assert!(!seen[j], "assignment must be injective");
                seen[j] = true;
            }
            assert!((sol.cost - brute_force(&c)).abs() < 1e-12);
        }
    }
}
