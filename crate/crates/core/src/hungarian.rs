//! Kuhn–Munkres with slack arrays, O(n³) on the padded square matrix.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("weight matrix is not rectangular (row {row} has {len} entries, expected {expected})")]
    Ragged { row: usize, len: usize, expected: usize },
    #[error("weight at ({row}, {col}) is {value}; only finite weights or -inf are allowed")]
    NonFinite { row: usize, col: usize, value: f64 },
}

/// Row/column index pairs of a matching plus their total weight.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub pairs: Vec<(usize, usize)>,
    pub total: f64,
}

const INF: i64 = i64::MAX / 4;

/// Maximum-weight perfect assignment of a square `n × n` row-major matrix.
/// Returns the column assigned to each row.
pub(crate) fn assign_square(n: usize, weight: &[i64]) -> Vec<usize> {
    debug_assert_eq!(weight.len(), n * n);
    if n == 0 {
        return Vec::new();
    }
    // Minimisation form over cost = -weight, 1-based with a sentinel column 0.
    let cost = |i: usize, j: usize| -weight[(i - 1) * n + (j - 1)];
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![INF; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        min_slack.fill(INF);
        used.fill(false);
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = INF;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let slack = cost(i0, j) - u[i0] - v[j];
                if slack < min_slack[j] {
                    min_slack[j] = slack;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[row_of[j] - 1] = j - 1;
    }
    col_of
}

/// Maximum-weight matching over the present edges of a `rows × cols` bipartite
/// graph. Negative edges are never used. Pairs come back sorted by row.
pub(crate) fn max_weight_matching(
    rows: usize,
    cols: usize,
    edge: impl Fn(usize, usize) -> Option<i64>,
) -> Vec<(usize, usize)> {
    let n = rows.max(cols);
    let mut w = vec![0i64; n * n];
    let mut present = vec![false; n * n];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(x) = edge(r, c) {
                w[r * n + c] = x.max(0);
                present[r * n + c] = x >= 0;
            }
        }
    }
    assign_square(n, &w).into_iter().enumerate().filter(|&(r, c)| r < rows && c < cols && present[r * n + c]).collect()
}

/// Among matchings of maximum cardinality over the present edges, one of
/// maximum total weight. Weights may be negative.
pub(crate) fn max_cardinality_matching(
    rows: usize,
    cols: usize,
    edge: impl Fn(usize, usize) -> Option<i64>,
) -> Vec<(usize, usize)> {
    let k = rows.min(cols) as i64;
    let mut max_abs = 0i64;
    for r in 0..rows {
        for c in 0..cols {
            if let Some(x) = edge(r, c) {
                max_abs = max_abs.max(x.abs());
            }
        }
    }
    // Any extra pair outweighs the widest possible spread of the others.
    let offset = 2 * k * max_abs + 1;
    max_weight_matching(rows, cols, |r, c| edge(r, c).map(|x| x + offset))
}

const QUANTUM: f64 = 1e6;

/// Maximum-weight matching of a dense weight matrix. `f64::NEG_INFINITY`
/// marks a missing edge; other entries must be finite. Weights are resolved
/// to 1e-6 internally.
pub fn km_solve(weights: &[Vec<f64>]) -> Result<Assignment, SolveError> {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    for (row, line) in weights.iter().enumerate() {
        if line.len() != cols {
            return Err(SolveError::Ragged { row, len: line.len(), expected: cols });
        }
        for (col, &value) in line.iter().enumerate() {
            if !(value.is_finite() || value == f64::NEG_INFINITY) {
                return Err(SolveError::NonFinite { row, col, value });
            }
        }
    }
    let pairs = max_weight_matching(rows, cols, |r, c| {
        let x = weights[r][c];
        x.is_finite().then(|| (x * QUANTUM).round() as i64)
    });
    let total = pairs.iter().map(|&(r, c)| weights[r][c]).sum();
    Ok(Assignment { pairs, total })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO: f64 = f64::NEG_INFINITY;

    #[test]
    fn two_by_two() {
        let a = km_solve(&[vec![5.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total, 9.0);
    }

    #[test]
    fn single_entry() {
        let a = km_solve(&[vec![2.5]]).unwrap();
        assert_eq!((a.pairs, a.total), (vec![(0, 0)], 2.5));
        assert!(km_solve(&[vec![NO]]).unwrap().pairs.is_empty());
        assert!(km_solve(&[]).unwrap().pairs.is_empty());
    }

    #[test]
    fn rectangular_and_missing() {
        let a = km_solve(&[vec![7.0, 1.0, 2.0]]).unwrap();
        assert_eq!((a.pairs, a.total), (vec![(0, 0)], 7.0));
        let a = km_solve(&[vec![NO, 3.0], vec![NO, 4.0], vec![1.0, NO]]).unwrap();
        assert_eq!(a.pairs, vec![(1, 1), (2, 0)]);
    }

    #[test]
    fn negative_edges_left_out() {
        let a = km_solve(&[vec![-1.0, 2.0], vec![-3.0, -4.0]]).unwrap();
        assert_eq!(a.pairs, vec![(0, 1)]);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(km_solve(&[vec![f64::NAN]]), Err(SolveError::NonFinite { .. })));
        assert!(matches!(km_solve(&[vec![f64::INFINITY]]), Err(SolveError::NonFinite { .. })));
        assert!(matches!(km_solve(&[vec![1.0, 2.0], vec![1.0]]), Err(SolveError::Ragged { row: 1, .. })));
    }

    #[test]
    fn cardinality_beats_weight() {
        // the heavy diagonal pair would block the second match
        let w = [[Some(100), Some(1)], [Some(1), None]];
        let pairs = max_cardinality_matching(2, 2, |r, c| w[r][c]);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        let w = [[Some(-5)]];
        assert_eq!(max_cardinality_matching(1, 1, |r, c| w[r][c]), vec![(0, 0)]);
    }
}
