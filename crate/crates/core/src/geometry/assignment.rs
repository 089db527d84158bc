//! Minimum-cost assignment (Kuhn-Munkres with potentials).
//!
//! Rectangular problems are padded to square with zero-cost dummy rows or
//! columns, so every returned matching has cardinality `min(rows, cols)`.
//! Among optimal assignments the solver returns the one whose column
//! sequence (row 0 first, dummy columns counting as the highest indices) is
//! lexicographically smallest.

use crate::error::{Error, Result};

/// Dense row-major cost grid, lower is better.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Invalid(format!(
                "cost matrix has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid("cost matrix contains non-finite entries".into()));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    /// Panics if `f` yields a non-finite cost.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let data: Vec<f64> = (0..rows)
            .flat_map(|r| (0..cols).map(move |c| (r, c)))
            .map(|(r, c)| f(r, c))
            .collect();
        CostMatrix::new(rows, cols, data).expect("finite costs")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Matching {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

impl Matching {
    pub fn cost(&self, costs: &CostMatrix) -> f64 {
        self.pairs.iter().map(|&(r, c)| costs.get(r, c)).sum()
    }
}

pub fn solve_assignment(costs: &CostMatrix) -> Matching {
    let (rows, cols) = (costs.rows, costs.cols);
    let n = rows.max(cols);
    if rows == 0 || cols == 0 {
        return Matching {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
        };
    }
    let cost = |i: usize, j: usize| {
        if i < rows && j < cols {
            costs.get(i, j)
        } else {
            0.0
        }
    };

    // 1-based potentials; column 0 is the virtual source
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        row_to_col[owner[j] - 1] = j - 1;
    }

    // Edges with zero reduced cost under the optimal duals are exactly those
    // usable by some optimal assignment.
    let scale = 1.0 + costs.data.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| (cost(i, j) - u[i + 1] - v[j + 1]).abs() <= eps)
                .collect()
        })
        .collect();
    lexicographic_refine(&tight, &mut row_to_col);

    let mut m = Matching::default();
    let mut col_used = vec![false; cols];
    for (i, &j) in row_to_col.iter().enumerate().take(rows) {
        if j < cols {
            m.pairs.push((i, j));
            col_used[j] = true;
        } else {
            m.unmatched_rows.push(i);
        }
    }
    m.unmatched_cols = (0..cols).filter(|&j| !col_used[j]).collect();
    m
}

/// Rewrite a perfect matching of the tight graph into the lexicographically
/// smallest one, fixing rows in order.
fn lexicographic_refine(tight: &[Vec<usize>], row_to_col: &mut [usize]) {
    let n = row_to_col.len();
    let mut col_owner = vec![0usize; n];
    for (i, &j) in row_to_col.iter().enumerate() {
        col_owner[j] = i;
    }
    let mut locked_col = vec![false; n];
    for i in 0..n {
        for &j in &tight[i] {
            if locked_col[j] {
                continue;
            }
            if row_to_col[i] == j {
                break;
            }
            // Free row i's column, hand j to i, and re-route j's old owner
            // along an alternating path that ends at the freed column.
            let freed = row_to_col[i];
            let start = col_owner[j];
            let mut visited = vec![false; n];
            visited[j] = true;
            let mut path = Vec::new();
            if augment(
                start,
                freed,
                tight,
                row_to_col,
                &col_owner,
                &locked_col,
                &mut visited,
                &mut path,
            ) {
                for (r, c) in path {
                    row_to_col[r] = c;
                    col_owner[c] = r;
                }
                row_to_col[i] = j;
                col_owner[j] = i;
                break;
            }
        }
        locked_col[row_to_col[i]] = true;
    }
}

#[allow(clippy::too_many_arguments)]
fn augment(
    row: usize,
    target: usize,
    tight: &[Vec<usize>],
    row_to_col: &[usize],
    col_owner: &[usize],
    locked_col: &[bool],
    visited: &mut [bool],
    path: &mut Vec<(usize, usize)>,
) -> bool {
    for &c in &tight[row] {
        if locked_col[c] || visited[c] || c == row_to_col[row] {
            continue;
        }
        visited[c] = true;
        if c == target
            || augment(
                col_owner[c],
                target,
                tight,
                row_to_col,
                col_owner,
                locked_col,
                visited,
                path,
            )
        {
            path.push((row, c));
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_zero() {
        let c = CostMatrix::from_fn(3, 3, |r, c| if r == c { 0.0 } else { 1.0 });
        let m = solve_assignment(&c);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert!(m.unmatched_rows.is_empty() && m.unmatched_cols.is_empty());
    }

    #[test]
    fn two_by_two() {
        let c = CostMatrix::new(2, 2, vec![1.0, 2.0, 3.0, 1.0]).unwrap();
        let m = solve_assignment(&c);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.cost(&c), 2.0);
    }

    #[test]
    fn empty_matrix() {
        let m = solve_assignment(&CostMatrix::new(0, 3, vec![]).unwrap());
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_cols, vec![0, 1, 2]);
    }

    #[test]
    fn rectangular_reports_unmatched() {
        let c = CostMatrix::new(3, 1, vec![5.0, 1.0, 3.0]).unwrap();
        let m = solve_assignment(&c);
        assert_eq!(m.pairs, vec![(1, 0)]);
        assert_eq!(m.unmatched_rows, vec![0, 2]);
    }

    #[test]
    fn ties_prefer_lowest_columns_for_earliest_rows() {
        let c = CostMatrix::from_fn(3, 3, |_, _| 1.0);
        assert_eq!(solve_assignment(&c).pairs, vec![(0, 0), (1, 1), (2, 2)]);
        let c = CostMatrix::new(2, 3, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(solve_assignment(&c).pairs, vec![(0, 0), (1, 1)]);
        // with more rows than columns the earliest rows take the real columns
        let c = CostMatrix::new(3, 1, vec![2.0, 2.0, 2.0]).unwrap();
        assert_eq!(solve_assignment(&c).pairs, vec![(0, 0)]);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(CostMatrix::new(1, 1, vec![f64::NAN]).is_err());
    }
}
