//! Compressed sparse column storage for the adjacency matrix.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CscMatrix {
    pub n: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    /// Builds from per-column `(row, value)` lists. Rows are sorted and
    /// duplicate rows summed.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(columns.len(), n);
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for (r, v) in col {
                assert!(r < n, "row index out of range");
                if last == Some(r) {
                    *values.last_mut().unwrap() += v;
                } else {
                    row_idx.push(r);
                    values.push(v);
                    last = Some(r);
                }
            }
            col_ptr.push(row_idx.len());
        }
        CscMatrix { n, col_ptr, row_idx, values }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let columns = (0..n)
            .map(|j| {
                (0..n)
                    .filter(|&i| rows[i][j] != 0.0)
                    .map(|i| (i, rows[i][j]))
                    .collect()
            })
            .collect();
        Self::from_columns(n, columns)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                out[i][j] = v;
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
        self.row_idx[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    /// y = A x
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, v) in self.column(j) {
                y[i] += v * xj;
            }
        }
        y
    }

    /// y = Aᵀ x
    pub fn tmul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|j| self.column(j).map(|(i, v)| v * x[i]).sum())
            .collect()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.column(j).map(|(_, v)| v).sum()).collect()
    }

    /// Largest deviation of any column sum from 1.
    pub fn stochasticity_error(&self) -> f64 {
        self.column_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Rescales every column to sum to one. Empty columns are left empty.
    pub fn normalize_columns(&mut self) {
        for j in 0..self.n {
            let (a, b) = (self.col_ptr[j], self.col_ptr[j + 1]);
            let s: f64 = self.values[a..b].iter().sum();
            if s > 0.0 {
                for v in &mut self.values[a..b] {
                    *v /= s;
                }
            }
        }
    }

    /// Strongly connected components of the support graph, as a component
    /// label per node (labels are in discovery order).
    pub fn strong_components(&self) -> Vec<usize> {
        // Kosaraju with explicit stacks. Edge j -> i whenever a_ij > 0.
        let n = self.n;
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for j in 0..n {
            for (i, v) in self.column(j) {
                if v > 0.0 {
                    rev[i].push(j);
                }
            }
        }
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![(s, self.col_ptr[s])];
            while let Some(top) = stack.last_mut() {
                let (u, k) = *top;
                if k < self.col_ptr[u + 1] {
                    top.1 += 1;
                    let w = self.row_idx[k];
                    if self.values[k] > 0.0 && !seen[w] {
                        seen[w] = true;
                        stack.push((w, self.col_ptr[w]));
                    }
                } else {
                    order.push(u);
                    stack.pop();
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for &s in order.iter().rev() {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &w in &rev[u] {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_strongly_connected(&self) -> bool {
        self.n == 0 || self.strong_components().iter().all(|&c| c == 0)
    }

    /// Relabels nodes: entry (i, j) moves to (perm[i], perm[j]).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut cols = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                cols[perm[j]].push((perm[i], v));
            }
        }
        Self::from_columns(self.n, cols)
    }
}
