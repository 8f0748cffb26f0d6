//! Rescaled-step window and small-core recursions.
//!
//! The state tracked here represents an implicit inverse-Hessian
//! approximation
//!
//! ```text
//! H = S * L * S^T
//! ```
//!
//! where `S` holds the most recent `m` rescaled steps as columns (oldest
//! first) and `L` is a small symmetric positive definite core. A pair
//! `(s, y)` enters the window rescaled by `1 / sqrt(|s^T y|)`, which makes the
//! window scale-free and keeps the core's corner update a plain unit entry.
//!
//! While fewer than `m` pairs are stored the core grows by one row and
//! column per pair and `H` reproduces the dense BFGS recursion started from
//! `H_1 = s0 * s0^T` exactly. Once the window is full, absorbing a new pair
//! first expresses the evicted oldest column in the incoming window via a
//! least-squares solve, then conjugates the core with the small transfer
//! matrix [`build_tk`] assembled from that solution. Everything costs
//! `O(m n + m^3)` per update and `O(m n)` per application; no `n x n` matrix
//! is ever formed outside of diagnostic helpers.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A pair is skipped when `|s^T y| < CURVATURE_SKIP_REL * ||s|| * ||y||`.
pub const CURVATURE_SKIP_REL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubspaceError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("subspace state holds no pairs yet")]
    EmptyState,
}

/// A step/gradient-change pair rescaled by `1 / sqrt(|s^T y|)`.
///
/// After rescaling, `|s_tilde^T y_tilde| == 1`; the sign of the original
/// inner product survives in `sty`.
#[derive(Debug, Clone)]
pub struct CurvaturePair {
    pub s_tilde: DVector<f64>,
    pub y_tilde: DVector<f64>,
    /// Inner product `s^T y` before rescaling.
    pub sty: f64,
}

/// Rescales a raw pair, or returns `None` when the curvature is too small to
/// absorb safely (the caller keeps its state unchanged in that case).
pub fn rescale_pair(s: &DVector<f64>, y: &DVector<f64>) -> Option<CurvaturePair> {
    assert_eq!(s.len(), y.len(), "rescale_pair: s and y lengths differ");
    let sty = s.dot(y);
    if !sty.is_finite() || sty.abs() < CURVATURE_SKIP_REL * s.norm() * y.norm() || sty == 0.0 {
        return None;
    }
    let scale = sty.abs().sqrt();
    Some(CurvaturePair { s_tilde: s / scale, y_tilde: y / scale, sty })
}

/// What [`SubspaceState::absorb`] did with a pair.
#[derive(Debug, Clone, Copy)]
pub struct AbsorbOutcome {
    /// True once the window was already full and the oldest column was evicted.
    pub truncated: bool,
    /// Residual norm of the eviction least-squares solve, when one ran.
    /// Near zero whenever the evicted direction still lies in the span of the
    /// incoming window.
    pub lsq_residual: Option<f64>,
}

/// Window of rescaled steps plus the small symmetric core.
///
/// Persistent storage is `min(count, m) * n` floats for the columns and up to
/// `m^2` for the core; see [`SubspaceState::stored_scalars`].
pub struct SubspaceState {
    m: usize,
    count: usize,
    cols: VecDeque<DVector<f64>>,
    l: DMatrix<f64>,
}

impl SubspaceState {
    /// Empty state with window capacity `m >= 1`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "window capacity must be at least 1");
        SubspaceState { m, count: 0, cols: VecDeque::with_capacity(m), l: DMatrix::zeros(0, 0) }
    }

    /// Window capacity.
    pub fn memory(&self) -> usize {
        self.m
    }

    /// Total pairs absorbed over the state's lifetime (not capped at `m`).
    pub fn count(&self) -> usize {
        self.count
    }

    /// Columns currently stored, `min(count, m)`.
    pub fn stored(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    /// Stored rescaled steps, oldest first.
    pub fn columns(&self) -> impl Iterator<Item = &DVector<f64>> {
        self.cols.iter()
    }

    /// The symmetric core `L` (side `stored()`).
    pub fn core(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Applies the implicit approximation: returns `S L S^T g`.
    ///
    /// Costs `O(stored * n)` time and allocates two `stored`-vectors plus the
    /// result; the product is never materialized.
    pub fn apply(&self, g: &DVector<f64>) -> Result<DVector<f64>, SubspaceError> {
        if self.cols.is_empty() {
            return Err(SubspaceError::EmptyState);
        }
        let n = self.cols[0].len();
        if g.len() != n {
            return Err(SubspaceError::Dimension(format!(
                "apply: vector has length {}, columns have length {n}",
                g.len()
            )));
        }
        let k = self.cols.len();
        let mut proj = DVector::zeros(k);
        for (j, col) in self.cols.iter().enumerate() {
            proj[j] = col.dot(g);
        }
        let w = &self.l * proj;
        let mut out = DVector::zeros(n);
        for (j, col) in self.cols.iter().enumerate() {
            out.axpy(w[j], col, 1.0);
        }
        Ok(out)
    }

    /// Absorbs a rescaled pair, growing the core or rotating the window.
    pub fn absorb(&mut self, pair: CurvaturePair) -> AbsorbOutcome {
        if self.cols.len() < self.m {
            self.update_growing(&pair);
            return AbsorbOutcome { truncated: false, lsq_residual: None };
        }
        let yts = DVector::from_fn(self.m, |j, _| pair.y_tilde.dot(&self.cols[j]));
        let s_next = self.next_window(&pair.s_tilde);
        let t = solve_t(&s_next, &self.cols[0]);
        let residual = (&s_next * &t - &self.cols[0]).norm();
        self.update_truncated(&pair, &t, &yts)
            .expect("absorb: internally sized solve cannot mismatch");
        AbsorbOutcome { truncated: true, lsq_residual: Some(residual) }
    }

    /// Expands the core by one row/column for a pair absorbed while the
    /// window still has room. Seeds `L = [1]` on the first pair.
    pub fn update_growing(&mut self, pair: &CurvaturePair) {
        let k = self.cols.len();
        assert!(k < self.m, "growing update called on a full window");
        if let Some(first) = self.cols.front() {
            assert_eq!(first.len(), pair.s_tilde.len(), "pair dimension differs from window");
        }
        let mut l_new = DMatrix::zeros(k + 1, k + 1);
        if k == 0 {
            l_new[(0, 0)] = 1.0;
        } else {
            let r = DVector::from_fn(k, |j, _| -pair.y_tilde.dot(&self.cols[j]));
            let lr = &self.l * &r;
            l_new.view_mut((0, 0), (k, k)).copy_from(&self.l);
            for i in 0..k {
                l_new[(i, k)] = lr[i];
                l_new[(k, i)] = lr[i];
            }
            l_new[(k, k)] = r.dot(&lr) + 1.0;
        }
        symmetrize(&mut l_new);
        self.l = l_new;
        self.cols.push_back(pair.s_tilde.clone());
        self.count += 1;
    }

    /// Full-window update: conjugates the core with the transfer matrix built
    /// from `t` (the eviction least-squares solution) and `yts` (inner
    /// products of the incoming rescaled gradient change with the stored
    /// columns, oldest first), adds the unit corner, and rotates the window.
    pub fn update_truncated(
        &mut self,
        pair: &CurvaturePair,
        t: &DVector<f64>,
        yts: &DVector<f64>,
    ) -> Result<(), SubspaceError> {
        assert_eq!(self.cols.len(), self.m, "truncated update needs a full window");
        let tk = build_tk(t, yts)?;
        if t.len() != self.m {
            return Err(SubspaceError::Dimension(format!(
                "update_truncated: t has length {}, window capacity is {}",
                t.len(),
                self.m
            )));
        }
        let mut l_new = &tk * &self.l * tk.transpose();
        l_new[(self.m - 1, self.m - 1)] += 1.0;
        symmetrize(&mut l_new);
        self.l = l_new;
        self.cols.pop_front();
        self.cols.push_back(pair.s_tilde.clone());
        self.count += 1;
        Ok(())
    }

    /// The incoming window as a matrix: stored columns 1..m-1 followed by the
    /// new column.
    fn next_window(&self, new_col: &DVector<f64>) -> DMatrix<f64> {
        let n = new_col.len();
        let mut s = DMatrix::zeros(n, self.m);
        for j in 1..self.m {
            s.set_column(j - 1, &self.cols[j]);
        }
        s.set_column(self.m - 1, new_col);
        s
    }

    /// Materializes `S L S^T` densely. Diagnostic / test helper only; costs
    /// `O(n^2 m)` and allocates `n^2`.
    pub fn dense(&self) -> DMatrix<f64> {
        if self.cols.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        let n = self.cols[0].len();
        let k = self.cols.len();
        let mut s = DMatrix::zeros(n, k);
        for (j, col) in self.cols.iter().enumerate() {
            s.set_column(j, col);
        }
        &s * &self.l * s.transpose()
    }

    /// Scalars held by this state: stored floats plus integer bookkeeping.
    /// Bounded by `m*n + m^2 + 4m + 8` for columns of length `n`.
    pub fn stored_scalars(&self) -> usize {
        let floats: usize = self.cols.iter().map(DVector::len).sum::<usize>() + self.l.len();
        let bookkeeping = 2 + self.cols.len() + 2;
        floats + bookkeeping
    }

    /// Snapshot for serialization; see [`StateSnapshot`].
    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            m: self.m,
            count: self.count,
            columns: self.cols.iter().map(|c| c.as_slice().to_vec()).collect(),
            core_row_major: self.l.transpose().as_slice().to_vec(),
        }
    }

    /// Rebuilds a state from a snapshot, validating shapes.
    pub fn restore(snap: &StateSnapshot) -> Result<Self, SubspaceError> {
        if snap.m == 0 {
            return Err(SubspaceError::Dimension("snapshot has m = 0".into()));
        }
        let k = snap.columns.len();
        if k > snap.m {
            return Err(SubspaceError::Dimension(format!(
                "snapshot stores {k} columns with capacity {}",
                snap.m
            )));
        }
        if let Some(first) = snap.columns.first() {
            if snap.columns.iter().any(|c| c.len() != first.len()) {
                return Err(SubspaceError::Dimension("snapshot columns differ in length".into()));
            }
        }
        if snap.core_row_major.len() != k * k {
            return Err(SubspaceError::Dimension(format!(
                "snapshot core has {} entries, expected {}",
                snap.core_row_major.len(),
                k * k
            )));
        }
        Ok(SubspaceState {
            m: snap.m,
            count: snap.count,
            cols: snap.columns.iter().map(|c| DVector::from_row_slice(c)).collect(),
            l: DMatrix::from_row_slice(k, k, &snap.core_row_major),
        })
    }
}

/// Flat serialization of a [`SubspaceState`]: columns oldest-first, core in
/// row-major order. Stable, human-readable JSON via serde.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub m: usize,
    pub count: usize,
    pub columns: Vec<Vec<f64>>,
    pub core_row_major: Vec<f64>,
}

/// Assembles the `m x m` transfer matrix for a full-window update.
///
/// Column 0 carries the least-squares solution `t` with `yts[0]` subtracted
/// in the last row; columns `1..m` hold a shifted identity over the first
/// `m - 1` rows and `-yts[j]` in the last row:
///
/// ```text
/// | t_0      1        0   |
/// | t_1      0        1   |
/// | t_2-a_0  -a_1  -a_2   |      (m = 3, a = yts)
/// ```
pub fn build_tk(t: &DVector<f64>, yts: &DVector<f64>) -> Result<DMatrix<f64>, SubspaceError> {
    let m = t.len();
    if yts.len() != m {
        return Err(SubspaceError::Dimension(format!(
            "build_tk: t has length {m}, yts has length {}",
            yts.len()
        )));
    }
    if m == 0 {
        return Err(SubspaceError::Dimension("build_tk: empty inputs".into()));
    }
    let mut tk = DMatrix::zeros(m, m);
    for i in 0..m - 1 {
        tk[(i, 0)] = t[i];
        tk[(i, i + 1)] = 1.0;
    }
    tk[(m - 1, 0)] = t[m - 1] - yts[0];
    for j in 1..m {
        tk[(m - 1, j)] = -yts[j];
    }
    Ok(tk)
}

/// Minimum-norm least-squares solution of `s_next * t ~= target` via SVD,
/// with singular values below `1e-12` times the largest column norm treated
/// as zero. Rank deficiency therefore yields the pseudo-inverse solution
/// instead of noise amplification.
pub fn solve_t(s_next: &DMatrix<f64>, target: &DVector<f64>) -> DVector<f64> {
    assert_eq!(s_next.nrows(), target.len(), "solve_t: row count must match target length");
    let max_col = (0..s_next.ncols()).map(|j| s_next.column(j).norm()).fold(0.0, f64::max);
    let eps = 1e-12 * max_col.max(f64::MIN_POSITIVE);
    let svd = s_next.clone().svd(true, true);
    let solution = svd.solve(target, eps).expect("svd solve with non-negative eps");
    DVector::from_column_slice(solution.as_slice())
}

fn symmetrize(l: &mut DMatrix<f64>) {
    let k = l.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            let avg = 0.5 * (l[(i, j)] + l[(j, i)]);
            l[(i, j)] = avg;
            l[(j, i)] = avg;
        }
    }
}
