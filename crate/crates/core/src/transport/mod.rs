//! Entropic optimal transport between small 2D point sets.
//!
//! The denoiser uses the closed-form relaxed plans: a row-constrained plan
//! `T_U`, a column-constrained plan `T_V`, and their element-wise maximum.
//! Full Sinkhorn scaling and an exact LP solver are kept alongside as
//! reference solvers.

mod lp;
mod matrix;
mod relaxed;
mod sinkhorn;

pub use lp::{lp_transport_oracle, LP_MAX_POINTS};
pub use matrix::SquareMatrix;
pub use relaxed::{
    barycentric_apply, combine_max, denoise_points, gibbs_kernel, gibbs_kernel_shifted, relax_cols,
    relax_rows, relaxed_plan, GibbsKernel, KernelShift, SHIFT_BELOW_ETA,
};
pub use sinkhorn::{sinkhorn_full, SinkhornOutcome};

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::{distance, Real};

/// Pairwise Euclidean costs between a source and a target point set.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    matrix: SquareMatrix<T>,
}

impl<T: Real> CostMatrix<T> {
    /// Wraps raw costs. Entries must be finite and nonnegative.
    pub fn from_matrix(matrix: SquareMatrix<T>) -> Result<Self> {
        if matrix.n() == 0 {
            return Err(Error::contract("cost matrix must be at least 1x1"));
        }
        if matrix
            .as_slice()
            .iter()
            .any(|c| !c.is_finite() || *c < T::zero())
        {
            return Err(Error::contract("costs must be finite and nonnegative"));
        }
        Ok(Self { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.matrix.get(i, j)
    }

    pub fn matrix(&self) -> &SquareMatrix<T> {
        &self.matrix
    }
}

/// Builds the cost matrix `c_ij = |source_i - target_j|`.
pub fn cost_matrix<T: Real>(source: &[[T; 2]], target: &[[T; 2]]) -> Result<CostMatrix<T>> {
    if source.len() != target.len() {
        return Err(Error::contract(format!(
            "cost matrix needs equal point counts, got {} and {}",
            source.len(),
            target.len()
        )));
    }
    if source.is_empty() {
        return Err(Error::contract("cost matrix needs at least one point"));
    }
    if source
        .iter()
        .chain(target)
        .any(|p| !p[0].is_finite() || !p[1].is_finite())
    {
        return Err(Error::contract("point coordinates must be finite"));
    }
    let n = source.len();
    let mut data = Vec::with_capacity(n * n);
    for s in source {
        data.extend(target.iter().map(|t| distance(s, t)));
    }
    Ok(CostMatrix {
        matrix: SquareMatrix::from_vec(n, data)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlanKind {
    RowRelaxed,
    ColRelaxed,
    Combined,
    Sinkhorn,
    Lp,
}

impl PlanKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlanKind::RowRelaxed => "row_relaxed",
            PlanKind::ColRelaxed => "col_relaxed",
            PlanKind::Combined => "combined",
            PlanKind::Sinkhorn => "sinkhorn",
            PlanKind::Lp => "lp",
        }
    }
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A nonnegative `n x n` coupling together with the marginals it was built
/// against.
///
/// `p` is present when the plan was constructed against a row marginal and
/// `q` when it was constructed against a column marginal. `eta` is absent
/// only for the unregularized LP plan.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan<T> {
    pub matrix: SquareMatrix<T>,
    pub p: Option<Vec<T>>,
    pub q: Option<Vec<T>>,
    pub eta: Option<T>,
    pub kind: PlanKind,
}

impl<T: Real> TransportPlan<T> {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// `sum_ij T_ij c_ij`.
    pub fn cost(&self, cost: &CostMatrix<T>) -> Result<T> {
        if cost.n() != self.n() {
            return Err(Error::contract("plan and cost matrix differ in size"));
        }
        Ok(self
            .matrix
            .as_slice()
            .iter()
            .zip(cost.matrix().as_slice())
            .map(|(t, c)| *t * *c)
            .sum())
    }

    pub fn row_sums(&self) -> Vec<T> {
        self.matrix.row_sums()
    }

    pub fn col_sums(&self) -> Vec<T> {
        self.matrix.col_sums()
    }

    /// Debug export: a `n,eta,kind` header line followed by one CSV row per
    /// matrix row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let eta = self
            .eta
            .map(|e| e.as_f64().to_string())
            .unwrap_or_else(|| "none".to_string());
        writeln!(out, "n,eta,kind")?;
        writeln!(out, "{},{},{}", self.n(), eta, self.kind)?;
        for i in 0..self.n() {
            let row: Vec<String> = self
                .matrix
                .row(i)
                .iter()
                .map(|v| v.as_f64().to_string())
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Uniform marginal `1/n`.
pub fn uniform_marginal<T: Real>(n: usize) -> Vec<T> {
    vec![T::one() / T::from_count(n); n]
}

pub(crate) fn check_marginal<T: Real>(m: &[T], n: usize, name: &str) -> Result<()> {
    if m.len() != n {
        return Err(Error::contract(format!(
            "marginal {name} has length {}, expected {n}",
            m.len()
        )));
    }
    if m.iter().any(|v| !v.is_finite() || *v < T::zero()) {
        return Err(Error::contract(format!(
            "marginal {name} must be finite and nonnegative"
        )));
    }
    let total: T = m.iter().copied().sum();
    let tol = T::lit(1e-6).max(T::epsilon() * T::from_count(16 * n));
    if (total - T::one()).abs() > tol {
        return Err(Error::contract(format!(
            "marginal {name} sums to {total}, expected 1"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_matrix_two_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0]];
        let c = cost_matrix(&pts, &pts).unwrap();
        assert_eq!(c.matrix().as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn cost_matrix_single_pair() {
        let c = cost_matrix(&[[0.0f64, 0.0]], &[[3.0, 4.0]]).unwrap();
        assert_eq!(c.matrix().as_slice(), &[5.0]);
    }

    #[test]
    fn cost_matrix_size_mismatch() {
        let err = cost_matrix(&[[0.0f64, 0.0]], &[[3.0, 4.0], [1.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
        assert!(cost_matrix::<f64>(&[], &[]).is_err());
    }

    #[test]
    fn cost_matrix_matches_double_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 1..12 {
            let a: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let b: Vec<[f64; 2]> = (0..n).map(|_| [rng.random(), rng.random()]).collect();
            let c = cost_matrix(&a, &b).unwrap();
            for i in 0..n {
                for j in 0..n {
                    let dx = a[i][0] - b[j][0];
                    let dy = a[i][1] - b[j][1];
                    assert_eq!(c.get(i, j), (dx * dx + dy * dy).sqrt());
                }
            }
        }
    }

    #[test]
    fn csv_export_has_header_and_rows() {
        let k = gibbs_kernel(&cost_matrix(&[[0.0f64, 0.0], [1.0, 0.0]], &[[0.0, 0.0], [1.0, 0.0]]).unwrap(), 1.0).unwrap();
        let plan = relax_rows(&k, &[0.5, 0.5]).unwrap();
        let mut buf = Vec::new();
        plan.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,eta,kind");
        assert_eq!(lines[1], "2,1,row_relaxed");
        assert_eq!(lines.len(), 4);
    }

    #[test]
    fn marginal_validation() {
        assert!(check_marginal(&[0.5f64, 0.5], 2, "p").is_ok());
        assert!(check_marginal(&[0.5f64, 0.6], 2, "p").is_err());
        assert!(check_marginal(&[1.5f64, -0.5], 2, "p").is_err());
        assert!(check_marginal(&[1.0f64], 2, "p").is_err());
    }
}
