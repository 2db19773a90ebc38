use super::{check_marginal, CostMatrix, PlanKind, SquareMatrix, TransportPlan};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest instance the exact solver accepts. It is a reference solver for
/// tests, not a production path.
pub const LP_MAX_POINTS: usize = 8;

/// Exact unregularized transport: `min sum T_ij c_ij` subject to both
/// marginals, solved with a two-phase dense simplex using Bland's rule.
pub fn lp_transport_oracle<T: Real>(
    cost: &CostMatrix<T>,
    p: &[T],
    q: &[T],
) -> Result<TransportPlan<T>> {
    let n = cost.n();
    if n > LP_MAX_POINTS {
        return Err(Error::contract(format!(
            "exact LP solver refuses n = {n} (limit {LP_MAX_POINTS})"
        )));
    }
    check_marginal(p, n, "p")?;
    check_marginal(q, n, "q")?;

    // Row sums for every i, column sums for all but the last j (the last one
    // is implied by mass balance).
    let nv = n * n;
    let m = 2 * n - 1;
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..n {
        let mut r = vec![T::zero(); nv];
        for j in 0..n {
            r[i * n + j] = T::one();
        }
        rows.push(r);
        rhs.push(p[i]);
    }
    for j in 0..n - 1 {
        let mut r = vec![T::zero(); nv];
        for i in 0..n {
            r[i * n + j] = T::one();
        }
        rows.push(r);
        rhs.push(q[j]);
    }
    let x = simplex(&rows, &rhs, cost.matrix().as_slice())?;
    Ok(TransportPlan {
        matrix: SquareMatrix::from_vec(n, x)?,
        p: Some(p.to_vec()),
        q: Some(q.to_vec()),
        eta: None,
        kind: PlanKind::Lp,
    })
}

struct Tableau<T> {
    /// `m` constraint rows followed by the objective row; each row holds the
    /// structural columns, the artificial columns, then the right-hand side.
    t: Vec<Vec<T>>,
    basis: Vec<usize>,
    width: usize,
}

impl<T: Real> Tableau<T> {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v = *v / piv;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r {
                continue;
            }
            let f = row[c];
            if f != T::zero() {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v = *v - f * *pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs Bland's rule over columns `< allowed`.
    fn optimize(&mut self, allowed: usize, tol: T) -> Result<()> {
        let m = self.basis.len();
        let obj = m;
        let rhs = self.width - 1;
        for _ in 0..10_000 {
            let Some(enter) = (0..allowed).find(|&j| self.t[obj][j] < -tol) else {
                return Ok(());
            };
            let mut leave: Option<(usize, T)> = None;
            for r in 0..m {
                let a = self.t[r][enter];
                if a > tol {
                    let ratio = self.t[r][rhs] / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - tol
                                || ((ratio - lratio).abs() <= tol && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Err(Error::contract("transport LP is unbounded"));
            };
            self.pivot(r, enter);
        }
        Err(Error::contract("simplex did not terminate"))
    }
}

fn simplex<T: Real>(rows: &[Vec<T>], rhs: &[T], cost: &[T]) -> Result<Vec<T>> {
    let m = rows.len();
    let nv = cost.len();
    let width = nv + m + 1;
    let tol = T::epsilon() * T::lit(1e4);
    let mut t = vec![vec![T::zero(); width]; m + 1];
    for r in 0..m {
        t[r][..nv].copy_from_slice(&rows[r]);
        t[r][nv + r] = T::one();
        t[r][width - 1] = rhs[r];
    }
    // Phase one: minimize the sum of artificials.
    for j in 0..width {
        if (nv..nv + m).contains(&j) {
            continue;
        }
        t[m][j] = -(0..m).map(|r| t[r][j]).sum::<T>();
    }
    let mut tab = Tableau {
        t,
        basis: (nv..nv + m).collect(),
        width,
    };
    tab.optimize(nv, tol)?;
    if -tab.t[m][width - 1] > T::lit(1e-9) {
        return Err(Error::contract("transport LP is infeasible"));
    }
    // Push degenerate artificials out of the basis where possible.
    for r in 0..m {
        if tab.basis[r] >= nv {
            if let Some(c) = (0..nv).find(|&c| tab.t[r][c].abs() > tol) {
                tab.pivot(r, c);
            }
        }
    }
    // Phase two objective in terms of the current basis.
    for j in 0..width {
        let base = if j < nv { cost[j] } else { T::zero() };
        let reduced = (0..m).fold(base, |acc, r| {
            let cb = if tab.basis[r] < nv {
                cost[tab.basis[r]]
            } else {
                T::zero()
            };
            acc - cb * tab.t[r][j]
        });
        tab.t[m][j] = reduced;
    }
    tab.optimize(nv, tol)?;
    let mut x = vec![T::zero(); nv];
    for r in 0..m {
        if tab.basis[r] < nv {
            x[tab.basis[r]] = tab.t[r][width - 1].max(T::zero());
        }
    }
    Ok(x)
}
