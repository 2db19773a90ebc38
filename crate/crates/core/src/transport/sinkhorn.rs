use super::{check_marginal, CostMatrix, PlanKind, SquareMatrix, TransportPlan};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Exponent magnitude above which the scaling iterations switch to annealed
/// log-domain potentials (`exp(-500)` is still a normal `f64`).
const LOG_DOMAIN_ABOVE: f64 = 500.0;

const ANNEAL_STAGE_ITERS: usize = 200;

#[derive(Debug, Clone)]
pub struct SinkhornOutcome<T> {
    /// Best iterate; `kind` is always `Sinkhorn`.
    pub plan: TransportPlan<T>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 distance between the plan's row sums and `p`.
    pub row_residual: T,
    /// L1 distance between the plan's column sums and `q`.
    pub col_residual: T,
}

/// Sinkhorn-Knopp: alternate row and column scaling of the Gibbs kernel
/// until both marginal residuals (L1) drop below `tol`.
///
/// Non-convergence is not an error: the last iterate comes back with
/// `converged == false`.
pub fn sinkhorn_full<T: Real>(
    cost: &CostMatrix<T>,
    p: &[T],
    q: &[T],
    eta: T,
    max_iters: usize,
    tol: T,
) -> Result<SinkhornOutcome<T>> {
    if !(eta > T::zero()) || !eta.is_finite() {
        return Err(Error::contract(format!(
            "regularization must be positive and finite, got {eta}"
        )));
    }
    let n = cost.n();
    check_marginal(p, n, "p")?;
    check_marginal(q, n, "q")?;
    if max_iters == 0 {
        return Err(Error::contract("sinkhorn needs at least one iteration"));
    }
    let c_max = cost
        .matrix()
        .as_slice()
        .iter()
        .copied()
        .fold(T::zero(), T::max);
    if (c_max / eta).as_f64() > LOG_DOMAIN_ABOVE {
        log_domain(cost, p, q, eta, max_iters, tol)
    } else {
        scaling_domain(cost, p, q, eta, max_iters, tol)
    }
}

fn l1<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y).abs()).sum()
}

fn finish<T: Real>(
    matrix: SquareMatrix<T>,
    p: &[T],
    q: &[T],
    eta: T,
    iterations: usize,
    tol: T,
) -> SinkhornOutcome<T> {
    let row_residual = l1(&matrix.row_sums(), p);
    let col_residual = l1(&matrix.col_sums(), q);
    SinkhornOutcome {
        plan: TransportPlan {
            matrix,
            p: Some(p.to_vec()),
            q: Some(q.to_vec()),
            eta: Some(eta),
            kind: PlanKind::Sinkhorn,
        },
        iterations,
        converged: row_residual < tol && col_residual < tol,
        row_residual,
        col_residual,
    }
}

fn scaling_domain<T: Real>(
    cost: &CostMatrix<T>,
    p: &[T],
    q: &[T],
    eta: T,
    max_iters: usize,
    tol: T,
) -> Result<SinkhornOutcome<T>> {
    let n = cost.n();
    let k = cost.matrix().map(|c| (-c / eta).exp());
    let safe_div = |a: T, b: T| if b > T::zero() { a / b } else { T::zero() };
    let mut u = vec![T::one(); n];
    let mut v = vec![T::one(); n];
    let mut kv = vec![T::zero(); n];
    let mut ktu = vec![T::zero(); n];
    let mut iterations = 0;
    for it in 1..=max_iters {
        iterations = it;
        for i in 0..n {
            kv[i] = k.row(i).iter().zip(&v).map(|(a, b)| *a * *b).sum();
            u[i] = safe_div(p[i], kv[i]);
        }
        ktu.iter_mut().for_each(|x| *x = T::zero());
        for i in 0..n {
            for (acc, kij) in ktu.iter_mut().zip(k.row(i)) {
                *acc = *acc + *kij * u[i];
            }
        }
        for j in 0..n {
            v[j] = safe_div(q[j], ktu[j]);
        }
        // Columns are exact after the v update; only rows can drift.
        let mut residual = T::zero();
        for i in 0..n {
            let r: T = k.row(i).iter().zip(&v).map(|(a, b)| *a * *b).sum::<T>() * u[i];
            residual = residual + (r - p[i]).abs();
        }
        if residual < tol {
            break;
        }
    }
    let mut m = k;
    for i in 0..n {
        let ui = u[i];
        for (x, vj) in m.row_mut(i).iter_mut().zip(&v) {
            *x = ui * *x * *vj;
        }
    }
    Ok(finish(m, p, q, eta, iterations, tol))
}

fn log_sum_exp<T: Real>(values: impl Iterator<Item = T> + Clone) -> T {
    let m = values.clone().fold(T::neg_infinity(), T::max);
    if m == T::neg_infinity() {
        return m;
    }
    let s: T = values.map(|x| (x - m).exp()).sum();
    m + s.ln()
}

/// Log-domain potentials with regularization annealing: `eta` starts at the
/// largest cost and halves down to the requested value, warm-starting each
/// stage from the previous potentials. Intermediate stages run at most
/// `ANNEAL_STAGE_ITERS` sweeps; the final stage gets the full budget.
fn log_domain<T: Real>(
    cost: &CostMatrix<T>,
    p: &[T],
    q: &[T],
    eta: T,
    max_iters: usize,
    tol: T,
) -> Result<SinkhornOutcome<T>> {
    let n = cost.n();
    let c = cost.matrix();
    let log_p: Vec<T> = p.iter().map(|x| x.ln()).collect();
    let log_q: Vec<T> = q.iter().map(|x| x.ln()).collect();
    let mut f = vec![T::zero(); n];
    let mut g = vec![T::zero(); n];

    let mut schedule = Vec::new();
    let mut e = c.as_slice().iter().copied().fold(eta, T::max);
    let half = T::lit(0.5);
    while e > eta {
        schedule.push(e);
        e = e * half;
    }
    schedule.push(eta);

    let mut iterations = 0;
    let last = schedule.len() - 1;
    for (stage, &e) in schedule.iter().enumerate() {
        let budget = if stage == last {
            max_iters
        } else {
            ANNEAL_STAGE_ITERS
        };
        for it in 1..=budget {
            if stage == last {
                iterations = it;
            }
            for i in 0..n {
                let row = c.row(i);
                f[i] = e * (log_p[i] - log_sum_exp((0..n).map(|j| (g[j] - row[j]) / e)));
            }
            for j in 0..n {
                g[j] = e * (log_q[j] - log_sum_exp((0..n).map(|i| (f[i] - c.get(i, j)) / e)));
            }
            let mut residual = T::zero();
            for i in 0..n {
                let row = c.row(i);
                let r: T = (0..n).map(|j| ((f[i] + g[j] - row[j]) / e).exp()).sum();
                residual = residual + (r - p[i]).abs();
            }
            if residual < tol {
                break;
            }
        }
    }
    let mut m = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, ((f[i] + g[j] - c.get(i, j)) / eta).exp());
        }
    }
    Ok(finish(m, p, q, eta, iterations, tol))
}
