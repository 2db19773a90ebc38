use super::{check_marginal, uniform_marginal, CostMatrix, PlanKind, SquareMatrix, TransportPlan};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Below this regularization the relaxed solver exponentiates costs shifted
/// by their row (or column) minimum, so that no kernel row or column
/// underflows to all zeros.
pub const SHIFT_BELOW_ETA: f64 = 1e-2;

/// Which per-line constant was subtracted from the costs before
/// exponentiating.
///
/// A row shift multiplies each kernel row by a positive constant, which
/// leaves the row-relaxed plan unchanged but not the column-relaxed one (and
/// symmetrically for columns).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelShift {
    None,
    Rows,
    Cols,
}

/// `exp(-C / eta)`, possibly with shifted costs.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsKernel<T> {
    pub matrix: SquareMatrix<T>,
    pub eta: T,
    pub shift: KernelShift,
}

fn check_eta<T: Real>(eta: T) -> Result<()> {
    if !(eta > T::zero()) || !eta.is_finite() {
        return Err(Error::contract(format!(
            "regularization must be positive and finite, got {eta}"
        )));
    }
    Ok(())
}

/// Element-wise `exp(-c_ij / eta)`.
pub fn gibbs_kernel<T: Real>(cost: &CostMatrix<T>, eta: T) -> Result<GibbsKernel<T>> {
    check_eta(eta)?;
    Ok(GibbsKernel {
        matrix: cost.matrix().map(|c| (-c / eta).exp()),
        eta,
        shift: KernelShift::None,
    })
}

/// Element-wise `exp(-(c_ij - m) / eta)` where `m` is the minimum cost of the
/// entry's row (`Rows`) or column (`Cols`). Every row (resp. column) then
/// holds at least one entry equal to 1.
pub fn gibbs_kernel_shifted<T: Real>(
    cost: &CostMatrix<T>,
    eta: T,
    shift: KernelShift,
) -> Result<GibbsKernel<T>> {
    check_eta(eta)?;
    let n = cost.n();
    let c = cost.matrix();
    let mut out = SquareMatrix::zeros(n);
    match shift {
        KernelShift::None => return gibbs_kernel(cost, eta),
        KernelShift::Rows => {
            for i in 0..n {
                let m = c.row(i).iter().copied().fold(T::infinity(), T::min);
                for j in 0..n {
                    out.set(i, j, (-(c.get(i, j) - m) / eta).exp());
                }
            }
        }
        KernelShift::Cols => {
            let mut mins = vec![T::infinity(); n];
            for i in 0..n {
                for (m, v) in mins.iter_mut().zip(c.row(i)) {
                    *m = m.min(*v);
                }
            }
            for i in 0..n {
                for j in 0..n {
                    out.set(i, j, (-(c.get(i, j) - mins[j]) / eta).exp());
                }
            }
        }
    }
    Ok(GibbsKernel {
        matrix: out,
        eta,
        shift,
    })
}

/// Row-constrained closed form: `T_U = diag(p / (K 1)) K`.
///
/// Row `i` of the result sums to `p_i`; columns are unconstrained.
pub fn relax_rows<T: Real>(kernel: &GibbsKernel<T>, p: &[T]) -> Result<TransportPlan<T>> {
    if kernel.shift == KernelShift::Cols {
        return Err(Error::contract(
            "row relaxation needs an unshifted or row-shifted kernel",
        ));
    }
    let n = kernel.matrix.n();
    check_marginal(p, n, "p")?;
    let mut m = kernel.matrix.clone();
    for i in 0..n {
        let row = m.row_mut(i);
        let s: T = row.iter().copied().sum();
        if !(s > T::zero()) {
            return Err(Error::contract(format!("kernel row {i} sums to zero")));
        }
        let scale = p[i] / s;
        for v in row.iter_mut() {
            *v = *v * scale;
        }
    }
    Ok(TransportPlan {
        matrix: m,
        p: Some(p.to_vec()),
        q: None,
        eta: Some(kernel.eta),
        kind: PlanKind::RowRelaxed,
    })
}

/// Column-constrained closed form: `T_V = K diag(q / (1ᵀ K))`.
pub fn relax_cols<T: Real>(kernel: &GibbsKernel<T>, q: &[T]) -> Result<TransportPlan<T>> {
    if kernel.shift == KernelShift::Rows {
        return Err(Error::contract(
            "column relaxation needs an unshifted or column-shifted kernel",
        ));
    }
    let n = kernel.matrix.n();
    check_marginal(q, n, "q")?;
    let sums = kernel.matrix.col_sums();
    if let Some(j) = sums.iter().position(|s| !(*s > T::zero())) {
        return Err(Error::contract(format!("kernel column {j} sums to zero")));
    }
    let scale: Vec<T> = q.iter().zip(&sums).map(|(q, s)| *q / *s).collect();
    let mut m = kernel.matrix.clone();
    for i in 0..n {
        for (v, s) in m.row_mut(i).iter_mut().zip(&scale) {
            *v = *v * *s;
        }
    }
    Ok(TransportPlan {
        matrix: m,
        p: None,
        q: Some(q.to_vec()),
        eta: Some(kernel.eta),
        kind: PlanKind::ColRelaxed,
    })
}

/// Element-wise maximum `T* = max(T_U, T_V)`.
pub fn combine_max<T: Real>(
    t_u: &TransportPlan<T>,
    t_v: &TransportPlan<T>,
) -> Result<TransportPlan<T>> {
    if t_u.n() != t_v.n() {
        return Err(Error::contract(format!(
            "cannot combine {}x{} and {}x{} plans",
            t_u.n(),
            t_u.n(),
            t_v.n(),
            t_v.n()
        )));
    }
    if t_u.eta != t_v.eta {
        return Err(Error::contract("cannot combine plans with different eta"));
    }
    let n = t_u.n();
    let data = t_u
        .matrix
        .as_slice()
        .iter()
        .zip(t_v.matrix.as_slice())
        .map(|(a, b)| a.max(*b))
        .collect();
    Ok(TransportPlan {
        matrix: SquareMatrix::from_vec(n, data)?,
        p: t_u.p.clone().or_else(|| t_v.p.clone()),
        q: t_v.q.clone().or_else(|| t_u.q.clone()),
        eta: t_u.eta,
        kind: PlanKind::Combined,
    })
}

/// Maps source point `i` to the plan-weighted mean of the targets,
/// `sum_j T_ij y_j / sum_j T_ij`.
pub fn barycentric_apply<T: Real>(
    plan: &TransportPlan<T>,
    targets: &[[T; 2]],
) -> Result<Vec<[T; 2]>> {
    let n = plan.n();
    if targets.len() != n {
        return Err(Error::contract(format!(
            "plan is {n}x{n} but {} targets were given",
            targets.len()
        )));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let row = plan.matrix.row(i);
        let mut w = T::zero();
        let mut x = T::zero();
        let mut y = T::zero();
        for (t, g) in row.iter().zip(targets) {
            w = w + *t;
            x = x + *t * g[0];
            y = y + *t * g[1];
        }
        if !(w > T::zero()) {
            return Err(Error::contract(format!("plan row {i} has zero mass")));
        }
        out.push([x / w, y / w]);
    }
    Ok(out)
}

/// Relaxed solver: both closed-form plans combined by element-wise maximum.
/// Quadratic in `n`.
///
/// Fused form of `combine_max(relax_rows(K, p), relax_cols(K, q))`: since
/// `T_U = a_i K_ij` and `T_V = b_j K_ij`, the combined plan is
/// `K_ij max(a_i, b_j)` and only one `n x n` matrix is written. In the
/// unshifted case the result is bit-identical to the three-step form.
pub fn relaxed_plan<T: Real>(
    cost: &CostMatrix<T>,
    p: &[T],
    q: &[T],
    eta: T,
) -> Result<TransportPlan<T>> {
    check_eta(eta)?;
    let n = cost.n();
    check_marginal(p, n, "p")?;
    check_marginal(q, n, "q")?;
    let c = cost.matrix();
    let matrix = if eta < T::lit(SHIFT_BELOW_ETA) {
        fused_shifted(c, p, q, eta)?
    } else {
        fused_plain(c, p, q, eta)?
    };
    Ok(TransportPlan {
        matrix,
        p: Some(p.to_vec()),
        q: Some(q.to_vec()),
        eta: Some(eta),
        kind: PlanKind::Combined,
    })
}

fn line_scales<T: Real>(marginal: &[T], sums: &[T], what: &str) -> Result<Vec<T>> {
    marginal
        .iter()
        .zip(sums)
        .enumerate()
        .map(|(i, (m, s))| {
            if *s > T::zero() {
                Ok(*m / *s)
            } else {
                Err(Error::contract(format!("kernel {what} {i} sums to zero")))
            }
        })
        .collect()
}

fn fused_plain<T: Real>(c: &SquareMatrix<T>, p: &[T], q: &[T], eta: T) -> Result<SquareMatrix<T>> {
    let n = c.n();
    let mut k = c.map(|v| (-v / eta).exp());
    let row_sums = k.row_sums();
    let col_sums = k.col_sums();
    let a = line_scales(p, &row_sums, "row")?;
    let b = line_scales(q, &col_sums, "column")?;
    for i in 0..n {
        let ai = a[i];
        for (v, bj) in k.row_mut(i).iter_mut().zip(&b) {
            *v = *v * ai.max(*bj);
        }
    }
    Ok(k)
}

/// Shifted variant: `T_U = exp(ln a_i + m_i/eta - c/eta)` with row minima
/// `m_i`, `T_V` likewise with column minima, and the maximum taken in the
/// exponent.
fn fused_shifted<T: Real>(c: &SquareMatrix<T>, p: &[T], q: &[T], eta: T) -> Result<SquareMatrix<T>> {
    let n = c.n();
    let mut row_min = vec![T::infinity(); n];
    let mut col_min = vec![T::infinity(); n];
    for i in 0..n {
        for (j, v) in c.row(i).iter().enumerate() {
            row_min[i] = row_min[i].min(*v);
            col_min[j] = col_min[j].min(*v);
        }
    }
    let mut row_sums = vec![T::zero(); n];
    let mut col_sums = vec![T::zero(); n];
    for i in 0..n {
        let mut rs = T::zero();
        for (j, v) in c.row(i).iter().enumerate() {
            rs = rs + (-(*v - row_min[i]) / eta).exp();
            col_sums[j] = col_sums[j] + (-(*v - col_min[j]) / eta).exp();
        }
        row_sums[i] = rs;
    }
    let a = line_scales(p, &row_sums, "row")?;
    let b = line_scales(q, &col_sums, "column")?;
    let alpha: Vec<T> = a.iter().zip(&row_min).map(|(a, m)| a.ln() + *m / eta).collect();
    let beta: Vec<T> = b.iter().zip(&col_min).map(|(b, m)| b.ln() + *m / eta).collect();
    let mut out = SquareMatrix::zeros(n);
    for i in 0..n {
        let ai = alpha[i];
        for ((o, v), bj) in out.row_mut(i).iter_mut().zip(c.row(i)).zip(&beta) {
            *o = (ai.max(*bj) - *v / eta).exp();
        }
    }
    Ok(out)
}

/// Moves every source point onto the barycentre of the targets under the
/// relaxed plan with uniform marginals.
pub fn denoise_points<T: Real>(
    source: &[[T; 2]],
    targets: &[[T; 2]],
    eta: T,
) -> Result<Vec<[T; 2]>> {
    let cost = super::cost_matrix(source, targets)?;
    let u = uniform_marginal(source.len());
    let plan = relaxed_plan(&cost, &u, &u, eta)?;
    barycentric_apply(&plan, targets)
}
