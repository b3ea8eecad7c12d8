//! Linear programming kernel.
//!
//! Problems are given in standard equality form
//!
//! ```text
//!   optimize  cᵀx   subject to  A x = b,  x ≥ 0
//! ```
//!
//! and solved by a two-phase primal simplex. The constraint matrix is kept
//! column-wise sparse and the basis inverse is held explicitly as a dense
//! `m × m` matrix, so the cost of a pivot scales with the number of rows and
//! nonzeros rather than with the full tableau. Pricing is Dantzig's rule
//! (most negative reduced cost, lowest index on ties); after
//! [`DEGENERACY_LIMIT`] consecutive degenerate pivots the solver switches to
//! Bland's rule for the rest of the phase.

use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::scalar::{max_abs, Scalar};

/// Entering/leaving pivot tolerance.
pub const PIVOT_TOL: f64 = 1e-10;

/// Relative phase-1 threshold above which a problem is declared infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-9;

/// Consecutive degenerate pivots tolerated before switching to Bland's rule.
pub const DEGENERACY_LIMIT: usize = 50;

/// Basis inverse is recomputed from scratch this often (floating types only).
const REFACTOR_EVERY: usize = 100;
/// Primal infeasibility tolerated by the ratio test on floating types.
const FEAS_TOL: f64 = 1e-9;
/// Smallest pivot accepted when exchanging a zero-level artificial.
const DRIVE_OUT_TOL: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    pub fn flip(self) -> Self {
        match self {
            Sense::Max => Sense::Min,
            Sense::Min => Sense::Max,
        }
    }
}

impl std::str::FromStr for Sense {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Sense::Max),
            "min" => Ok(Sense::Min),
            other => Err(Error::InvalidInput(format!("unknown sense {other:?}"))),
        }
    }
}

/// Equality-form LP with nonnegative variables.
#[derive(Clone, Debug)]
pub struct StandardLp<T> {
    n_rows: usize,
    objective: Vec<T>,
    col_start: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
    rhs: Vec<T>,
    sense: Sense,
}

impl<T: Scalar> StandardLp<T> {
    /// Empty problem with the given right-hand side; columns are appended
    /// with [`StandardLp::push_column`].
    pub fn new(rhs: Vec<T>, sense: Sense) -> Self {
        Self {
            n_rows: rhs.len(),
            objective: Vec::new(),
            col_start: vec![0],
            row_idx: Vec::new(),
            values: Vec::new(),
            rhs,
            sense,
        }
    }

    /// Builds the problem from a dense row-major constraint matrix.
    pub fn from_dense(objective: Vec<T>, matrix: &[Vec<T>], rhs: Vec<T>, sense: Sense) -> Result<Self> {
        if matrix.len() != rhs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} constraint rows but {} right-hand sides",
                matrix.len(),
                rhs.len()
            )));
        }
        if let Some(row) = matrix.iter().find(|r| r.len() != objective.len()) {
            return Err(Error::DimensionMismatch(format!(
                "constraint row of length {} for {} variables",
                row.len(),
                objective.len()
            )));
        }
        let mut lp = Self::new(rhs, sense);
        for (j, c) in objective.into_iter().enumerate() {
            let entries: Vec<(usize, T)> = matrix
                .iter()
                .enumerate()
                .filter(|(_, row)| !row[j].is_zero())
                .map(|(i, row)| (i, row[j].clone()))
                .collect();
            lp.push_column(c, entries);
        }
        Ok(lp)
    }

    /// Appends a variable with objective coefficient `cost` and the given
    /// `(row, coefficient)` entries. Returns the column index.
    pub fn push_column(&mut self, cost: T, entries: impl IntoIterator<Item = (usize, T)>) -> usize {
        for (r, v) in entries {
            if !v.is_zero() {
                self.row_idx.push(r);
                self.values.push(v);
            }
        }
        self.col_start.push(self.row_idx.len());
        self.objective.push(cost);
        self.objective.len() - 1
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.objective.len()
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn objective(&self) -> &[T] {
        &self.objective
    }

    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, &T)> {
        let span = self.col_start[j]..self.col_start[j + 1];
        self.row_idx[span.clone()].iter().copied().zip(&self.values[span])
    }

    /// Same problem with the opposite optimization sense.
    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    /// `cᵀx`.
    pub fn evaluate(&self, x: &[T]) -> T {
        self.objective
            .iter()
            .zip(x)
            .fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Largest absolute violation of `A x = b`.
    pub fn residual(&self, x: &[T]) -> T {
        let mut ax = vec![T::zero(); self.n_rows];
        for (j, xj) in x.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for (r, v) in self.column(j) {
                ax[r] = ax[r].clone() + v.clone() * xj.clone();
            }
        }
        ax.iter()
            .zip(&self.rhs)
            .fold(T::zero(), |acc, (a, b)| acc.max_of((a.clone() - b.clone()).abs()))
    }

    fn validate(&self) -> Result<()> {
        if self.row_idx.iter().any(|&r| r >= self.n_rows) {
            return Err(Error::DimensionMismatch("constraint entry outside the row range".into()));
        }
        let finite = self
            .objective
            .iter()
            .chain(&self.values)
            .chain(&self.rhs)
            .all(Scalar::is_finite_value);
        if !finite {
            return Err(Error::NonFinite("LP data".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Objective at `primal`, in the problem's own sense.
    pub value: T,
    pub primal: Vec<T>,
    pub iterations: usize,
    pub max_residual: T,
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// Solves `lp` with the two-phase primal simplex.
pub fn solve_lp<T: Scalar>(lp: &StandardLp<T>) -> Result<LpSolution<T>> {
    lp.validate()?;
    let m = lp.n_rows();
    let n = lp.n_cols();
    let cap = 200 * (m + n).max(1);
    let mut simplex = Simplex::new(lp, cap);

    // phase 1: minimize the sum of artificials
    let phase1_cost: Vec<T> = (0..n + m)
        .map(|j| if j < n { T::zero() } else { T::one() })
        .collect();
    simplex.run(&phase1_cost, true)?;
    let infeasibility = simplex.artificial_mass();
    let scale = T::one() + max_abs(lp.rhs());
    if infeasibility > T::tol(INFEASIBILITY_TOL) * scale {
        return Ok(simplex.finish(LpStatus::Infeasible));
    }
    simplex.drive_out_artificials()?;

    // phase 2 on the original objective, as a minimization
    let phase2_cost: Vec<T> = (0..n + m)
        .map(|j| match (j < n, lp.sense()) {
            (false, _) => T::zero(),
            (true, Sense::Min) => lp.objective()[j].clone(),
            (true, Sense::Max) => -lp.objective()[j].clone(),
        })
        .collect();
    let bounded = simplex.run(&phase2_cost, false)?;
    Ok(simplex.finish(if bounded {
        LpStatus::Optimal
    } else {
        LpStatus::Unbounded
    }))
}

struct Simplex<'a, T> {
    lp: &'a StandardLp<T>,
    m: usize,
    n: usize,
    /// sign of the artificial column of each row (so that it starts at |b|)
    art_sign: Vec<T>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<T>,
    xb: Vec<T>,
    iterations: usize,
    cap: usize,
    since_refactor: usize,
    piv_tol: T,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    fn new(lp: &'a StandardLp<T>, cap: usize) -> Self {
        let m = lp.n_rows();
        let n = lp.n_cols();
        let art_sign: Vec<T> = lp
            .rhs()
            .iter()
            .map(|b| if b.is_negative() { -T::one() } else { T::one() })
            .collect();
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            binv[i * m + i] = art_sign[i].clone();
        }
        let mut in_basis = vec![false; n + m];
        in_basis[n..].iter_mut().for_each(|b| *b = true);
        Self {
            lp,
            m,
            n,
            xb: lp.rhs().iter().map(|b| b.abs()).collect(),
            art_sign,
            basis: (n..n + m).collect(),
            in_basis,
            binv,
            iterations: 0,
            cap,
            since_refactor: 0,
            piv_tol: T::tol(PIVOT_TOL),
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, T)> {
        if j < self.n {
            self.lp.column(j).map(|(r, v)| (r, v.clone())).collect()
        } else {
            vec![(j - self.n, self.art_sign[j - self.n].clone())]
        }
    }

    /// `B⁻¹ a_j`.
    fn ftran(&self, j: usize) -> Vec<T> {
        let col = self.column(j);
        let m = self.m;
        (0..m)
            .map(|i| {
                col.iter().fold(T::zero(), |acc, (r, v)| {
                    acc + self.binv[i * m + r].clone() * v.clone()
                })
            })
            .collect()
    }

    /// Simplex multipliers `yᵀ = c_Bᵀ B⁻¹`.
    fn duals(&self, cost: &[T]) -> Vec<T> {
        let m = self.m;
        let mut y = vec![T::zero(); m];
        for (i, &bj) in self.basis.iter().enumerate() {
            let cb = &cost[bj];
            if cb.is_zero() {
                continue;
            }
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = yr.clone() + cb.clone() * self.binv[i * m + r].clone();
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[T], y: &[T]) -> T {
        if j < self.n {
            self.lp
                .column(j)
                .fold(cost[j].clone(), |acc, (r, v)| acc - y[r].clone() * v.clone())
        } else {
            let r = j - self.n;
            cost[j].clone() - y[r].clone() * self.art_sign[r].clone()
        }
    }

    /// Runs simplex pivots until optimal (`Ok(true)`) or an unbounded ray is
    /// found (`Ok(false)`). Artificial columns may enter only in phase 1.
    fn run(&mut self, cost: &[T], phase_one: bool) -> Result<bool> {
        let limit = if phase_one { self.n + self.m } else { self.n };
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let zero_step = T::tol(1e-12);
        loop {
            let y = self.duals(cost);
            let mut entering: Option<(usize, T)> = None;
            for j in 0..limit {
                if self.in_basis[j] {
                    continue;
                }
                let d = self.reduced_cost(j, cost, &y);
                if d >= -self.piv_tol.clone() {
                    continue;
                }
                match &entering {
                    Some((_, best)) if d >= *best => {}
                    _ => entering = Some((j, d)),
                }
                if bland {
                    break;
                }
            }
            let Some((q, _)) = entering else {
                return Ok(true);
            };

            let alpha = self.ftran(q);
            let leave = if T::EXACT {
                self.textbook_ratio(&alpha)
            } else {
                self.harris_ratio(&alpha)
            };
            let Some((r, theta)) = leave else {
                return Ok(false);
            };

            if theta <= zero_step {
                degenerate_run += 1;
                if degenerate_run > DEGENERACY_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            self.pivot(q, r, &alpha, theta)?;
        }
    }

    /// Minimum ratio with ties broken by the lowest basic variable index.
    fn textbook_ratio(&self, alpha: &[T]) -> Option<(usize, T)> {
        let mut leave: Option<(usize, T)> = None;
        for (i, a) in alpha.iter().enumerate() {
            if *a <= self.piv_tol {
                continue;
            }
            let theta = self.xb[i].clone().max_of(T::zero()) / a.clone();
            let better = match &leave {
                None => true,
                Some((k, best)) => {
                    theta < *best || (theta == *best && self.basis[i] < self.basis[*k])
                }
            };
            if better {
                leave = Some((i, theta));
            }
        }
        leave
    }

    /// Two-pass ratio test: bound the step with every basic variable allowed
    /// to go `FEAS_TOL` negative, then pick the largest pivot element among
    /// the rows whose exact ratio fits under that bound.
    fn harris_ratio(&self, alpha: &[T]) -> Option<(usize, T)> {
        let delta = T::tol(FEAS_TOL);
        let mut bound: Option<T> = None;
        for (i, a) in alpha.iter().enumerate() {
            if *a > self.piv_tol {
                let t = (self.xb[i].clone().max_of(T::zero()) + delta.clone()) / a.clone();
                if bound.as_ref().is_none_or(|b| t < *b) {
                    bound = Some(t);
                }
            }
        }
        let bound = bound?;
        let mut leave: Option<(usize, T)> = None;
        for (i, a) in alpha.iter().enumerate() {
            if *a <= self.piv_tol {
                continue;
            }
            let theta = self.xb[i].clone().max_of(T::zero()) / a.clone();
            if theta > bound {
                continue;
            }
            if leave.as_ref().is_none_or(|(k, _)| *a > alpha[*k]) {
                leave = Some((i, theta));
            }
        }
        leave
    }

    fn pivot(&mut self, q: usize, r: usize, alpha: &[T], theta: T) -> Result<()> {
        self.iterations += 1;
        if self.iterations > self.cap {
            return Err(Error::IterationLimit {
                pivots: self.iterations,
            });
        }
        let m = self.m;
        for (i, a) in alpha.iter().enumerate() {
            if i != r && !a.is_zero() {
                self.xb[i] = self.xb[i].clone() - theta.clone() * a.clone();
            }
        }
        self.xb[r] = theta;

        let piv = alpha[r].clone();
        let pivot_row: Vec<T> = self.binv[r * m..(r + 1) * m]
            .iter()
            .map(|v| v.clone() / piv.clone())
            .collect();
        for (i, a) in alpha.iter().enumerate() {
            if i == r || a.is_zero() {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (dst, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *dst = dst.clone() - a.clone() * p.clone();
                }
            }
        }
        self.binv[r * m..(r + 1) * m].clone_from_slice(&pivot_row);

        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;

        self.since_refactor += 1;
        if !T::EXACT && self.since_refactor >= REFACTOR_EVERY {
            self.refactor()?;
        }
        Ok(())
    }

    /// Recomputes `B⁻¹` and `x_B` from the basis columns (Gauss–Jordan with
    /// partial pivoting).
    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut a = vec![T::zero(); m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for (r, v) in self.column(j) {
                a[r * m + k] = v;
            }
        }
        let mut inv = vec![T::zero(); m * m];
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&x, &y| {
                    a[x * m + c]
                        .abs()
                        .partial_cmp(&a[y * m + c].abs())
                        .expect("finite")
                })
                .expect("nonempty");
            if a[p * m + c].abs() <= T::tol(1e-14) {
                return Err(Error::Numerical("singular basis during refactorization".into()));
            }
            if p != c {
                for k in 0..m {
                    a.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            let d = a[c * m + c].clone();
            for k in 0..m {
                a[c * m + k] = a[c * m + k].clone() / d.clone();
                inv[c * m + k] = inv[c * m + k].clone() / d.clone();
            }
            for i in 0..m {
                if i == c {
                    continue;
                }
                let f = a[i * m + c].clone();
                if f.is_zero() {
                    continue;
                }
                for k in 0..m {
                    a[i * m + k] = a[i * m + k].clone() - f.clone() * a[c * m + k].clone();
                    inv[i * m + k] = inv[i * m + k].clone() - f.clone() * inv[c * m + k].clone();
                }
            }
        }
        let b = self.lp.rhs();
        self.xb = (0..m)
            .map(|i| {
                (0..m).fold(T::zero(), |acc, k| {
                    acc + inv[i * m + k].clone() * b[k].clone()
                })
            })
            .collect();
        self.binv = inv;
        self.since_refactor = 0;
        Ok(())
    }

    fn artificial_mass(&self) -> T {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&j, _)| j >= self.n)
            .fold(T::zero(), |acc, (_, v)| acc + v.abs())
    }

    /// Pivots basic artificials (at level ≈ 0) out of the basis where some
    /// structural column has a usable entry in their row. Rows where none
    /// exists are redundant and keep their artificial at zero.
    fn drive_out_artificials(&mut self) -> Result<()> {
        let m = self.m;
        // in a redundant row every entry is round-off, so demand a real pivot
        let drive_tol = T::tol(DRIVE_OUT_TOL);
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let rho = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, T)> = None;
            for j in 0..self.n {
                if self.in_basis[j] {
                    continue;
                }
                let v = self
                    .lp
                    .column(j)
                    .fold(T::zero(), |acc, (i, a)| acc + rho[i].clone() * a.clone())
                    .abs();
                if v > drive_tol && best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(j);
                let theta = self.xb[r].clone() / alpha[r].clone();
                self.pivot(j, r, &alpha, theta)?;
            }
        }
        if !T::EXACT {
            self.refactor()?;
        }
        Ok(())
    }

    fn finish(&self, status: LpStatus) -> LpSolution<T> {
        let mut primal = vec![T::zero(); self.n];
        for (i, &j) in self.basis.iter().enumerate() {
            if j < self.n {
                primal[j] = self.xb[i].clone();
            }
        }
        LpSolution {
            status,
            value: self.lp.evaluate(&primal),
            max_residual: self.lp.residual(&primal),
            primal,
            iterations: self.iterations,
        }
    }
}

/// Optimal transport plan between two discrete measures.
#[derive(Clone, Debug)]
pub struct OtSolution<T> {
    pub value: T,
    /// `plan[i][k]` is the mass sent from atom `i` of `mu` to atom `k` of `nu`.
    pub plan: Vec<Vec<T>>,
    pub iterations: usize,
    pub max_residual: T,
}

/// Solves the transport LP between `mu` and `nu` for the given cost matrix.
///
/// The last column-sum constraint is implied by the others and is dropped.
pub fn solve_ot<T: Scalar>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    cost: &[Vec<T>],
    sense: Sense,
) -> Result<OtSolution<T>> {
    let (n1, n2) = (mu.len(), nu.len());
    if cost.len() != n1 || cost.iter().any(|row| row.len() != n2) {
        return Err(Error::DimensionMismatch(format!(
            "cost matrix must be {n1} × {n2}"
        )));
    }
    let rhs: Vec<T> = mu
        .weights()
        .iter()
        .chain(&nu.weights()[..n2 - 1])
        .cloned()
        .collect();
    let mut lp = StandardLp::new(rhs, sense);
    for (i, row) in cost.iter().enumerate() {
        for (k, c) in row.iter().enumerate() {
            let mut entries = vec![(i, T::one())];
            if k + 1 < n2 {
                entries.push((n1 + k, T::one()));
            }
            lp.push_column(c.clone(), entries);
        }
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        // the product coupling is always feasible and the feasible set is bounded
        return Err(Error::Numerical(format!(
            "transport LP reported {:?}",
            sol.status
        )));
    }
    let plan = sol.primal.chunks(n2).map(<[T]>::to_vec).collect();
    Ok(OtSolution {
        value: sol.value,
        plan,
        iterations: sol.iterations,
        max_residual: sol.max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn dense(obj: &[f64], a: &[&[f64]], b: &[f64], sense: Sense) -> StandardLp<f64> {
        let rows: Vec<Vec<f64>> = a.iter().map(|r| r.to_vec()).collect();
        StandardLp::from_dense(obj.to_vec(), &rows, b.to_vec(), sense).unwrap()
    }

    #[test]
    fn one_dimensional_box() {
        let lp = dense(&[1.0, 0.0], &[&[1.0, 1.0]], &[1.0], Sense::Max);
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.value, 1.0);
        assert_eq!(sol.primal, vec![1.0, 0.0]);
    }

    #[test]
    fn contradictory_equalities_are_infeasible() {
        let lp = dense(&[1.0], &[&[1.0], &[1.0]], &[1.0, 2.0], Sense::Min);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        // max x1 s.t. x1 - x2 = 1
        let lp = dense(&[1.0, 0.0], &[&[1.0, -1.0]], &[1.0], Sense::Max);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_rows() {
        // min x1 + x2 s.t. -x1 + x2 = -2  →  x1 = 2, x2 = 0
        let lp = dense(&[1.0, 1.0], &[&[-1.0, 1.0]], &[-2.0], Sense::Min);
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.value, 2.0);
        assert_eq!(sol.primal, vec![2.0, 0.0]);
    }

    #[test]
    fn redundant_rows_are_tolerated() {
        // x1 + x2 = 1 stated twice
        let lp = dense(&[1.0, 2.0], &[&[1.0, 1.0], &[1.0, 1.0]], &[1.0, 1.0], Sense::Max);
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert_eq!(sol.value, 2.0);
    }

    #[test]
    fn transport_two_by_two_matches_enumeration() {
        // feasible plans are [[t, .5-t], [.5-t, t]], t ∈ [0, .5]; cost 1 - 2t
        let oracle = (0..=500)
            .map(|k| {
                let t = k as f64 / 1000.0;
                (0.5 - t) * 2.0
            })
            .fold(f64::INFINITY, f64::min);
        let mu = DiscreteMeasure::from_f64(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let cost = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        let ot = solve_ot(&mu, &mu, &cost, Sense::Min).unwrap();
        assert_eq!(ot.value, oracle);
        assert_eq!(ot.plan, vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
    }

    #[test]
    fn ot_examples() {
        let d0 = DiscreteMeasure::dirac(0.0);
        let d1 = DiscreteMeasure::dirac(1.0);
        let ot = solve_ot(&d0, &d1, &[vec![7.0]], Sense::Min).unwrap();
        assert_eq!((ot.value, ot.plan), (7.0, vec![vec![1.0]]));

        let u01 = DiscreteMeasure::from_f64(&[0.0, 1.0], &[0.5, 0.5]).unwrap();
        let u23 = DiscreteMeasure::from_f64(&[2.0, 3.0], &[0.5, 0.5]).unwrap();
        let abs_cost = |a: &DiscreteMeasure<f64>, b: &DiscreteMeasure<f64>| -> Vec<Vec<f64>> {
            a.atoms()
                .iter()
                .map(|x| b.atoms().iter().map(|y| (x - y).abs()).collect())
                .collect()
        };
        assert_eq!(solve_ot(&u01, &u01, &abs_cost(&u01, &u01), Sense::Min).unwrap().value, 0.0);
        assert_eq!(solve_ot(&u01, &u23, &abs_cost(&u01, &u23), Sense::Min).unwrap().value, 2.0);
        assert!(solve_ot(&u01, &u23, &[vec![1.0]], Sense::Min).is_err());
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic instance cycles under naive Dantzig pivoting
        let lp = dense(
            &[0.0, 0.0, 0.0, -0.75, 150.0, -0.02, 6.0],
            &[
                &[1.0, 0.0, 0.0, 0.25, -60.0, -0.04, 9.0],
                &[0.0, 1.0, 0.0, 0.5, -90.0, -0.02, 3.0],
                &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0],
            ],
            &[0.0, 0.0, 1.0],
            Sense::Min,
        );
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        assert!((sol.value + 0.05).abs() < 1e-12);
    }

    #[test]
    fn exact_rational_solve() {
        let rows = vec![vec![ratio(1, 1), ratio(1, 1), ratio(0, 1)], vec![ratio(1, 3), ratio(0, 1), ratio(1, 1)]];
        let lp = StandardLp::<BigRational>::from_dense(
            vec![ratio(2, 1), ratio(1, 1), ratio(1, 1)],
            &rows,
            vec![ratio(1, 1), ratio(1, 7)],
            Sense::Max,
        )
        .unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert!(sol.is_optimal());
        // x1 ≤ 3/7 from the second row, rest goes to x2
        assert_eq!(sol.value, ratio(2 * 3 + 4, 7));
        assert!(sol.max_residual.is_zero());
    }

    #[test]
    fn input_validation() {
        assert!(matches!(
            StandardLp::from_dense(vec![1.0], &[vec![1.0, 2.0]], vec![1.0], Sense::Min),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            StandardLp::from_dense(vec![1.0], &[vec![1.0]], vec![1.0, 1.0], Sense::Min),
            Err(Error::DimensionMismatch(_))
        ));
        let lp = dense(&[f64::NAN], &[&[1.0]], &[1.0], Sense::Min);
        assert!(matches!(solve_lp(&lp), Err(Error::NonFinite(_))));
        let mut lp = StandardLp::new(vec![1.0], Sense::Min);
        lp.push_column(1.0, [(3, 1.0)]);
        assert!(matches!(solve_lp(&lp), Err(Error::DimensionMismatch(_))));
    }
}
