//! Discrete martingale optimal transport.
//!
//! For marginals `μ1 = Σ a_i δ_{x_i}` and `μ2 = Σ b_j δ_{y_j}` a martingale
//! coupling is a nonnegative matrix `q` with row sums `a`, column sums `b`
//! and, for every row, `Σ_j q_ij (y_j − x_i) = 0`. On a finite support these
//! barycenter identities are exactly the martingale condition. The LPs in
//! this module impose them unscaled: the row mass already weights each one.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::costexpr::PayoffExpr;
use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpStatus, Sense, StandardLp};
use crate::measures::{check_convex_order, DiscreteMeasure, MeasurePair, MERGE_TOL, ORDER_TOL};
use crate::scalar::{max_abs, Scalar};

/// Finitely supported probability measure on ℝ², stored on the product grid
/// `x_atoms × y_atoms` (row-major).
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling<T> {
    x_atoms: Vec<T>,
    y_atoms: Vec<T>,
    mass: Vec<T>,
}

impl<T: Scalar> Coupling<T> {
    /// Canonical coupling from a grid and a mass matrix.
    ///
    /// Atoms are sorted and near-duplicates (closer than `MERGE_TOL`) merged,
    /// empty rows and columns dropped, and the mass renormalized. Negative
    /// entries above `-1e-10` are treated as rounding noise and clamped.
    pub fn new(x_atoms: Vec<T>, y_atoms: Vec<T>, mass: Vec<Vec<T>>) -> Result<Self> {
        if mass.len() != x_atoms.len() || mass.iter().any(|r| r.len() != y_atoms.len()) {
            return Err(Error::DimensionMismatch(format!(
                "mass matrix must be {} × {}",
                x_atoms.len(),
                y_atoms.len()
            )));
        }
        let mut cells = Vec::new();
        for (i, row) in mass.iter().enumerate() {
            for (j, m) in row.iter().enumerate() {
                cells.push((x_atoms[i].clone(), y_atoms[j].clone(), m.clone()));
            }
        }
        Self::from_cells(&cells)
    }

    /// Canonical coupling from `(x, y, mass)` triples.
    pub fn from_cells(cells: &[(T, T, T)]) -> Result<Self> {
        if cells
            .iter()
            .any(|(x, y, m)| !x.is_finite_value() || !y.is_finite_value() || !m.is_finite_value())
        {
            return Err(Error::NonFinite("coupling".into()));
        }
        let noise = T::tol(1e-10);
        if cells.iter().any(|(_, _, m)| *m < -noise.clone()) {
            return Err(Error::InvalidInput("negative coupling mass".into()));
        }
        let live: Vec<&(T, T, T)> = cells.iter().filter(|c| c.2 > T::zero()).collect();
        if live.is_empty() {
            return Err(Error::EmptySupport);
        }
        let x_atoms = merged_axis(live.iter().map(|c| c.0.clone()).collect());
        let y_atoms = merged_axis(live.iter().map(|c| c.1.clone()).collect());
        let ny = y_atoms.len();
        let mut mass = vec![T::zero(); x_atoms.len() * ny];
        for (x, y, m) in live {
            let i = axis_index(&x_atoms, x);
            let j = axis_index(&y_atoms, y);
            mass[i * ny + j] = mass[i * ny + j].clone() + m.clone();
        }
        let total = mass.iter().fold(T::zero(), |acc, m| acc + m.clone());
        for m in &mut mass {
            *m = m.clone() / total.clone();
        }
        Ok(Self {
            x_atoms,
            y_atoms,
            mass,
        })
    }

    /// The coupling of `mu` with itself concentrated on the diagonal.
    pub fn identity(mu: &DiscreteMeasure<T>) -> Self {
        let n = mu.len();
        let mut mass = vec![T::zero(); n * n];
        for (i, w) in mu.weights().iter().enumerate() {
            mass[i * n + i] = w.clone();
        }
        Self {
            x_atoms: mu.atoms().to_vec(),
            y_atoms: mu.atoms().to_vec(),
            mass,
        }
    }

    /// Independent coupling `mu ⊗ nu`.
    pub fn product(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Self {
        let mass = mu
            .weights()
            .iter()
            .flat_map(|a| nu.weights().iter().map(move |b| a.clone() * b.clone()))
            .collect();
        Self {
            x_atoms: mu.atoms().to_vec(),
            y_atoms: nu.atoms().to_vec(),
            mass,
        }
    }

    pub fn x_atoms(&self) -> &[T] {
        &self.x_atoms
    }

    pub fn y_atoms(&self) -> &[T] {
        &self.y_atoms
    }

    pub fn mass(&self, i: usize, j: usize) -> &T {
        &self.mass[i * self.y_atoms.len() + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        let ny = self.y_atoms.len();
        &self.mass[i * ny..(i + 1) * ny]
    }

    /// Mass matrix as nested rows.
    pub fn mass_rows(&self) -> Vec<Vec<T>> {
        self.mass
            .chunks(self.y_atoms.len())
            .map(<[T]>::to_vec)
            .collect()
    }

    /// Cells with positive mass as `(x, y, mass)`.
    pub fn cells(&self) -> Vec<(T, T, T)> {
        let ny = self.y_atoms.len();
        self.mass
            .iter()
            .enumerate()
            .filter(|(_, m)| **m > T::zero())
            .map(|(k, m)| {
                (
                    self.x_atoms[k / ny].clone(),
                    self.y_atoms[k % ny].clone(),
                    m.clone(),
                )
            })
            .collect()
    }

    pub fn first_marginal(&self) -> Result<DiscreteMeasure<T>> {
        let w: Vec<T> = (0..self.x_atoms.len())
            .map(|i| self.row(i).iter().fold(T::zero(), |a, m| a + m.clone()))
            .collect();
        DiscreteMeasure::canonicalize(&self.x_atoms, &w)
    }

    pub fn second_marginal(&self) -> Result<DiscreteMeasure<T>> {
        let ny = self.y_atoms.len();
        let w: Vec<T> = (0..ny)
            .map(|j| {
                (0..self.x_atoms.len()).fold(T::zero(), |a, i| a + self.mass[i * ny + j].clone())
            })
            .collect();
        DiscreteMeasure::canonicalize(&self.y_atoms, &w)
    }

    /// Convex combination `(1 − λ)·self + λ·other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        let keep = T::one() - lambda.clone();
        let cells: Vec<(T, T, T)> = self
            .cells()
            .into_iter()
            .map(|(x, y, m)| (x, y, m * keep.clone()))
            .chain(
                other
                    .cells()
                    .into_iter()
                    .map(|(x, y, m)| (x, y, m * lambda.clone())),
            )
            .collect();
        Self::from_cells(&cells)
    }

    /// Largest per-atom deviation between this coupling's marginals and `pair`.
    pub fn marginal_error(&self, pair: &MeasurePair<T>) -> T {
        let (Ok(m1), Ok(m2)) = (self.first_marginal(), self.second_marginal()) else {
            return T::one();
        };
        measure_gap(&m1, &pair.mu1).max_of(measure_gap(&m2, &pair.mu2))
    }

    pub fn to_f64(&self) -> Coupling<f64> {
        Coupling {
            x_atoms: self.x_atoms.iter().map(Scalar::to_f64_lossy).collect(),
            y_atoms: self.y_atoms.iter().map(Scalar::to_f64_lossy).collect(),
            mass: self.mass.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

fn merged_axis<T: Scalar>(mut v: Vec<T>) -> Vec<T> {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let merge = T::tol(MERGE_TOL);
    let mut out: Vec<T> = Vec::with_capacity(v.len());
    for a in v {
        match out.last() {
            Some(last) if a.clone() - last.clone() < merge || a == *last => {}
            _ => out.push(a),
        }
    }
    out
}

fn axis_index<T: Scalar>(axis: &[T], v: &T) -> usize {
    // merged axes keep the smallest member of each group
    axis.partition_point(|a| a <= v).saturating_sub(1)
}

/// Largest difference of weights over the union of atoms (an atom missing
/// from one side counts with its full weight).
fn measure_gap<T: Scalar>(a: &DiscreteMeasure<T>, b: &DiscreteMeasure<T>) -> T {
    let mut gap = T::zero();
    let (mut i, mut j) = (0, 0);
    let merge = T::tol(MERGE_TOL);
    while i < a.len() || j < b.len() {
        let same = i < a.len() && j < b.len() && (a.atoms()[i].clone() - b.atoms()[j].clone()).abs() <= merge;
        if same {
            gap = gap.max_of((a.weights()[i].clone() - b.weights()[j].clone()).abs());
            i += 1;
            j += 1;
        } else if j >= b.len() || (i < a.len() && a.atoms()[i] < b.atoms()[j]) {
            gap = gap.max_of(a.weights()[i].clone());
            i += 1;
        } else {
            gap = gap.max_of(b.weights()[j].clone());
            j += 1;
        }
    }
    gap
}

/// `max_i |Σ_j q_ij (y_j − x_i)|`; zero exactly for martingale couplings.
pub fn martingale_residual<T: Scalar>(q: &Coupling<T>) -> T {
    (0..q.x_atoms.len())
        .map(|i| {
            let xi = &q.x_atoms[i];
            q.row(i)
                .iter()
                .zip(&q.y_atoms)
                .fold(T::zero(), |acc, (m, y)| acc + m.clone() * (y.clone() - xi.clone()))
                .abs()
        })
        .fold(T::zero(), |acc, r| acc.max_of(r))
}

/// Martingale transport problem `sup/inf { ∫Φ dQ : Q ∈ M(μ1, μ2) }`.
#[derive(Clone, Debug)]
pub struct MotProblem<T> {
    pub pair: MeasurePair<T>,
    pub payoff: PayoffExpr,
    pub sense: Sense,
}

impl<T: Scalar> MotProblem<T> {
    pub fn new(pair: MeasurePair<T>, payoff: PayoffExpr, sense: Sense) -> Self {
        Self {
            pair,
            payoff,
            sense,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport<T> {
    /// Optimal value `m(μ1, μ2)`.
    pub value: T,
    pub optimizer: Coupling<T>,
    pub martingale_residual: T,
    pub lp_iterations: usize,
}

/// `Φ(x_i, y_j)` on the product grid, row-major.
pub fn payoff_grid<T: Scalar>(payoff: &PayoffExpr, xs: &[T], ys: &[T]) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(xs.len() * ys.len());
    for x in xs {
        for y in ys {
            out.push(payoff.eval(x, y)?);
        }
    }
    Ok(out)
}

/// Row layout of the martingale constraint block for a given pair: first-
/// marginal rows, second-marginal rows (last one dropped as implied), then
/// one barycenter row per first-marginal atom.
struct MartingaleRows<'a, T> {
    pair: &'a MeasurePair<T>,
    offset: usize,
}

impl<'a, T: Scalar> MartingaleRows<'a, T> {
    fn count(pair: &MeasurePair<T>) -> usize {
        2 * pair.mu1.len() + pair.mu2.len() - 1
    }

    fn rhs(&self) -> impl Iterator<Item = T> + 'a {
        let n1 = self.pair.mu1.len();
        let n2 = self.pair.mu2.len();
        self.pair
            .mu1
            .weights()
            .iter()
            .chain(&self.pair.mu2.weights()[..n2 - 1])
            .cloned()
            .chain(std::iter::repeat_n(T::zero(), n1))
    }

    /// Entries contributed by mass at grid cell `(i, j)`.
    fn entries(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, T)> {
        let n1 = self.pair.mu1.len();
        let n2 = self.pair.mu2.len();
        let drift = self.pair.mu2.atoms()[j].clone() - self.pair.mu1.atoms()[i].clone();
        let o = self.offset;
        [
            Some((o + i, T::one())),
            (j + 1 < n2).then(|| (o + n1 + j, T::one())),
            Some((o + n1 + n2 - 1 + i, drift)),
        ]
        .into_iter()
        .flatten()
    }
}

fn martingale_lp<T: Scalar>(pair: &MeasurePair<T>, objective: &[T], sense: Sense) -> StandardLp<T> {
    let rows = MartingaleRows { pair, offset: 0 };
    let mut lp = StandardLp::new(rows.rhs().collect(), sense);
    let n2 = pair.mu2.len();
    for (k, c) in objective.iter().enumerate() {
        lp.push_column(c.clone(), rows.entries(k / n2, k % n2));
    }
    lp
}

fn coupling_from_primal<T: Scalar>(pair: &MeasurePair<T>, primal: &[T]) -> Result<Coupling<T>> {
    let n2 = pair.mu2.len();
    let cells: Vec<(T, T, T)> = primal
        .iter()
        .enumerate()
        .map(|(k, m)| {
            (
                pair.mu1.atoms()[k / n2].clone(),
                pair.mu2.atoms()[k % n2].clone(),
                m.clone().max_of(T::zero()),
            )
        })
        .collect();
    Coupling::from_cells(&cells)
}

fn require_order<T: Scalar>(pair: &MeasurePair<T>) -> Result<()> {
    let verdict = check_convex_order(&pair.mu1, &pair.mu2, &T::tol(ORDER_TOL));
    if verdict.holds() {
        Ok(())
    } else {
        Err(Error::NotInConvexOrder {
            verdict: verdict.to_f64(),
        })
    }
}

/// Whether the martingale constraints for `pair` admit a feasible point,
/// decided by the LP alone (no convex-order pre-check).
pub fn martingale_lp_feasible<T: Scalar>(pair: &MeasurePair<T>) -> Result<bool> {
    let zeros = vec![T::zero(); pair.mu1.len() * pair.mu2.len()];
    let sol = solve_lp(&martingale_lp(pair, &zeros, Sense::Min))?;
    Ok(sol.status != LpStatus::Infeasible)
}

/// Solves the martingale transport LP.
pub fn solve_mot<T: Scalar>(p: &MotProblem<T>) -> Result<SolveReport<T>> {
    require_order(&p.pair)?;
    let grid = payoff_grid(&p.payoff, p.pair.mu1.atoms(), p.pair.mu2.atoms())?;
    let sol = solve_lp(&martingale_lp(&p.pair, &grid, p.sense))?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Numerical(
                "martingale LP infeasible although the marginals are in convex order".into(),
            ))
        }
        LpStatus::Unbounded => {
            return Err(Error::Numerical("martingale LP reported unbounded".into()))
        }
    }
    let optimizer = coupling_from_primal(&p.pair, &sol.primal)?;
    Ok(SolveReport {
        value: sol.value,
        martingale_residual: martingale_residual(&optimizer),
        optimizer,
        lp_iterations: sol.iterations,
    })
}

/// Direction used to explore the ε-optimal face.
#[derive(Clone, Debug)]
pub enum ProbeDirection<T> {
    /// Maximize `∫ψ dQ`.
    Payoff(PayoffExpr),
    /// Maximize `Σ w_ij q_ij` for explicit row-major grid weights.
    Weights(Vec<T>),
}

/// Default probes: `±Φ`, `±abs(x2 − x1)`, `±x1·x2` and four seeded random
/// linear functionals on the mass matrix.
pub fn default_probe_directions<T: Scalar>(
    p: &MotProblem<T>,
    seed: u64,
) -> Vec<ProbeDirection<T>> {
    let spread = PayoffExpr::parse("abs(x2 - x1)").expect("static expression");
    let cross = PayoffExpr::parse("x1 * x2").expect("static expression");
    let mut dirs = Vec::new();
    for e in [&p.payoff, &spread, &cross] {
        dirs.push(ProbeDirection::Payoff(e.clone()));
        dirs.push(ProbeDirection::Payoff(e.negated()));
    }
    let cells = p.pair.mu1.len() * p.pair.mu2.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..4 {
        let w = (0..cells)
            .map(|_| T::from_f64_lossy(rng.gen_range(-1.0..1.0)))
            .collect();
        dirs.push(ProbeDirection::Weights(w));
    }
    dirs
}

/// Explores the ε-optimal face of `p`: for every direction maximizes it over
/// the martingale couplings whose payoff is within `eps` of the optimum.
///
/// `eps = None` uses `1e-8·(1 + |m|)`.
pub fn optimizer_probe<T: Scalar>(
    p: &MotProblem<T>,
    directions: &[ProbeDirection<T>],
    eps: Option<T>,
) -> Result<Vec<Coupling<T>>> {
    let report = solve_mot(p)?;
    let m = report.value;
    let eps = eps.unwrap_or_else(|| T::tol(1e-8) * (T::one() + m.abs()));
    let (xs, ys) = (p.pair.mu1.atoms(), p.pair.mu2.atoms());
    let grid = payoff_grid(&p.payoff, xs, ys)?;
    let rows = MartingaleRows {
        pair: &p.pair,
        offset: 0,
    };
    let face_row = MartingaleRows::<T>::count(&p.pair);
    // Σ qΦ ∓ s = m ∓ eps with a slack s ≥ 0
    let (threshold, slack) = match p.sense {
        Sense::Max => (m.clone() - eps, -T::one()),
        Sense::Min => (m.clone() + eps, T::one()),
    };
    let n2 = ys.len();
    let mut out = Vec::with_capacity(directions.len());
    for dir in directions {
        let objective = match dir {
            ProbeDirection::Payoff(e) => payoff_grid(e, xs, ys)?,
            ProbeDirection::Weights(w) => {
                if w.len() != grid.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "probe weights must have {} entries",
                        grid.len()
                    )));
                }
                w.clone()
            }
        };
        let mut rhs: Vec<T> = rows.rhs().collect();
        rhs.push(threshold.clone());
        let mut lp = StandardLp::new(rhs, Sense::Max);
        for (k, c) in objective.into_iter().enumerate() {
            let entries = rows
                .entries(k / n2, k % n2)
                .chain(std::iter::once((face_row, grid[k].clone())));
            lp.push_column(c, entries);
        }
        lp.push_column(T::zero(), [(face_row, slack.clone())]);
        let sol = solve_lp(&lp)?;
        if !sol.is_optimal() {
            return Err(Error::Numerical(format!(
                "optimal-face probe reported {:?}",
                sol.status
            )));
        }
        out.push(coupling_from_primal(&p.pair, &sol.primal[..grid.len()])?);
    }
    Ok(out)
}

/// Result of a W1 projection onto a set of martingale couplings.
#[derive(Clone, Debug)]
pub struct Projection<T> {
    pub distance: T,
    pub nearest: Coupling<T>,
    pub lp_iterations: usize,
}

/// Restriction of the target set to near-optimal couplings.
struct FaceConstraint<'a, T> {
    payoff: &'a PayoffExpr,
    sense: Sense,
    /// payoff must be ≥ (max) or ≤ (min) this value
    threshold: T,
}

/// `W1(q, M(pair))` with ground cost `|x − x'| + |y − y'|`, and a minimizer.
///
/// One joint LP: variables `π(s, i, j)` move the mass of cell `s` of `q` to
/// grid cell `(x_i, y_j)` of the pair; the image `q'_ij = Σ_s π(s, i, j)` is
/// constrained to be a martingale coupling of `pair`.
pub fn project_to_martingale_set<T: Scalar>(
    q: &Coupling<T>,
    pair: &MeasurePair<T>,
) -> Result<Projection<T>> {
    project(q, pair, None)
}

/// Like [`project_to_martingale_set`], with the target set cut down to the
/// couplings whose payoff is within `eps` of the optimal value of `p`
/// (`eps = None` uses `1e-6·(1 + |m|)`).
pub fn project_to_optimal_face<T: Scalar>(
    q: &Coupling<T>,
    p: &MotProblem<T>,
    eps: Option<T>,
) -> Result<Projection<T>> {
    let m = solve_mot(p)?.value;
    project_to_face_of_value(q, p, m, eps)
}

/// [`project_to_optimal_face`] with the optimal value `m` of `p` supplied by
/// the caller.
pub fn project_to_face_of_value<T: Scalar>(
    q: &Coupling<T>,
    p: &MotProblem<T>,
    m: T,
    eps: Option<T>,
) -> Result<Projection<T>> {
    let eps = eps.unwrap_or_else(|| T::tol(1e-6) * (T::one() + m.abs()));
    let threshold = match p.sense {
        Sense::Max => m - eps,
        Sense::Min => m + eps,
    };
    project(
        q,
        &p.pair,
        Some(FaceConstraint {
            payoff: &p.payoff,
            sense: p.sense,
            threshold,
        }),
    )
}

fn project<T: Scalar>(
    q: &Coupling<T>,
    pair: &MeasurePair<T>,
    face: Option<FaceConstraint<'_, T>>,
) -> Result<Projection<T>> {
    require_order(pair)?;
    let source = q.cells();
    let n_src = source.len();
    let (xs, ys) = (pair.mu1.atoms(), pair.mu2.atoms());
    let (n1, n2) = (xs.len(), ys.len());
    let rows = MartingaleRows { pair, offset: n_src };
    let face_row = n_src + MartingaleRows::<T>::count(pair);

    let mut rhs: Vec<T> = source.iter().map(|c| c.2.clone()).collect();
    rhs.extend(rows.rhs());
    let face_grid = match &face {
        Some(f) => {
            rhs.push(f.threshold.clone());
            Some(payoff_grid(f.payoff, xs, ys)?)
        }
        None => None,
    };
    let mut lp = StandardLp::new(rhs, Sense::Min);
    for (s, (sx, sy, _)) in source.iter().enumerate() {
        for i in 0..n1 {
            let dx = (sx.clone() - xs[i].clone()).abs();
            for j in 0..n2 {
                let cost = dx.clone() + (sy.clone() - ys[j].clone()).abs();
                let face_entry = face_grid
                    .as_ref()
                    .map(|g| (face_row, g[i * n2 + j].clone()));
                let entries = std::iter::once((s, T::one()))
                    .chain(rows.entries(i, j))
                    .chain(face_entry);
                lp.push_column(cost, entries);
            }
        }
    }
    if let Some(f) = &face {
        let slack = match f.sense {
            Sense::Max => -T::one(),
            Sense::Min => T::one(),
        };
        lp.push_column(T::zero(), [(face_row, slack)]);
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Err(Error::Numerical(format!(
            "projection LP reported {:?}",
            sol.status
        )));
    }
    let cells = n1 * n2;
    let mut image = vec![T::zero(); cells];
    for (k, v) in sol.primal[..n_src * cells].iter().enumerate() {
        let c = k % cells;
        image[c] = image[c].clone() + v.clone();
    }
    Ok(Projection {
        distance: sol.value.max_of(T::zero()),
        nearest: coupling_from_primal(pair, &image)?,
        lp_iterations: sol.iterations,
    })
}

/// Mass-weighted check that `q` is a martingale coupling of `pair` within
/// `tol` (residual and marginals).
pub fn is_martingale_coupling<T: Scalar>(q: &Coupling<T>, pair: &MeasurePair<T>, tol: &T) -> bool {
    let scale = T::one()
        + max_abs(q.x_atoms())
            .max_of(max_abs(q.y_atoms()));
    martingale_residual(q) <= tol.clone() * scale && q.marginal_error(pair) <= *tol
}
