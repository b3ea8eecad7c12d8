//! Finitely supported probability measures on the real line.
//!
//! A [`DiscreteMeasure`] is always kept in canonical form: strictly
//! increasing atoms, strictly positive weights, unit total mass. The module
//! also provides the convex-order test through potential functions, the
//! closed-form 1-Wasserstein distance and quantile-block quantization.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{sum, Scalar};

/// Atoms closer than this are merged during canonicalization.
pub const MERGE_TOL: f64 = 1e-12;

/// Default tolerance of [`check_convex_order`].
pub const ORDER_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<T> {
    atoms: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> DiscreteMeasure<T> {
    /// Builds the canonical measure from raw atoms and nonnegative weights.
    ///
    /// Zero-weight atoms are dropped, atoms are sorted, neighbours closer
    /// than [`MERGE_TOL`] are merged at their weighted mean, and the weights
    /// are renormalized to unit mass.
    pub fn canonicalize(atoms: &[T], weights: &[T]) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.iter().chain(weights).any(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite("measure atoms or weights".into()));
        }
        if weights.iter().any(|w| *w < T::zero()) {
            return Err(Error::InvalidInput("negative weight".into()));
        }
        let mut pts: Vec<(T, T)> = atoms
            .iter()
            .zip(weights)
            .filter(|(_, w)| **w > T::zero())
            .map(|(a, w)| (a.clone(), w.clone()))
            .collect();
        if pts.is_empty() {
            return Err(Error::EmptySupport);
        }
        pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite atoms"));

        let merge = T::tol(MERGE_TOL);
        let mut out_atoms: Vec<T> = Vec::with_capacity(pts.len());
        let mut out_weights: Vec<T> = Vec::with_capacity(pts.len());
        let mut groups: Vec<Vec<(T, T)>> = Vec::new();
        for (a, w) in pts {
            let joins = match groups.last().and_then(|g| g.last()) {
                Some((last, _)) if T::EXACT => a == *last,
                Some((last, _)) => a.clone() - last.clone() < merge,
                None => false,
            };
            if joins {
                groups.last_mut().expect("nonempty").push((a, w));
            } else {
                groups.push(vec![(a, w)]);
            }
        }
        for mut g in groups {
            let mass = g.iter().fold(T::zero(), |acc, (_, w)| acc + w.clone());
            if g.iter().all(|(a, _)| *a == g[0].0) {
                out_atoms.push(g.swap_remove(0).0);
                out_weights.push(mass);
                continue;
            }
            let moment = g
                .iter()
                .fold(T::zero(), |acc, (a, w)| acc + a.clone() * w.clone());
            out_atoms.push(moment / mass.clone());
            out_weights.push(mass);
        }
        let total = sum(&out_weights);
        for w in &mut out_weights {
            *w = w.clone() / total.clone();
        }
        Ok(Self {
            atoms: out_atoms,
            weights: out_weights,
        })
    }

    /// Convenience constructor from doubles.
    pub fn from_f64(atoms: &[f64], weights: &[f64]) -> Result<Self> {
        if atoms.iter().chain(weights).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("measure atoms or weights".into()));
        }
        let a: Vec<T> = atoms.iter().map(|&v| T::from_f64_lossy(v)).collect();
        let w: Vec<T> = weights.iter().map(|&v| T::from_f64_lossy(v)).collect();
        Self::canonicalize(&a, &w)
    }

    pub fn dirac(at: T) -> Self {
        Self {
            atoms: vec![at],
            weights: vec![T::one()],
        }
    }

    /// Equal weights on the given points.
    pub fn uniform(points: &[T]) -> Result<Self> {
        let w = vec![T::one(); points.len()];
        Self::canonicalize(points, &w)
    }

    pub fn atoms(&self) -> &[T] {
        &self.atoms
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&T, &T)> {
        self.atoms.iter().zip(&self.weights)
    }

    pub fn mean(&self) -> T {
        self.iter()
            .fold(T::zero(), |acc, (a, w)| acc + a.clone() * w.clone())
    }

    /// `∫ f dμ`.
    pub fn integrate(&self, f: impl Fn(&T) -> T) -> T {
        self.iter().fold(T::zero(), |acc, (a, w)| acc + f(a) * w.clone())
    }

    /// Convex mixture `(1 − λ)·self + λ·other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        let keep = T::one() - lambda.clone();
        let atoms: Vec<T> = self.atoms.iter().chain(&other.atoms).cloned().collect();
        let weights: Vec<T> = self
            .weights
            .iter()
            .map(|w| w.clone() * keep.clone())
            .chain(other.weights.iter().map(|w| w.clone() * lambda.clone()))
            .collect();
        Self::canonicalize(&atoms, &weights)
    }

    /// Lossy conversion to the working double representation.
    pub fn to_f64(&self) -> DiscreteMeasure<f64> {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(Scalar::to_f64_lossy).collect(),
            weights: self.weights.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }

    /// Debug check of the canonical-form invariants.
    pub fn is_canonical(&self) -> bool {
        let mass = sum(&self.weights);
        self.atoms.len() == self.weights.len()
            && !self.atoms.is_empty()
            && self.weights.iter().all(|w| *w > T::zero())
            && self.atoms.windows(2).all(|p| p[0] < p[1])
            && (mass - T::one()).abs() <= T::tol(1e-12)
    }
}

/// Pair of marginals `(μ1, μ2)`. Convex order is not enforced here; every
/// solver re-checks it.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurePair<T> {
    pub mu1: DiscreteMeasure<T>,
    pub mu2: DiscreteMeasure<T>,
}

impl<T: Scalar> MeasurePair<T> {
    pub fn new(mu1: DiscreteMeasure<T>, mu2: DiscreteMeasure<T>) -> Self {
        Self { mu1, mu2 }
    }
}

/// Potential function `u_μ(x) = Σ w_i |x − a_i|`.
pub fn potential<T: Scalar>(mu: &DiscreteMeasure<T>, x: &T) -> T {
    mu.integrate(|a| (x.clone() - a.clone()).abs())
}

/// Result of the convex-order test.
#[derive(Clone, Debug, PartialEq)]
pub enum OrderVerdict<T> {
    Holds,
    /// Means differ by more than the tolerance; `gap = mean(μ1) − mean(μ2)`.
    FailsMean { gap: T },
    /// `u_μ1(x) − u_μ2(x) = gap` exceeds the tolerance at the witness `x`.
    FailsAt { x: T, gap: T },
}

impl<T: Scalar> OrderVerdict<T> {
    pub fn holds(&self) -> bool {
        matches!(self, OrderVerdict::Holds)
    }

    pub fn to_f64(&self) -> OrderVerdict<f64> {
        match self {
            OrderVerdict::Holds => OrderVerdict::Holds,
            OrderVerdict::FailsMean { gap } => OrderVerdict::FailsMean {
                gap: gap.to_f64_lossy(),
            },
            OrderVerdict::FailsAt { x, gap } => OrderVerdict::FailsAt {
                x: x.to_f64_lossy(),
                gap: gap.to_f64_lossy(),
            },
        }
    }
}

impl<T: fmt::Display> fmt::Display for OrderVerdict<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrderVerdict::Holds => write!(f, "holds"),
            OrderVerdict::FailsMean { gap } => write!(f, "fails_mean (mean gap {gap})"),
            OrderVerdict::FailsAt { x, gap } => {
                write!(f, "fails_at x = {x} (potential excess {gap})")
            }
        }
    }
}

/// Tests `μ1 ⪯ μ2` in convex order.
///
/// With equal means the potential difference `u_μ1 − u_μ2` is piecewise
/// linear with kinks at the union of atoms and vanishes at ±∞, so checking
/// the union of atoms is exact. The reported witness is the midpoint of the
/// longest run of candidates attaining the maximal excess.
pub fn check_convex_order<T: Scalar>(
    mu1: &DiscreteMeasure<T>,
    mu2: &DiscreteMeasure<T>,
    tol: &T,
) -> OrderVerdict<T> {
    let gap = mu1.mean() - mu2.mean();
    if gap.abs() > *tol {
        return OrderVerdict::FailsMean { gap };
    }
    let mut points: Vec<T> = mu1.atoms().iter().chain(mu2.atoms()).cloned().collect();
    points.sort_by(|a, b| a.partial_cmp(b).expect("finite atoms"));
    points.dedup();
    let excess: Vec<T> = points
        .iter()
        .map(|x| potential(mu1, x) - potential(mu2, x))
        .collect();
    let worst = excess
        .iter()
        .cloned()
        .fold(T::zero(), |acc, e| acc.max_of(e));
    if worst <= *tol {
        return OrderVerdict::Holds;
    }
    // the excess is linear between consecutive candidates, so any point of a
    // run attaining the maximum is itself a maximizer
    let tie = T::tol(1e-12);
    let first = excess
        .iter()
        .position(|e| (worst.clone() - e.clone()).abs() <= tie)
        .expect("maximum is attained");
    let mut last = first;
    while last + 1 < excess.len() && (worst.clone() - excess[last + 1].clone()).abs() <= tie {
        last += 1;
    }
    let two = T::one() + T::one();
    let x = (points[first].clone() + points[last].clone()) / two;
    OrderVerdict::FailsAt { x, gap: worst }
}

/// 1-Wasserstein distance via the quantile representation
/// `∫₀¹ |F_μ⁻¹(u) − F_ν⁻¹(u)| du`, swept over merged cumulative breakpoints.
pub fn w1<T: Scalar>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> T {
    let (a, wa) = (mu.atoms(), mu.weights());
    let (b, wb) = (nu.atoms(), nu.weights());
    let (mut i, mut j) = (0, 0);
    let mut left_a = wa[0].clone();
    let mut left_b = wb[0].clone();
    let mut total = T::zero();
    loop {
        let step = left_a.clone().min_of(left_b.clone());
        total = total + step.clone() * (a[i].clone() - b[j].clone()).abs();
        left_a = left_a - step.clone();
        left_b = left_b - step;
        let a_done = left_a <= T::zero();
        let b_done = left_b <= T::zero();
        if a_done {
            i += 1;
        }
        if b_done {
            j += 1;
        }
        if i == a.len() || j == b.len() {
            break;
        }
        if a_done {
            left_a = wa[i].clone();
        }
        if b_done {
            left_b = wb[j].clone();
        }
    }
    total
}

/// `W⊕` distance between marginal pairs: sum of componentwise `w1`.
pub fn w_oplus<T: Scalar>(p: &MeasurePair<T>, q: &MeasurePair<T>) -> T {
    w1(&p.mu1, &q.mu1) + w1(&p.mu2, &q.mu2)
}

/// Quantile-block quantization at resolution `n`.
///
/// `[0, 1]` is cut into `n` equal blocks of the quantile axis; each block
/// contributes weight `1/n` at its conditional mean. Atoms straddling a
/// block boundary are split proportionally, so the mean is preserved and
/// the result is dominated by `mu` in convex order.
pub fn quantize<T: Scalar>(mu: &DiscreteMeasure<T>, n: usize) -> Result<DiscreteMeasure<T>> {
    if n == 0 {
        return Err(Error::InvalidInput("quantization resolution must be ≥ 1".into()));
    }
    let block = T::one() / T::from_usize_lossy(n);
    let mut means = Vec::with_capacity(n);
    let mut idx = 0;
    let mut left = mu.weights()[0].clone();
    for k in 0..n {
        let mut capacity = block.clone();
        let mut moment = T::zero();
        let mut taken = T::zero();
        // first and last atom index touched by this block
        let mut span = (idx, idx);
        let last_block = k + 1 == n;
        while idx < mu.len() {
            let take = if last_block {
                left.clone()
            } else {
                left.clone().min_of(capacity.clone())
            };
            span.1 = idx;
            moment = moment + take.clone() * mu.atoms()[idx].clone();
            taken = taken + take.clone();
            capacity = capacity - take.clone();
            left = left - take;
            if left <= T::zero() || (!T::EXACT && left <= T::tol(1e-15)) {
                idx += 1;
                if idx < mu.len() {
                    left = mu.weights()[idx].clone();
                }
            }
            if !last_block && (capacity <= T::zero() || (!T::EXACT && capacity <= T::tol(1e-15))) {
                break;
            }
        }
        if span.0 == span.1 || taken <= T::zero() {
            means.push(mu.atoms()[span.0.min(mu.len() - 1)].clone());
        } else {
            means.push(moment / taken);
        }
    }
    let weights = vec![T::one(); n];
    DiscreteMeasure::canonicalize(&means, &weights)
}
