//! Disintegration of couplings and the adapted 1-Wasserstein distance.
//!
//! `AW(Q, Q')` transports first coordinates to first coordinates and pays,
//! on top of `|x1 − x1'|`, the W1 distance between the conditional laws of
//! the second coordinate. For discrete couplings this is one transport LP
//! whose cost matrix holds exact kernel-to-kernel W1 values.

use crate::error::Result;
use crate::lp::{solve_ot, Sense};
use crate::measures::{w1, DiscreteMeasure};
use crate::mot::Coupling;
use crate::scalar::Scalar;

/// `Q = μ1 ⊗ Q_{x1}`: first marginal plus one conditional law per atom.
#[derive(Clone, Debug, PartialEq)]
pub struct Disintegration<T> {
    pub base: DiscreteMeasure<T>,
    pub kernels: Vec<DiscreteMeasure<T>>,
}

impl<T: Scalar> Disintegration<T> {
    /// Rebuilds the coupling `Σ_i base_i · δ_{x_i} ⊗ kernel_i`.
    pub fn reassemble(&self) -> Result<Coupling<T>> {
        let mut cells = Vec::new();
        for ((x, w), k) in self.base.iter().zip(&self.kernels) {
            for (y, p) in k.iter() {
                cells.push((x.clone(), y.clone(), w.clone() * p.clone()));
            }
        }
        Coupling::from_cells(&cells)
    }
}

pub fn disintegrate<T: Scalar>(q: &Coupling<T>) -> Result<Disintegration<T>> {
    let mut weights = Vec::with_capacity(q.x_atoms().len());
    let mut kernels = Vec::with_capacity(q.x_atoms().len());
    for i in 0..q.x_atoms().len() {
        let row = q.row(i);
        let mass = row.iter().fold(T::zero(), |a, m| a + m.clone());
        let normalized: Vec<T> = row.iter().map(|m| m.clone() / mass.clone()).collect();
        kernels.push(DiscreteMeasure::canonicalize(q.y_atoms(), &normalized)?);
        weights.push(mass);
    }
    let base = DiscreteMeasure::canonicalize(q.x_atoms(), &weights)?;
    Ok(Disintegration { base, kernels })
}

/// Adapted 1-Wasserstein distance between two couplings.
pub fn aw_distance<T: Scalar>(q: &Coupling<T>, q_prime: &Coupling<T>) -> Result<T> {
    let a = disintegrate(q)?;
    let b = disintegrate(q_prime)?;
    let cost: Vec<Vec<T>> = a
        .base
        .atoms()
        .iter()
        .zip(&a.kernels)
        .map(|(x, k)| {
            b.base
                .atoms()
                .iter()
                .zip(&b.kernels)
                .map(|(x2, k2)| (x.clone() - x2.clone()).abs() + w1(k, k2))
                .collect()
        })
        .collect();
    Ok(solve_ot(&a.base, &b.base, &cost, Sense::Min)?.value.max_of(T::zero()))
}

/// W1 on ℝ² between couplings with ground cost `|Δx| + |Δy|`, solved as a
/// transport LP between their supports.
pub fn w1_joint<T: Scalar>(q: &Coupling<T>, q_prime: &Coupling<T>) -> Result<T> {
    let (src, dst) = (q.cells(), q_prime.cells());
    let cost: Vec<Vec<T>> = src
        .iter()
        .map(|(x, y, _)| {
            dst.iter()
                .map(|(x2, y2, _)| (x.clone() - x2.clone()).abs() + (y.clone() - y2.clone()).abs())
                .collect()
        })
        .collect();
    // cell masses as "measures" indexed by position; atoms are placeholders
    let index_measure = |cells: &[(T, T, T)]| {
        let idx: Vec<T> = (0..cells.len()).map(T::from_usize_lossy).collect();
        let w: Vec<T> = cells.iter().map(|c| c.2.clone()).collect();
        DiscreteMeasure::canonicalize(&idx, &w)
    };
    let mu = index_measure(&src)?;
    let nu = index_measure(&dst)?;
    Ok(solve_ot(&mu, &nu, &cost, Sense::Min)?.value.max_of(T::zero()))
}
