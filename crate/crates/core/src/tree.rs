//! Propagation through a collapsed tree.
//!
//! In a regular tree where every cell has one upstream and `k` downstream
//! neighbours, vertically aligned cells share a voltage, so the tree
//! collapses to a chain with conductance `g` from upstream and `kg` to
//! downstream. If each cell behaves as though its downstream neighbours sit at
//! rest, propagation is the iteration of `phi: v_u -> v_inf` from `v_0 = 1`.
//! The iteration ends either at the elevated fixed point `v_+` or at rest.

use serde::{Deserialize, Serialize};

use crate::cubic::{
    line_below_or_touching, smallest_equilibrium, tangent_through_point, Excitable, Line,
    TANGENCY_TOL,
};
use crate::region::Branch;
use crate::roots::bisect_predicate;
use crate::{Error, Result};

/// Tolerance of the outer bisection on `k` in [`k_prop`].
pub const K_PROP_TOL: f64 = 1e-9;

/// Upstream voltage that makes `v` an equilibrium: `-F(v)/g + (k+1) v`.
pub fn psi<C: Excitable + ?Sized>(cell: &C, g: f64, k: f64, v: f64) -> f64 {
    -cell.current(v) / g + (k + 1.0) * v
}

/// Smallest equilibrium reached from rest when the upstream cell sits at `v_u`.
pub fn phi<C: Excitable + ?Sized>(cell: &C, g: f64, k: f64, v_u: f64) -> f64 {
    smallest_equilibrium(cell, g, k, v_u)
}

/// Positive solutions of `F(v) = g k v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPair {
    /// In `[v_T, v_E]`.
    pub v_minus: f64,
    /// In `[v_E, v_F]`; the candidate limit of persistent propagation.
    pub v_plus: f64,
}

/// `None` once `g k > F'(v_E)`.
pub fn rest_excited_equilibria<C: Excitable + ?Sized>(
    cell: &C,
    g: f64,
    k: f64,
) -> Option<EquilibriumPair> {
    cell.chord_roots(g * k)
        .map(|(v_minus, v_plus)| EquilibriumPair { v_minus, v_plus })
}

/// Whether iterating `phi` from `v_0 = 1` converges to `v_+` rather than rest.
pub fn persistent_propagation<C: Excitable + ?Sized>(cell: &C, g: f64, k: f64) -> bool {
    persistent_propagation_with_tol(cell, g, k, TANGENCY_TOL)
}

/// The line through `(v_+, F(v_+))` with slope `g(k+1)` must lie below the
/// critical segment or touch it; contact within `tol` counts as touching.
pub fn persistent_propagation_with_tol<C: Excitable + ?Sized>(
    cell: &C,
    g: f64,
    k: f64,
    tol: f64,
) -> bool {
    match rest_excited_equilibria(cell, g, k) {
        Some(pair) => line_below_or_touching(cell, &Line::coupling(g, k, pair.v_plus), tol),
        None => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimitTag {
    ConvergedToVPlus,
    ConvergedToZero,
}

impl std::fmt::Display for LimitTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LimitTag::ConvergedToVPlus => "ConvergedToVPlus",
            LimitTag::ConvergedToZero => "ConvergedToZero",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    /// `v_0 = 1, v_1, v_2, ...`
    pub iterates: Vec<f64>,
    pub limit: f64,
    pub limit_tag: LimitTag,
    pub steps: usize,
}

/// Iterates `v_{j+1} = phi(v_j)` from `v_0 = v_F` until successive values
/// differ by less than `tol` and the geometric estimate of the remaining
/// distance to the limit is below `tol` as well.
///
/// The limit is tagged by proximity (within `100 tol`) to `v_+` or 0. A limit
/// near neither should not occur and is returned as
/// [`Error::UnexpectedLimit`] instead of being binned.
pub fn iterate_phi<C: Excitable + ?Sized>(
    cell: &C,
    g: f64,
    k: f64,
    tol: f64,
    max_steps: usize,
) -> Result<IterationTrace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "tolerance must be positive",
        });
    }
    let mut v = cell.landmarks().v_f;
    let mut iterates = vec![v];
    let mut prev_step = f64::INFINITY;
    for step in 1..=max_steps {
        let next = phi(cell, g, k, v);
        iterates.push(next);
        let delta = (next - v).abs();
        // geometric tail estimate
        let ratio = delta / prev_step;
        let tail = if ratio < 1.0 {
            delta * ratio / (1.0 - ratio)
        } else {
            0.0
        };
        if delta < tol && tail < tol {
            let limit_tag = tag_limit(cell, g, k, next, tol)?;
            return Ok(IterationTrace {
                iterates,
                limit: next,
                limit_tag,
                steps: step,
            });
        }
        prev_step = delta;
        v = next;
    }
    Err(Error::NoConvergence {
        steps: max_steps,
        last: v,
        trace: iterates,
    })
}

fn tag_limit<C: Excitable + ?Sized>(
    cell: &C,
    g: f64,
    k: f64,
    limit: f64,
    tol: f64,
) -> Result<LimitTag> {
    let band = 100.0 * tol;
    let pair = rest_excited_equilibria(cell, g, k);
    if let Some(p) = pair {
        if (limit - p.v_plus).abs() < band {
            return Ok(LimitTag::ConvergedToVPlus);
        }
    }
    if limit.abs() < band {
        return Ok(LimitTag::ConvergedToZero);
    }
    Err(Error::UnexpectedLimit {
        limit,
        v_plus: pair.map(|p| p.v_plus),
    })
}

/// Smallest `g` allowing persistent propagation: the slope of the tangent to
/// the critical segment through `(v_F, 0)`.
pub fn tree_g_min<C: Excitable + ?Sized>(cell: &C) -> Result<f64> {
    let v_f = cell.landmarks().v_f;
    let t = tangent_through_point(cell, v_f, 0.0).ok_or_else(|| {
        Error::domain(
            "tree g_min",
            "v_F",
            v_f,
            "a peak from which the critical segment has a tangent",
        )
    })?;
    Ok(-t.line.intercept / v_f)
}

/// Upper edge of the persistent-propagation region at conductance `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KProp {
    pub k: f64,
    /// [`Branch::Tangency`] where the tangency condition binds, [`Branch::Slope`]
    /// where `g k = F'(v_E)` does.
    pub branch: Branch,
}

pub fn k_prop<C: Excitable + ?Sized>(cell: &C, g: f64) -> Result<KProp> {
    k_prop_with_tol(cell, g, TANGENCY_TOL, K_PROP_TOL)
}

/// The largest `k` with persistent propagation: the smaller of the
/// tangency-limited `k` (by bisection on the contact predicate) and
/// `F'(v_E)/g`.
pub fn k_prop_with_tol<C: Excitable + ?Sized>(
    cell: &C,
    g: f64,
    contact_tol: f64,
    k_tol: f64,
) -> Result<KProp> {
    let propagates = |k: f64| persistent_propagation_with_tol(cell, g, k, contact_tol);
    if !(g > 0.0) || !propagates(0.0) {
        let g_min = tree_g_min(cell)?;
        return Err(Error::domain(
            "k_prop",
            "g",
            g,
            format!("g >= tree g_min = {g_min}"),
        ));
    }
    let k_slope = cell.current_slope(cell.landmarks().v_e) / g;
    if propagates(k_slope) {
        return Ok(KProp {
            k: k_slope,
            branch: Branch::Slope,
        });
    }
    Ok(KProp {
        k: bisect_predicate(propagates, 0.0, k_slope, k_tol),
        branch: Branch::Tangency,
    })
}
