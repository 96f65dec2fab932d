//! Single-cell analysis in the `(g, k)` plane.
//!
//! A cell with one upstream neighbour clamped at `v_u` and `k` (aggregate)
//! downstream neighbours at rest sees the coupling line
//! `G(v) = g(k+1) v - g v_u`. The cell *fires* when raising `v_u` from 0 to
//! `V_u` makes rest and threshold collide, which happens iff the line at
//! `v_u = V_u` clears the critical segment strictly and is flatter than
//! `F'(v_i)`. Everything here follows from that test plus the excitability
//! condition `g(k+1) < F'(v_E)` at `v_u = 0`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cubic::{
    segment_gap, smallest_equilibrium, tangent_through_point, Excitable, Line, TANGENCY_TOL,
};
use crate::{Error, Result};

/// Gap-junction parameters seen by the central cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// Conductance to the upstream neighbour (per unit capacitance).
    pub g: f64,
    /// Ratio of total downstream to upstream conductance; need not be an integer.
    pub k: f64,
    /// Peak upstream voltage.
    pub v_u: f64,
}

impl Coupling {
    pub fn new(g: f64, k: f64, v_u: f64) -> Result<Self> {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                reason: "conductance must be positive",
            });
        }
        if !(k >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "downstream ratio must be non-negative",
            });
        }
        if !(0.0..=1.0).contains(&v_u) {
            return Err(Error::InvalidParameter {
                name: "V_u",
                value: v_u,
                reason: "upstream voltage must lie in [0, 1]",
            });
        }
        Ok(Coupling { g, k, v_u })
    }

    /// The coupling line at full upstream drive.
    pub fn line(&self) -> Line {
        Line::coupling(self.g, self.k, self.v_u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PropagationClass {
    /// Excitable at rest and fires when driven.
    Active,
    /// Not excitable at rest, yet fires when driven.
    SemiActive,
    /// Driven deflection without firing.
    Passive,
}

impl fmt::Display for PropagationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PropagationClass::Active => "Active",
            PropagationClass::SemiActive => "SemiActive",
            PropagationClass::Passive => "Passive",
        })
    }
}

impl FromStr for PropagationClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Active" => Ok(PropagationClass::Active),
            "SemiActive" => Ok(PropagationClass::SemiActive),
            "Passive" => Ok(PropagationClass::Passive),
            other => Err(format!("unknown propagation class {other:?}")),
        }
    }
}

/// Which constraint limits `k` on a boundary curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// The coupling line touches the critical segment.
    Tangency,
    /// A slope bound: `F'(v_i)` for `k_max`, `F'(v_E)` for the tree.
    Slope,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Tangency => "tangency",
            Branch::Slope => "slope",
        })
    }
}

/// Upper bound on `k` for firing at a given `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMax {
    pub k: f64,
    pub branch: Branch,
}

/// Characteristic conductances and ratios of the firing region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionBoundaries {
    pub g_min: f64,
    pub g_max: f64,
    pub g_star: f64,
    pub g_peak: f64,
    pub k_peak: f64,
    /// `k_max(g_star)`; `None` when `g_star >= g_max` and the slope branch is absent.
    pub k_star: Option<f64>,
}

fn require_drive<C: Excitable + ?Sized>(cell: &C, v_u: f64) -> Result<()> {
    let v_t = cell.landmarks().v_t;
    if v_u > v_t && v_u.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(
            "firing analysis",
            "V_u",
            v_u,
            format!("V_u > v_T = {v_t}"),
        ))
    }
}

/// `(g_min, g_max)`: conductances between which firing is possible at `k = 0`.
///
/// `g_max = F'(v_i)`; `g_min` is the slope of the tangent to the critical
/// segment through `(V_u, 0)`.
pub fn g_bounds<C: Excitable + ?Sized>(cell: &C, v_u: f64) -> Result<(f64, f64)> {
    require_drive(cell, v_u)?;
    let lm = cell.landmarks();
    let g_max = cell.current_slope(lm.v_i);
    let t = tangent_through_point(cell, v_u, 0.0).ok_or_else(|| {
        Error::domain(
            "g_min (tangent through (V_u, 0))",
            "V_u",
            v_u,
            "a point from which the critical segment has a tangent",
        )
    })?;
    Ok((-t.line.intercept / v_u, g_max))
}

/// Conductance at which the tangent at the inflection point passes through
/// `(0, -g V_u)`; it separates the tangency and slope branches of `k_max`.
pub fn g_star<C: Excitable + ?Sized>(cell: &C, v_u: f64) -> f64 {
    let v_i = cell.landmarks().v_i;
    (cell.current_slope(v_i) * v_i - cell.current(v_i)) / v_u
}

/// `(g_peak, k_peak)`: location of the maximum of `k_max`.
pub fn peak<C: Excitable + ?Sized>(cell: &C, v_u: f64) -> (f64, f64) {
    let v_t = cell.landmarks().v_t;
    let k_peak = v_u / v_t - 1.0;
    let g_peak = cell.current_slope(v_t) * v_t / v_u;
    (g_peak, k_peak)
}

/// Largest `k` for which the cell still fires at conductance `g`.
///
/// Outside `(g_min, g_max)` the cell fires for no `k` at all, reported as a
/// domain error rather than `k_max = 0`.
pub fn k_max<C: Excitable + ?Sized>(cell: &C, v_u: f64, g: f64) -> Result<KMax> {
    let (g_min, g_max) = g_bounds(cell, v_u)?;
    if !(g > g_min && g < g_max) {
        return Err(Error::domain(
            "k_max (no firing for any k)",
            "g",
            g,
            format!("({g_min}, {g_max})"),
        ));
    }
    let slope_bound = cell.current_slope(cell.landmarks().v_i);
    let g_star = g_star(cell, v_u);
    if g >= g_star && g_star < g_max {
        return Ok(KMax {
            k: slope_bound / g - 1.0,
            branch: Branch::Slope,
        });
    }
    let t = tangent_through_point(cell, 0.0, -g * v_u).ok_or_else(|| {
        Error::domain(
            "k_max tangency",
            "g",
            g,
            format!("tangent through (0, -g V_u) misses the critical segment; g_star = {g_star}"),
        )
    })?;
    Ok(KMax {
        k: t.line.slope / g - 1.0,
        branch: Branch::Tangency,
    })
}

/// Excitability boundary `k_exc(g) = F'(v_E)/g - 1`. Negative values mean the
/// cell is not excitable even with no downstream neighbours.
pub fn k_exc<C: Excitable + ?Sized>(cell: &C, g: f64) -> f64 {
    cell.current_slope(cell.landmarks().v_e) / g - 1.0
}

pub fn boundaries<C: Excitable + ?Sized>(cell: &C, v_u: f64) -> Result<RegionBoundaries> {
    let (g_min, g_max) = g_bounds(cell, v_u)?;
    let g_star = g_star(cell, v_u);
    let (g_peak, k_peak) = peak(cell, v_u);
    let k_star = (g_star < g_max).then(|| cell.current_slope(cell.landmarks().v_i) / g_star - 1.0);
    Ok(RegionBoundaries {
        g_min,
        g_max,
        g_star,
        g_peak,
        k_peak,
        k_star,
    })
}

/// Firing test: the coupling line at full drive lies strictly below the
/// critical segment and is flatter than `F'(v_i)`.
pub fn fires<C: Excitable + ?Sized>(cell: &C, coupling: &Coupling) -> bool {
    fires_with_tol(cell, coupling, TANGENCY_TOL)
}

pub fn fires_with_tol<C: Excitable + ?Sized>(cell: &C, coupling: &Coupling, tol: f64) -> bool {
    let line = coupling.line();
    line.slope < cell.current_slope(cell.landmarks().v_i) && segment_gap(cell, &line) > tol
}

/// Upstream voltage at which rest and threshold collide, if they can.
pub fn critical_upstream_voltage<C: Excitable + ?Sized>(cell: &C, g: f64, k: f64) -> Option<f64> {
    let slope = g * (k + 1.0);
    if slope >= cell.current_slope(cell.landmarks().v_i) {
        return None;
    }
    let a = cell.segment_point_with_slope(slope)?;
    Some((k + 1.0) * a - cell.current(a) / g)
}

pub fn classify<C: Excitable + ?Sized>(cell: &C, coupling: &Coupling) -> PropagationClass {
    classify_with_tol(cell, coupling, TANGENCY_TOL)
}

/// Classification; a point exactly on `k_max` counts as passive and a point
/// exactly on `k_exc` as not excitable (both inequalities are strict).
pub fn classify_with_tol<C: Excitable + ?Sized>(
    cell: &C,
    coupling: &Coupling,
    tol: f64,
) -> PropagationClass {
    if !fires_with_tol(cell, coupling, tol) {
        return PropagationClass::Passive;
    }
    if k_exc(cell, coupling.g) - coupling.k > tol {
        PropagationClass::Active
    } else {
        PropagationClass::SemiActive
    }
}

/// Voltage the central cell settles at from rest with the upstream cell held at `V_u`.
pub fn v_infinity<C: Excitable + ?Sized>(cell: &C, coupling: &Coupling) -> f64 {
    smallest_equilibrium(cell, coupling.g, coupling.k, coupling.v_u)
}

/// Leak and derived ratio for the downstream-attenuation correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttenuationParams {
    pub g_l: f64,
    /// `1 + g_L / g`
    pub beta: f64,
}

impl AttenuationParams {
    pub fn new(g: f64, g_l: f64) -> Result<Self> {
        if !(g > 0.0) {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                reason: "conductance must be positive",
            });
        }
        if !(g_l >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "g_L",
                value: g_l,
                reason: "leak conductance must be non-negative",
            });
        }
        Ok(AttenuationParams {
            g_l,
            beta: 1.0 + g_l / g,
        })
    }
}

/// Bounded decay ratio `alpha` of steady passive voltages along an infinite
/// chain: the smaller root of `k a^2 - (k + beta) a + 1 = 0`. At `k = 0` this
/// is the limit `1/beta`.
pub fn alpha_attenuation(g: f64, k: f64, g_l: f64) -> Result<f64> {
    let p = AttenuationParams::new(g, g_l)?;
    if !(k >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "k",
            value: k,
            reason: "downstream ratio must be non-negative",
        });
    }
    let s = k + p.beta;
    let disc = (s * s - 4.0 * k).max(0.0);
    // (s - sqrt(disc)) / 2k rewritten via the product of roots 1/k
    Ok(2.0 / (s + disc.sqrt()))
}

/// Maps a boundary `k0(g)` derived with downstream neighbours at rest to the
/// boundary obtained when downstream voltages are `alpha` times the cell's own.
pub fn adjust_boundary(k0: f64, g: f64, g_l: f64) -> Result<f64> {
    if !(k0 >= 0.0) {
        return Err(Error::domain("adjusted boundary", "k0", k0, "k0 >= 0"));
    }
    let p = AttenuationParams::new(g, g_l)?;
    let denom = k0 + p.g_l / g;
    if denom == 0.0 {
        return Err(Error::domain(
            "adjusted boundary",
            "k0 + g_L/g",
            denom,
            "k0 + g_L/g > 0",
        ));
    }
    Ok(k0 * (1.0 + 1.0 / denom))
}

/// Thresholds from `candidates` for which every `(g, k, expected)` case
/// classifies as expected at drive `v_u`.
pub fn consistent_thresholds(
    cases: &[(f64, f64, PropagationClass)],
    v_u: f64,
    candidates: &[f64],
) -> Vec<f64> {
    candidates
        .iter()
        .copied()
        .filter(|&v_t| {
            let Ok(cell) = crate::CubicCell::new(v_t) else {
                return false;
            };
            cases.iter().all(|&(g, k, expected)| {
                Coupling::new(g, k, v_u)
                    .map(|c| classify(&cell, &c) == expected)
                    .unwrap_or(false)
            })
        })
        .collect()
}
