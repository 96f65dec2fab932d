//! Two-condition sweeps over the `(g, k)` plane.
//!
//! Condition 1 holds the driver at the peak `v_F = 1` for the whole run.
//! Condition 2 holds it there only until the observed cell reaches the
//! trigger voltage (default `v_E`), then releases it. A large difference
//! between the two maxima marks points that fire only while driven.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::PreparedModel;
use crate::cubic::Excitable;
use crate::par::{self, Execution};
use crate::region::{adjust_boundary, k_exc, k_max, PropagationClass};
use crate::sim::{
    classify_trajectory, simulate_chain, AfterRelease, CellDynamics, ChainConfig, ClampProtocol,
    Integration,
};
use crate::tree::k_prop;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Network {
    /// One driven cell.
    Single,
    /// A collapsed tree of `n_cells` free cells, observed at the penultimate one.
    Tree { n_cells: usize },
}

impl Network {
    pub fn n_cells(self) -> usize {
        match self {
            Network::Single => 1,
            Network::Tree { n_cells } => n_cells,
        }
    }

    /// Chain index of the observed cell.
    pub fn observed(self) -> usize {
        match self {
            Network::Single => 1,
            Network::Tree { n_cells } => n_cells.saturating_sub(1).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    Full,
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub network: Network,
    pub dynamics: Dynamics,
    pub dt: f64,
    pub t_end: f64,
    /// Condition-2 trigger and firing threshold; `None` means `v_E`.
    pub trigger: Option<f64>,
    pub after_release: AfterRelease,
    /// A point belongs to the difference band when `vmax1 - vmax2` exceeds
    /// this fraction of the spike amplitude (rest to peak, 1 in normalised units).
    pub band_fraction: f64,
    pub exec: Execution,
}

impl SweepConfig {
    pub fn new(model: &PreparedModel, network: Network, dynamics: Dynamics) -> Self {
        let (dt, t_end) = model.default_integration();
        SweepConfig {
            network,
            dynamics,
            dt,
            t_end,
            trigger: None,
            after_release: AfterRelease::Clamp(0.0),
            band_fraction: 0.25,
            exec: Execution::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Ok,
    /// Condition 2 never reached its trigger, so both runs are identical.
    Untriggered,
    Failed(String),
}

impl std::fmt::Display for PointStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PointStatus::Ok => f.write_str("ok"),
            PointStatus::Untriggered => f.write_str("untriggered"),
            // keep the CSV single-column
            PointStatus::Failed(e) => write!(f, "failed: {}", e.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub g: f64,
    pub k: f64,
    pub vmax1: f64,
    pub vmax2: f64,
    pub diff: f64,
    /// Final voltage of the observed cell under condition 2.
    pub terminal2: f64,
    /// Trajectory class of the condition-2 run; `None` when the release
    /// came too late to judge.
    pub class: Option<PropagationClass>,
    pub status: PointStatus,
}

/// Predicted boundaries at one `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub g: f64,
    /// `k_max` for a single cell, `k_prop` for a tree; `None` outside its domain.
    pub k_boundary: Option<f64>,
    pub k_exc: f64,
    /// Tree sweeps only: the boundaries corrected for proportional
    /// downstream voltages.
    pub k_boundary_adj: Option<f64>,
    pub k_exc_adj: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub g_values: Vec<f64>,
    pub k_values: Vec<f64>,
    /// g-major: `points[i * k_values.len() + j]` is `(g_values[i], k_values[j])`.
    pub points: Vec<SweepPoint>,
    pub overlays: Vec<Overlay>,
    pub network: Network,
    pub dynamics: Dynamics,
    pub trigger: f64,
    pub band_fraction: f64,
    pub g_leak: f64,
}

impl SweepResult {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn at(&self, i: usize, j: usize) -> &SweepPoint {
        &self.points[i * self.k_values.len() + j]
    }

    /// Condition-1 maximum above the trigger voltage.
    pub fn fires(&self, p: &SweepPoint) -> bool {
        p.vmax1 > self.trigger
    }

    pub fn in_band(&self, p: &SweepPoint) -> bool {
        p.diff > self.band_fraction
    }

    /// `g,k,vmax1,vmax2,diff,status` followed by the overlay columns.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let tree = matches!(self.network, Network::Tree { .. });
        if tree {
            writeln!(
                out,
                "g,k,vmax1,vmax2,diff,status,class,k_prop,k_exc,k_prop_adj,k_exc_adj"
            )?;
        } else {
            writeln!(out, "g,k,vmax1,vmax2,diff,status,class,k_max,k_exc")?;
        }
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_else(|| "NaN".into());
        let nk = self.k_values.len();
        for (idx, p) in self.points.iter().enumerate() {
            let o = &self.overlays[idx / nk];
            write!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                p.g,
                p.k,
                p.vmax1,
                p.vmax2,
                p.diff,
                p.status,
                p.class
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "NA".into()),
                opt(o.k_boundary),
                o.k_exc
            )?;
            if tree {
                write!(out, ",{},{}", opt(o.k_boundary_adj), opt(o.k_exc_adj))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Runs both conditions at every grid point.
///
/// Per-point simulation failures are recorded in the point's status; the
/// sweep itself only fails on invalid configuration.
pub fn condition_sweep(
    model: &PreparedModel,
    g_grid: &[f64],
    k_grid: &[f64],
    config: &SweepConfig,
) -> Result<SweepResult> {
    let integration = Integration::new(config.dt, config.t_end)?;
    let cell = &model.reduced;
    let lm = *cell.landmarks();
    let trigger = config.trigger.unwrap_or(lm.v_e);
    let g_leak = cell.g_leak();
    let observed = config.network.observed();
    let n_cells = config.network.n_cells();
    let cond1 = ClampProtocol::constant(lm.v_f);
    let cond2 = ClampProtocol::until(lm.v_f, observed, trigger, config.after_release)?;

    let nk = k_grid.len();
    let run = |idx: usize| -> SweepPoint {
        let (g, k) = (g_grid[idx / nk], k_grid[idx % nk]);
        let outcome = match config.dynamics {
            Dynamics::Full => both(
                &model.full,
                n_cells,
                g,
                k,
                observed,
                &cond1,
                &cond2,
                integration,
                &lm,
            ),
            Dynamics::Reduced => both(
                cell,
                n_cells,
                g,
                k,
                observed,
                &cond1,
                &cond2,
                integration,
                &lm,
            ),
        };
        match outcome {
            Ok(Pair {
                vmax1,
                vmax2,
                terminal2,
                class,
                triggered,
            }) => SweepPoint {
                g,
                k,
                vmax1,
                vmax2,
                diff: vmax1 - vmax2,
                terminal2,
                class,
                status: if triggered {
                    PointStatus::Ok
                } else {
                    PointStatus::Untriggered
                },
            },
            Err(e) => SweepPoint {
                g,
                k,
                vmax1: f64::NAN,
                vmax2: f64::NAN,
                diff: f64::NAN,
                terminal2: f64::NAN,
                class: None,
                status: PointStatus::Failed(e.to_string()),
            },
        }
    };
    let points = par::map_range(config.exec, g_grid.len() * nk, run);

    let tree = matches!(config.network, Network::Tree { .. });
    let overlays = par::map(config.exec, g_grid, |&g| {
        let ke = k_exc(cell, g);
        if tree {
            let kp = k_prop(cell, g).ok().map(|b| b.k);
            Overlay {
                g,
                k_boundary: kp,
                k_exc: ke,
                k_boundary_adj: kp.and_then(|k| adjust_boundary(k, g, g_leak).ok()),
                k_exc_adj: adjust_boundary(ke, g, g_leak).ok(),
            }
        } else {
            Overlay {
                g,
                k_boundary: k_max(cell, lm.v_f, g).ok().map(|b| b.k),
                k_exc: ke,
                k_boundary_adj: None,
                k_exc_adj: None,
            }
        }
    });

    Ok(SweepResult {
        g_values: g_grid.to_vec(),
        k_values: k_grid.to_vec(),
        points,
        overlays,
        network: config.network,
        dynamics: config.dynamics,
        trigger,
        band_fraction: config.band_fraction,
        g_leak,
    })
}

struct Pair {
    vmax1: f64,
    vmax2: f64,
    terminal2: f64,
    class: Option<PropagationClass>,
    triggered: bool,
}

#[allow(clippy::too_many_arguments)]
fn both<D: CellDynamics + ?Sized>(
    cell: &D,
    n_cells: usize,
    g: f64,
    k: f64,
    observed: usize,
    cond1: &ClampProtocol,
    cond2: &ClampProtocol,
    integration: Integration,
    lm: &crate::Landmarks,
) -> Result<Pair> {
    let cfg = ChainConfig::new(n_cells, g, k)?;
    let a = simulate_chain(cell, cfg, cond1, integration)?;
    let b = simulate_chain(cell, cfg, cond2, integration)?;
    let class = match b.metadata.release_time {
        Some(t) => classify_trajectory(&b, observed, t, lm, cell.time_constant()).ok(),
        None => Some(PropagationClass::Passive),
    };
    Ok(Pair {
        vmax1: a.max_voltage[observed],
        vmax2: b.max_voltage[observed],
        terminal2: b.terminal(observed),
        class,
        triggered: b.metadata.release_triggered == Some(true),
    })
}
