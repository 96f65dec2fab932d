//! Conductance-based cell models and their reduction to a scalar current.
//!
//! A model file describes currents `gbar * prod(x^p) * (V - E)` and the
//! kinetics of each gate `x`, along with a reduction rule per gate. The
//! reduction replaces fast gates by `x_inf(V)` and freezes slow ones at rest,
//! giving a scalar current that the cubic-model analyses accept through
//! [`Excitable`](crate::Excitable). All voltages handed to the analyses and
//! the simulator are normalised: `v = (V - V_rest) / (V_F - V_rest)`, so rest
//! is 0 and the peak of the reduced cell is 1. Conductances keep the model's
//! units (e.g. 1/ms after division by the capacitance).

mod kinetics;
mod model;
mod reduce;
mod sweep;

pub use kinetics::{Kinetics, RateFn, Table};
pub use model::{
    resting_state, CubicModel, CurrentSpec, FullCell, GateSpec, GateUse, IonicModel, Model,
    ReductionRule, RestingState,
};
pub use reduce::{
    diff1, diff2, extract_landmarks, reduce_to_1d, scan_zeros, timescale_report, GateTimescale,
    ReducedCell, ReducedCurrent, TimescaleReport, FAST_GATE_RATIO, FD_STEP,
};
pub use sweep::{
    condition_sweep, Dynamics, Network, Overlay, PointStatus, SweepConfig, SweepPoint, SweepResult,
};

use crate::cubic::CubicCell;
use crate::sim::{self, CellDynamics};
use crate::{Error, Result};

/// Bundled model files, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("hh-squid", include_str!("../../models/hh-squid.json")),
    ("cubic", include_str!("../../models/cubic.json")),
    (
        "traub-template",
        include_str!("../../models/traub-template.json"),
    ),
    (
        "luo-rudy-template",
        include_str!("../../models/luo-rudy-template.json"),
    ),
];

pub fn bundled(name: &str) -> Result<Model> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Model(format!("no bundled model named '{name}'")))?;
    Model::from_json(text)
}

/// Cell dynamics with every gate evolving.
#[derive(Debug, Clone)]
pub enum FullDynamics {
    Cubic(CubicCell),
    Conductance(FullCell),
}

impl CellDynamics for FullDynamics {
    fn dim(&self) -> usize {
        match self {
            FullDynamics::Cubic(c) => c.dim(),
            FullDynamics::Conductance(c) => c.dim(),
        }
    }

    fn rest_state(&self) -> Vec<f64> {
        match self {
            FullDynamics::Cubic(c) => c.rest_state(),
            FullDynamics::Conductance(c) => c.rest_state(),
        }
    }

    fn clamped_state(&self, v: f64) -> Vec<f64> {
        match self {
            FullDynamics::Cubic(c) => c.clamped_state(v),
            FullDynamics::Conductance(c) => c.clamped_state(v),
        }
    }

    #[inline]
    fn derivative(&self, state: &[f64], injected: f64, out: &mut [f64]) {
        match self {
            FullDynamics::Cubic(c) => c.derivative(state, injected, out),
            FullDynamics::Conductance(c) => c.derivative(state, injected, out),
        }
    }

    fn time_constant(&self) -> f64 {
        match self {
            FullDynamics::Cubic(c) => c.time_constant(),
            FullDynamics::Conductance(c) => c.time_constant(),
        }
    }
}

/// A model with its resting state, reduction and landmarks worked out.
#[derive(Debug, Clone)]
pub struct PreparedModel {
    pub model: Model,
    pub rest: RestingState,
    pub reduced: ReducedCell,
    pub full: FullDynamics,
}

impl PreparedModel {
    pub fn new(model: Model) -> Result<Self> {
        let rest = resting_state(&model)?;
        let reduced = ReducedCell::new(reduce_to_1d(&model, &rest)?)?;
        let full = match &model {
            Model::Cubic(c) => FullDynamics::Cubic(CubicCell::new(c.v_t)?),
            Model::Conductance(m) => {
                let tau = reduced.time_constant();
                FullDynamics::Conductance(FullCell::new(
                    m.clone(),
                    rest.clone(),
                    reduced.reduced().scale(),
                    tau,
                ))
            }
        };
        if !sim::rest_is_stable(&full, 0.01 * crate::Excitable::landmarks(&reduced).v_t) {
            return Err(Error::Model(format!(
                "'{}': the resting state is not a stable equilibrium of the full dynamics",
                model.name()
            )));
        }
        Ok(PreparedModel {
            model,
            rest,
            reduced,
            full,
        })
    }

    pub fn landmarks(&self) -> &crate::Landmarks {
        crate::Excitable::landmarks(&self.reduced)
    }

    pub fn timescales(&self) -> Option<TimescaleReport> {
        match &self.model {
            Model::Conductance(m) => Some(timescale_report(m, &self.rest)),
            Model::Cubic(_) => None,
        }
    }

    /// Default `(dt, t_end)` in the model's time units.
    pub fn default_integration(&self) -> (f64, f64) {
        match self.model {
            Model::Cubic(_) => (sim::DEFAULT_DT, 200.0),
            Model::Conductance(_) => (0.001, 30.0),
        }
    }
}
