//! Model files, the conductance-based current and the resting state.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::kinetics::Kinetics;
use crate::cubic::CubicCell;
use crate::roots::{self, ROOT_TOL};
use crate::sim::CellDynamics;
use crate::{Error, Result};

/// How a gate is treated by the scalar reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionRule {
    /// Replaced by its steady state `x_inf(V)`.
    Instantaneous,
    /// Held at its resting value.
    FrozenAtRest,
    /// Left dynamic; the model cannot be reduced.
    Dynamic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub name: String,
    pub kinetics: Kinetics,
    pub reduction: ReductionRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateUse {
    pub gate: String,
    pub exponent: u32,
}

/// `I = gbar * prod(x^p) * (V - reversal)`; a current without gates is a leak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurrentSpec {
    pub name: String,
    pub gbar: f64,
    pub reversal: f64,
    #[serde(default)]
    pub gates: Vec<GateUse>,
}

fn default_window() -> [f64; 2] {
    [-120.0, 80.0]
}

/// A conductance-based membrane in native units (typically mV, ms).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IonicModel {
    #[serde(default, skip_serializing, rename = "kind")]
    _kind: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub capacitance: f64,
    pub resting_potential: f64,
    /// Voltage range searched for zeros of the reduced current.
    #[serde(default = "default_window")]
    pub window: [f64; 2],
    pub currents: Vec<CurrentSpec>,
    pub gates: Vec<GateSpec>,
    /// `currents[i].gates` resolved to gate indices.
    #[serde(skip)]
    links: Vec<Vec<(usize, i32)>>,
}

/// The cubic current wrapped as a model, in its own dimensionless units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CubicModel {
    #[serde(default, skip_serializing, rename = "kind")]
    _kind: Option<String>,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub v_t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Conductance(IonicModel),
    Cubic(CubicModel),
}

impl Model {
    /// Parses and validates a model file. Syntax and type errors carry line
    /// and column; validation errors name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Kind {
            kind: String,
        }
        let mut m = match serde_json::from_str::<Kind>(text)?.kind.as_str() {
            "conductance" => Model::Conductance(serde_json::from_str(text)?),
            "cubic" => Model::Cubic(serde_json::from_str(text)?),
            other => {
                return Err(Error::Model(format!(
                    "kind: unknown model kind '{other}' (expected 'conductance' or 'cubic')"
                )))
            }
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Model::from_json(&text)
    }

    pub fn name(&self) -> &str {
        match self {
            Model::Conductance(m) => &m.name,
            Model::Cubic(m) => &m.name,
        }
    }

    pub fn cubic(v_t: f64) -> Result<Self> {
        let mut m = Model::Cubic(CubicModel {
            _kind: None,
            name: "cubic".into(),
            description: String::new(),
            v_t,
        });
        m.validate()?;
        Ok(m)
    }

    /// Checks references and coefficients; resolves gate names.
    pub fn validate(&mut self) -> Result<()> {
        match self {
            Model::Cubic(c) => CubicCell::new(c.v_t).map(|_| ()),
            Model::Conductance(m) => m.validate(),
        }
    }
}

impl IonicModel {
    fn validate(&mut self) -> Result<()> {
        let bad = |path: String, what: &str| Error::Model(format!("{path}: {what}"));
        if !(self.capacitance > 0.0) || !self.capacitance.is_finite() {
            return Err(bad("capacitance".into(), "must be positive"));
        }
        if !self.resting_potential.is_finite() {
            return Err(bad("resting_potential".into(), "must be finite"));
        }
        let [lo, hi] = self.window;
        if !(lo < hi) || !(lo..=hi).contains(&self.resting_potential) {
            return Err(bad(
                "window".into(),
                "must be an increasing range containing the resting potential",
            ));
        }
        let mut index = HashMap::new();
        for (i, gate) in self.gates.iter().enumerate() {
            if index.insert(gate.name.as_str(), i).is_some() {
                return Err(bad(
                    format!("gates[{i}].name"),
                    &format!("duplicate gate '{}'", gate.name),
                ));
            }
            gate.kinetics
                .check()
                .map_err(|e| bad(format!("gates[{i}] ('{}').kinetics", gate.name), &e))?;
        }
        let mut links = Vec::with_capacity(self.currents.len());
        for (i, c) in self.currents.iter().enumerate() {
            if !(c.gbar >= 0.0) || !c.gbar.is_finite() {
                return Err(bad(
                    format!("currents[{i}] ('{}').gbar", c.name),
                    "must be finite and non-negative",
                ));
            }
            if !c.reversal.is_finite() {
                return Err(bad(
                    format!("currents[{i}] ('{}').reversal", c.name),
                    "must be finite",
                ));
            }
            let mut uses = Vec::with_capacity(c.gates.len());
            for (j, u) in c.gates.iter().enumerate() {
                let path = format!("currents[{i}] ('{}').gates[{j}]", c.name);
                let &g = index
                    .get(u.gate.as_str())
                    .ok_or_else(|| bad(path.clone(), &format!("unknown gate '{}'", u.gate)))?;
                if u.exponent < 1 {
                    return Err(bad(path, "exponent must be at least 1"));
                }
                uses.push((g, u.exponent as i32));
            }
            links.push(uses);
        }
        self.links = links;
        Ok(())
    }

    /// Total ionic current `sum I` at voltage `v` with gate values `x`.
    #[inline]
    pub fn ionic_current(&self, v: f64, x: &[f64]) -> f64 {
        self.currents
            .iter()
            .zip(&self.links)
            .map(|(c, uses)| {
                let open: f64 = uses.iter().map(|&(g, p)| x[g].powi(p)).product();
                c.gbar * open * (v - c.reversal)
            })
            .sum()
    }

    /// `dV/dt = -sum I / C` in native units.
    #[inline]
    pub fn dv_dt(&self, v: f64, x: &[f64]) -> f64 {
        -self.ionic_current(v, x) / self.capacitance
    }

    pub fn steady_gates(&self, v: f64) -> Vec<f64> {
        self.gates
            .iter()
            .map(|g| g.kinetics.steady_state(v))
            .collect()
    }

    /// `dV/dt` with every gate at steady state.
    pub fn steady_state_current(&self, v: f64) -> f64 {
        self.dv_dt(v, &self.steady_gates(v))
    }

    pub fn gate_index(&self, name: &str) -> Option<usize> {
        self.gates.iter().position(|g| g.name == name)
    }
}

/// Equilibrium of the full model: membrane voltage and gate values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestingState {
    pub v_rest: f64,
    pub gates: Vec<f64>,
}

const REST_SEARCH: f64 = 30.0;
const REST_SCAN: usize = 600;
const REST_RESIDUAL: f64 = 1e-10;

/// Finds the equilibrium nearest the declared resting potential.
pub fn resting_state(model: &Model) -> Result<RestingState> {
    let m = match model {
        Model::Cubic(_) => {
            return Ok(RestingState {
                v_rest: 0.0,
                gates: Vec::new(),
            })
        }
        Model::Conductance(m) => m,
    };
    let declared = m.resting_potential;
    let f = |v: f64| m.steady_state_current(v);
    let (lo, hi) = (declared - REST_SEARCH, declared + REST_SEARCH);
    let xs: Vec<f64> = (0..=REST_SCAN)
        .map(|i| lo + (hi - lo) * i as f64 / REST_SCAN as f64)
        .collect();
    let fs: Vec<f64> = xs.iter().map(|&v| f(v)).collect();
    let scale = fs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    if !(scale > 1e-300) {
        return Err(Error::Model(format!(
            "'{}': the steady-state current vanishes identically near {declared}; every voltage is an equilibrium",
            m.name
        )));
    }
    let mut best: Option<f64> = None;
    for i in 0..REST_SCAN {
        if fs[i] == 0.0 || fs[i].signum() != fs[i + 1].signum() {
            // stable crossings only: dV/dt goes from + to -
            if fs[i] < 0.0 || fs[i + 1] > 0.0 {
                continue;
            }
            let r = roots::brent(f, xs[i], xs[i + 1], ROOT_TOL)?;
            if best.is_none_or(|b| (r - declared).abs() < (b - declared).abs()) {
                best = Some(r);
            }
        }
    }
    let v_rest = best.ok_or_else(|| {
        Error::Model(format!(
            "'{}': no stable equilibrium within {REST_SEARCH} of the declared rest {declared}",
            m.name
        ))
    })?;
    let residual = f(v_rest).abs();
    if residual > REST_RESIDUAL {
        return Err(Error::Model(format!(
            "'{}': resting-state residual {residual:e} exceeds {REST_RESIDUAL:e}",
            m.name
        )));
    }
    Ok(RestingState {
        v_rest,
        gates: m.steady_gates(v_rest),
    })
}

/// Full (all gates dynamic) model in normalised voltage `v = (V - V_rest) / scale`.
#[derive(Debug, Clone)]
pub struct FullCell {
    model: IonicModel,
    rest: RestingState,
    scale: f64,
    tau: f64,
}

impl FullCell {
    pub(crate) fn new(model: IonicModel, rest: RestingState, scale: f64, tau: f64) -> Self {
        FullCell {
            model,
            rest,
            scale,
            tau,
        }
    }

    pub fn native(&self, v: f64) -> f64 {
        self.rest.v_rest + v * self.scale
    }
}

impl CellDynamics for FullCell {
    fn dim(&self) -> usize {
        1 + self.model.gates.len()
    }

    fn rest_state(&self) -> Vec<f64> {
        let mut s = vec![0.0];
        s.extend_from_slice(&self.rest.gates);
        s
    }

    fn clamped_state(&self, v: f64) -> Vec<f64> {
        let mut s = vec![v];
        s.extend(self.model.steady_gates(self.native(v)));
        s
    }

    #[inline]
    fn derivative(&self, state: &[f64], injected: f64, out: &mut [f64]) {
        let vn = self.native(state[0]);
        let x = &state[1..];
        out[0] = self.model.dv_dt(vn, x) / self.scale + injected;
        for (i, g) in self.model.gates.iter().enumerate() {
            out[1 + i] = g.kinetics.rate_of_change(vn, x[i]);
        }
    }

    fn time_constant(&self) -> f64 {
        self.tau
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LEAK_ONLY: &str = r#"{
        "kind": "conductance", "name": "leak", "capacitance": 1.0, "resting_potential": -70.0,
        "currents": [{"name": "L", "gbar": 0.1, "reversal": -70.0}],
        "gates": []
    }"#;

    #[test]
    fn leak_only_rests_at_reversal() {
        let m = Model::from_json(LEAK_ONLY).unwrap();
        let r = resting_state(&m).unwrap();
        assert!((r.v_rest + 70.0).abs() < 1e-9);
    }

    #[test]
    fn degenerate_model_has_no_resting_state() {
        let text = LEAK_ONLY.replace("0.1", "0.0");
        let m = Model::from_json(&text).unwrap();
        assert!(matches!(resting_state(&m), Err(Error::Model(_))));
    }

    #[test]
    fn cubic_rests_at_zero() {
        let r = resting_state(&Model::cubic(0.15).unwrap()).unwrap();
        assert_eq!(r.v_rest, 0.0);
    }

    #[test]
    fn diagnostics_name_the_field() {
        let text = r#"{
            "kind": "conductance", "name": "x", "capacitance": 1.0, "resting_potential": -70.0,
            "currents": [{"name": "Na", "gbar": 1.0, "reversal": 50.0, "gates": [{"gate": "q", "exponent": 3}]}],
            "gates": []
        }"#;
        let e = Model::from_json(text).unwrap_err().to_string();
        assert!(e.contains("currents[0]") && e.contains("'q'"), "{e}");

        let e = Model::from_json("{\n  \"kind\": \"conductance\",\n  \"name\": 3\n}").unwrap_err();
        assert!(matches!(e, Error::ModelParse(_)));
        assert!(e.to_string().contains("line 3"), "{e}");

        let e = Model::from_json(r#"{"kind": "cubic", "name": "c", "v_t": 0.7}"#).unwrap_err();
        assert!(matches!(e, Error::InvalidParameter { .. }));
    }
}
