//! Gate-frozen reduction to a scalar current and numeric landmark extraction.

use serde::{Deserialize, Serialize};

use super::model::{IonicModel, Model, ReductionRule, RestingState};
use crate::cubic::{CubicCell, Excitable, Landmarks};
use crate::roots::{self, ROOT_TOL};
use crate::sim::CellDynamics;
use crate::{Error, Result};

/// Step of the finite-difference stencils, in normalised voltage.
pub const FD_STEP: f64 = 1e-3;

const SCAN_POINTS: usize = 4000;

#[derive(Debug, Clone)]
enum Scalar {
    Cubic(CubicCell),
    Conductance {
        model: IonicModel,
        /// `Some(x_rest)` for frozen gates, `None` for instantaneous ones.
        frozen: Vec<Option<f64>>,
    },
}

/// A scalar current `F_red(v)` in normalised voltage `v = (V - V_rest) / scale`,
/// so that rest sits at 0 and, for an excitable reduction, the peak at 1.
#[derive(Debug, Clone)]
pub struct ReducedCurrent {
    scalar: Scalar,
    v_rest: f64,
    scale: f64,
    window: (f64, f64),
}

impl ReducedCurrent {
    /// `dV/dt` of the reduction at native voltage `vn`.
    pub fn native(&self, vn: f64) -> f64 {
        match &self.scalar {
            Scalar::Cubic(c) => c.f(vn),
            Scalar::Conductance { model, frozen } => {
                let x: Vec<f64> = model
                    .gates
                    .iter()
                    .zip(frozen)
                    .map(|(g, f)| f.unwrap_or_else(|| g.kinetics.steady_state(vn)))
                    .collect();
                model.dv_dt(vn, &x)
            }
        }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match &self.scalar {
            Scalar::Cubic(c) => c.f(v),
            Scalar::Conductance { .. } => self.native(self.v_rest + v * self.scale) / self.scale,
        }
    }

    /// Resting potential in native units.
    pub fn v_rest(&self) -> f64 {
        self.v_rest
    }

    /// Native voltage span of one normalised unit (`V_F - V_rest` when excitable).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn to_native(&self, v: f64) -> f64 {
        self.v_rest + v * self.scale
    }

    /// Search window for zeros, normalised.
    pub fn window(&self) -> (f64, f64) {
        self.window
    }

    pub fn is_cubic(&self) -> bool {
        matches!(self.scalar, Scalar::Cubic(_))
    }
}

/// Five-point central first derivative.
pub fn diff1<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second derivative.
pub fn diff2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// Zeros of `f` on `[lo, hi]` from sign changes on an `n`-interval grid.
pub fn scan_zeros<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let x = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let mut out = Vec::new();
    let mut prev = f(lo);
    if prev == 0.0 {
        out.push(lo);
    }
    for i in 1..=n {
        let xi = x(i);
        let fi = f(xi);
        if fi == 0.0 {
            out.push(xi);
        } else if prev != 0.0 && prev.signum() != fi.signum() {
            out.push(roots::brent(&f, x(i - 1), xi, ROOT_TOL)?);
        }
        prev = fi;
    }
    Ok(out)
}

/// Replaces instantaneous gates by `x_inf(V)` and holds frozen ones at rest.
///
/// The result is recentred on the resting potential and scaled so the upper
/// zero (the peak of the disconnected cell) lands on 1. When there is no
/// upper zero the scale is left at one native unit; [`extract_landmarks`]
/// then reports the reduction as not excitable.
pub fn reduce_to_1d(model: &Model, rest: &RestingState) -> Result<ReducedCurrent> {
    let m = match model {
        Model::Cubic(c) => {
            let cell = CubicCell::new(c.v_t)?;
            return Ok(ReducedCurrent {
                scalar: Scalar::Cubic(cell),
                v_rest: 0.0,
                scale: 1.0,
                window: (-0.5, 1.5),
            });
        }
        Model::Conductance(m) => m,
    };
    let mut frozen = Vec::with_capacity(m.gates.len());
    for (i, g) in m.gates.iter().enumerate() {
        frozen.push(match g.reduction {
            ReductionRule::Instantaneous => None,
            ReductionRule::FrozenAtRest => Some(rest.gates[i]),
            ReductionRule::Dynamic => {
                return Err(Error::Model(format!(
                    "'{}': gate '{}' is marked dynamic; a scalar reduction needs every gate instantaneous or frozen",
                    m.name, g.name
                )))
            }
        });
    }
    let mut red = ReducedCurrent {
        scalar: Scalar::Conductance {
            model: m.clone(),
            frozen,
        },
        v_rest: rest.v_rest,
        scale: 1.0,
        window: (m.window[0] - rest.v_rest, m.window[1] - rest.v_rest),
    };
    let zeros = scan_zeros(|v| red.native(v), m.window[0], m.window[1], SCAN_POINTS)?;
    let tol = 1e-6 * (m.window[1] - m.window[0]);
    let above: Vec<f64> = zeros
        .into_iter()
        .filter(|&z| z > rest.v_rest + tol)
        .collect();
    if let Some(&peak) = above.get(1) {
        red.scale = peak - rest.v_rest;
        red.window = (red.window.0 / red.scale, red.window.1 / red.scale);
    }
    Ok(red)
}

/// Locates the landmarks of a reduced current numerically: zeros by scan and
/// Brent, extrema and inflection from finite-difference derivatives, and
/// `v_E` from `F(v) = F'(v) v` between the inflection and the maximum.
pub fn extract_landmarks(red: &ReducedCurrent) -> Result<Landmarks> {
    let f = |v: f64| red.eval(v);
    let d1 = |v: f64| diff1(f, v, FD_STEP);
    let d2 = |v: f64| diff2(f, v, FD_STEP);
    let (lo, hi) = red.window;
    let zeros = scan_zeros(f, lo, hi, SCAN_POINTS)?;
    let rest_tol = 1e-6 * (hi - lo);
    let rest_found = zeros.iter().any(|z| z.abs() <= rest_tol);
    let above: Vec<f64> = zeros.iter().copied().filter(|&z| z > rest_tol).collect();
    if !rest_found {
        return Err(Error::NotExcitable { landmark: "rest" });
    }
    let (v_t, v_f) = match above.as_slice() {
        [] => return Err(Error::NotExcitable { landmark: "v_t" }),
        [_] => return Err(Error::NotExcitable { landmark: "v_f" }),
        [a, b] if zeros.len() == 3 => (*a, *b),
        _ => {
            return Err(Error::NotExcitable {
                landmark: "three zeros",
            })
        }
    };
    let bracket = |g: &dyn Fn(f64) -> f64, a: f64, b: f64, name: &'static str| -> Result<f64> {
        let (ga, gb) = (g(a), g(b));
        if !(ga.signum() != gb.signum()) {
            return Err(Error::NotExcitable { landmark: name });
        }
        roots::brent(g, a, b, ROOT_TOL).map_err(|_| Error::NotExcitable { landmark: name })
    };
    let v_min = bracket(&d1, 0.0, v_t, "v_min")?;
    let v_max = bracket(&d1, v_t, v_f, "v_max")?;
    let v_i = bracket(&d2, v_min, v_max, "v_i")?;
    let v_e = bracket(&|v| f(v) - d1(v) * v, v_i, v_max, "v_e")?;
    let lm = Landmarks {
        v_min,
        v_t,
        v_i,
        v_e,
        v_max,
        v_f,
    };
    if !lm.is_ordered() {
        return Err(Error::NotExcitable {
            landmark: "landmark ordering",
        });
    }
    Ok(lm)
}

/// A reduced current together with its landmarks; plugs into the region and
/// tree analyses and into the simulator.
#[derive(Debug, Clone)]
pub struct ReducedCell {
    current: ReducedCurrent,
    landmarks: Landmarks,
}

impl ReducedCell {
    pub fn new(current: ReducedCurrent) -> Result<Self> {
        let landmarks = extract_landmarks(&current)?;
        Ok(ReducedCell { current, landmarks })
    }

    pub fn reduced(&self) -> &ReducedCurrent {
        &self.current
    }

    /// Linearised leak at rest, `|F_red'(0)|`.
    pub fn g_leak(&self) -> f64 {
        self.current_slope(0.0).abs()
    }
}

impl Excitable for ReducedCell {
    #[inline]
    fn current(&self, v: f64) -> f64 {
        self.current.eval(v)
    }

    fn current_slope(&self, v: f64) -> f64 {
        match &self.current.scalar {
            Scalar::Cubic(c) => c.f_prime(v),
            Scalar::Conductance { .. } => diff1(|x| self.current.eval(x), v, FD_STEP),
        }
    }

    fn landmarks(&self) -> &Landmarks {
        &self.landmarks
    }
}

impl CellDynamics for ReducedCell {
    fn dim(&self) -> usize {
        1
    }

    fn rest_state(&self) -> Vec<f64> {
        vec![0.0]
    }

    #[inline]
    fn derivative(&self, state: &[f64], injected: f64, out: &mut [f64]) {
        out[0] = self.current.eval(state[0]) + injected;
    }

    fn time_constant(&self) -> f64 {
        1.0 / self.g_leak()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateTimescale {
    pub gate: String,
    pub declared: ReductionRule,
    pub tau_at_rest: f64,
    /// `tau_at_rest / tau_membrane`
    pub ratio: f64,
    pub suggested: ReductionRule,
}

/// Gate time constants at rest against the passive membrane time constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimescaleReport {
    /// `C / g_total` at rest.
    pub tau_membrane: f64,
    pub gates: Vec<GateTimescale>,
}

/// Gates faster than this fraction of the membrane time constant are
/// suggested as instantaneous, the rest as frozen.
pub const FAST_GATE_RATIO: f64 = 0.5;

pub fn timescale_report(model: &IonicModel, rest: &RestingState) -> TimescaleReport {
    let chord: f64 = model
        .currents
        .iter()
        .map(|c| {
            let open: f64 = c
                .gates
                .iter()
                .map(|u| {
                    let i = model.gate_index(&u.gate).expect("validated model");
                    rest.gates[i].powi(u.exponent as i32)
                })
                .product();
            c.gbar * open
        })
        .sum();
    let tau_membrane = model.capacitance / chord;
    let gates = model
        .gates
        .iter()
        .map(|g| {
            let tau = g.kinetics.time_constant(rest.v_rest);
            let ratio = tau / tau_membrane;
            GateTimescale {
                gate: g.name.clone(),
                declared: g.reduction,
                tau_at_rest: tau,
                ratio,
                suggested: if ratio < FAST_GATE_RATIO {
                    ReductionRule::Instantaneous
                } else {
                    ReductionRule::FrozenAtRest
                },
            }
        })
        .collect();
    TimescaleReport {
        tau_membrane,
        gates,
    }
}
