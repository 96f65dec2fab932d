//! Fixed-step simulation of single cells and collapsed chains.
//!
//! A chain has an upstream driver (cell 0) followed by `n_cells` free cells.
//! Free cell `j` receives `g (v_{j-1} - v_j)` from upstream and
//! `g k (v_{j+1} - v_j)` from its `k` downstream neighbours; the downstream
//! neighbours of the last cell are held at rest. The driver follows a
//! [`ClampProtocol`]. `simulate_single` is the chain with one free cell.
//!
//! Voltages are in normalised units (rest 0, peak 1); time is in the model's
//! own units.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cubic::{CubicCell, Landmarks};
use crate::region::PropagationClass;
use crate::{Error, Result};

/// Default step for the dimensionless cubic model.
pub const DEFAULT_DT: f64 = 0.01;

/// `|v| < REST_TOL` at the end of a trace counts as back at rest.
pub const REST_TOL: f64 = 1e-3;

/// Right-hand side of one cell. Component 0 of the state is the voltage.
pub trait CellDynamics: Sync {
    fn dim(&self) -> usize;

    /// State at rest (voltage 0).
    fn rest_state(&self) -> Vec<f64>;

    /// State of a cell held at voltage `v` long enough for its gates to settle.
    fn clamped_state(&self, v: f64) -> Vec<f64> {
        let mut s = self.rest_state();
        s[0] = v;
        s
    }

    /// Writes `d state / dt` into `out`; `injected` is the gap-junction term
    /// added to `dv/dt`.
    fn derivative(&self, state: &[f64], injected: f64, out: &mut [f64]);

    /// Membrane time constant at rest.
    fn time_constant(&self) -> f64;
}

impl CellDynamics for CubicCell {
    fn dim(&self) -> usize {
        1
    }

    fn rest_state(&self) -> Vec<f64> {
        vec![0.0]
    }

    #[inline]
    fn derivative(&self, state: &[f64], injected: f64, out: &mut [f64]) {
        out[0] = self.f(state[0]) + injected;
    }

    fn time_constant(&self) -> f64 {
        1.0 / self.threshold()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClampSegment {
    pub duration: f64,
    pub v_u: f64,
}

/// What the driver does once a release rule fires.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AfterRelease {
    /// Hold the driver at this voltage.
    Clamp(f64),
    /// Let the driver evolve under its own dynamics, coupled to cell 1.
    Free,
}

/// Hold the clamp until cell `observed` reaches `threshold`, then switch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseRule {
    /// Index into the chain; 1 is the first free cell.
    pub observed: usize,
    pub threshold: f64,
    pub then: AfterRelease,
}

/// Upstream voltage schedule. Segments play in order and the last value is
/// held after they run out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClampProtocol {
    segments: Vec<ClampSegment>,
    release: Option<ReleaseRule>,
}

impl ClampProtocol {
    pub fn new(segments: Vec<ClampSegment>, release: Option<ReleaseRule>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Simulation(
                "a clamp protocol needs at least one segment".into(),
            ));
        }
        for s in &segments {
            if !(s.duration > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "duration",
                    value: s.duration,
                    reason: "clamp segments must have positive duration",
                });
            }
            if !s.v_u.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "v_u",
                    value: s.v_u,
                    reason: "clamp voltage must be finite",
                });
            }
        }
        if let Some(r) = &release {
            if r.observed == 0 {
                return Err(Error::Simulation(
                    "the release rule cannot observe the driver itself".into(),
                ));
            }
        }
        Ok(ClampProtocol { segments, release })
    }

    /// `v_u` held forever.
    pub fn constant(v_u: f64) -> Self {
        ClampProtocol {
            segments: vec![ClampSegment {
                duration: f64::INFINITY,
                v_u,
            }],
            release: None,
        }
    }

    /// `v_on` on `[0, t_on]`, then `v_off`.
    pub fn step(v_on: f64, t_on: f64, v_off: f64) -> Result<Self> {
        ClampProtocol::new(
            vec![
                ClampSegment {
                    duration: t_on,
                    v_u: v_on,
                },
                ClampSegment {
                    duration: f64::INFINITY,
                    v_u: v_off,
                },
            ],
            None,
        )
    }

    /// Driver at `v_f` until cell `observed` reaches `threshold`, then `then`.
    pub fn until(v_f: f64, observed: usize, threshold: f64, then: AfterRelease) -> Result<Self> {
        ClampProtocol::new(
            vec![ClampSegment {
                duration: f64::INFINITY,
                v_u: v_f,
            }],
            Some(ReleaseRule {
                observed,
                threshold,
                then,
            }),
        )
    }

    pub fn segments(&self) -> &[ClampSegment] {
        &self.segments
    }

    pub fn release(&self) -> Option<&ReleaseRule> {
        self.release.as_ref()
    }

    /// Scheduled voltage at time `t`, ignoring the release rule.
    pub fn scheduled(&self, t: f64) -> f64 {
        let mut end = 0.0;
        for s in &self.segments {
            end += s.duration;
            if t < end {
                return s.v_u;
            }
        }
        self.segments[self.segments.len() - 1].v_u
    }

    /// Time at which the schedule leaves its first segment, if it does.
    pub fn first_switch(&self) -> Option<f64> {
        let d = self.segments[0].duration;
        (self.segments.len() > 1 && d.is_finite()).then_some(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Free cells downstream of the driver.
    pub n_cells: usize,
    /// Conductance from upstream.
    pub g: f64,
    /// Downstream fan-out; each cell sends `k g` downstream.
    pub k: f64,
}

impl ChainConfig {
    pub fn new(n_cells: usize, g: f64, k: f64) -> Result<Self> {
        if n_cells == 0 {
            return Err(Error::Simulation(
                "a chain needs at least one free cell".into(),
            ));
        }
        if !(g > 0.0) || !g.is_finite() {
            return Err(Error::InvalidParameter {
                name: "g",
                value: g,
                reason: "coupling conductance must be positive",
            });
        }
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                reason: "fan-out must be non-negative",
            });
        }
        Ok(ChainConfig { n_cells, g, k })
    }

    /// Index of the second-to-last cell (the driver when `n_cells == 1`).
    pub fn penultimate(&self) -> usize {
        self.n_cells - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integration {
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `stride`-th step (the last step is always kept).
    pub stride: usize,
}

impl Integration {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: dt,
                reason: "time step must be positive",
            });
        }
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t_end",
                value: t_end,
                reason: "horizon must be positive",
            });
        }
        Ok(Integration {
            dt,
            t_end,
            stride: 1,
        })
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride.max(1);
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round().max(1.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub dt: f64,
    pub stride: usize,
    pub integrator: String,
    pub config_hash: String,
    /// `None` without a release rule.
    pub release_triggered: Option<bool>,
    pub release_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `voltages[j][i]` is cell `j` at `times[i]`; cell 0 is the driver.
    pub voltages: Vec<Vec<f64>>,
    /// Per-cell maximum over every step, stored or not.
    pub max_voltage: Vec<f64>,
    pub metadata: TrajectoryMeta,
}

impl Trajectory {
    pub fn terminal(&self, cell: usize) -> f64 {
        *self.voltages[cell]
            .last()
            .expect("trajectories are never empty")
    }

    /// Largest stored voltage of `cell` at or before `t`.
    pub fn max_before(&self, cell: usize, t: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.voltages[cell])
            .take_while(|(&s, _)| s <= t)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// CSV with header `t,v0,v1,...`; floats use shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for j in 0..self.voltages.len() {
            write!(out, ",v{j}")?;
        }
        writeln!(out)?;
        for (i, t) in self.times.iter().enumerate() {
            write!(out, "{t}")?;
            for series in &self.voltages {
                write!(out, ",{}", series[i])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// One free cell driven through conductance `g`, with `k g` to resting
/// downstream neighbours: `dv/dt = F(v) + g (v_u - v) - g k v`.
pub fn simulate_single<D: CellDynamics + ?Sized>(
    cell: &D,
    g: f64,
    k: f64,
    protocol: &ClampProtocol,
    integration: Integration,
) -> Result<Trajectory> {
    simulate_chain(cell, ChainConfig::new(1, g, k)?, protocol, integration)
}

/// Integrates the collapsed chain with classical RK4 from rest.
pub fn simulate_chain<D: CellDynamics + ?Sized>(
    cell: &D,
    config: ChainConfig,
    protocol: &ClampProtocol,
    integration: Integration,
) -> Result<Trajectory> {
    let ChainConfig { n_cells, g, k } = config;
    let Integration { dt, stride, .. } = integration;
    if let Some(r) = protocol.release() {
        if r.observed > n_cells {
            return Err(Error::Simulation(format!(
                "release rule observes cell {} but the chain has cells 0..={n_cells}",
                r.observed
            )));
        }
    }
    let d = cell.dim();
    let cells = n_cells + 1;
    let steps = integration.steps();

    // the driver carries a full state
    let mut y = vec![0.0; cells * d];
    for j in 0..cells {
        y[j * d..(j + 1) * d].copy_from_slice(&cell.rest_state());
    }
    let mut driver = Driver::Clamped(protocol.scheduled(0.5 * dt));
    y[0] = driver.clamp_value().unwrap_or(0.0);

    let capacity = steps / stride + 2;
    let mut times = Vec::with_capacity(capacity);
    let mut voltages = vec![Vec::with_capacity(capacity); cells];
    let mut max_voltage = vec![f64::NEG_INFINITY; cells];
    let record = |i: usize, y: &[f64], times: &mut Vec<f64>, voltages: &mut [Vec<f64>]| {
        times.push(i as f64 * dt);
        for j in 0..cells {
            voltages[j].push(y[j * d]);
        }
    };
    record(0, &y, &mut times, &mut voltages);
    for j in 0..cells {
        max_voltage[j] = y[j * d];
    }

    let mut rk = Rk4::new(cells * d);
    let mut release_time = None;
    for i in 0..steps {
        let t_mid = (i as f64 + 0.5) * dt;
        if release_time.is_none() {
            driver = Driver::Clamped(protocol.scheduled(t_mid));
        }
        if let Driver::Clamped(v) = driver {
            y[0] = v;
        }
        let rhs = |y: &[f64], dy: &mut [f64]| chain_rhs(cell, d, cells, g, k, driver, y, dy);
        rk.step(&mut y, dt, rhs);
        if let Driver::Clamped(v) = driver {
            y[0] = v;
        }
        if !y.iter().all(|x| x.is_finite()) {
            return Err(Error::Simulation(format!(
                "state became non-finite at t = {} (dt = {dt} may be too large)",
                (i + 1) as f64 * dt
            )));
        }
        for j in 0..cells {
            max_voltage[j] = max_voltage[j].max(y[j * d]);
        }
        if let (None, Some(rule)) = (release_time, protocol.release()) {
            if y[rule.observed * d] >= rule.threshold {
                release_time = Some((i + 1) as f64 * dt);
                driver = match rule.then {
                    AfterRelease::Clamp(v) => Driver::Clamped(v),
                    AfterRelease::Free => {
                        let s = cell.clamped_state(y[0]);
                        y[..d].copy_from_slice(&s);
                        Driver::Free
                    }
                };
                if let Driver::Clamped(v) = driver {
                    y[0] = v;
                }
            }
        }
        if (i + 1) % stride == 0 || i + 1 == steps {
            record(i + 1, &y, &mut times, &mut voltages);
        }
    }

    Ok(Trajectory {
        times,
        voltages,
        max_voltage,
        metadata: TrajectoryMeta {
            dt,
            stride,
            integrator: "rk4".into(),
            config_hash: config_hash(&config, protocol, &integration, d),
            release_triggered: protocol.release().map(|_| release_time.is_some()),
            release_time,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Driver {
    Clamped(f64),
    Free,
}

impl Driver {
    fn clamp_value(self) -> Option<f64> {
        match self {
            Driver::Clamped(v) => Some(v),
            Driver::Free => None,
        }
    }
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn chain_rhs<D: CellDynamics + ?Sized>(
    cell: &D,
    d: usize,
    cells: usize,
    g: f64,
    k: f64,
    driver: Driver,
    y: &[f64],
    dy: &mut [f64],
) {
    let gk = g * k;
    match driver {
        Driver::Clamped(_) => dy[..d].iter_mut().for_each(|x| *x = 0.0),
        Driver::Free => {
            // the freed driver only sees its downstream neighbour
            let inj = gk * (y[d] - y[0]);
            cell.derivative(&y[..d], inj, &mut dy[..d]);
        }
    }
    for j in 1..cells {
        let v = y[j * d];
        let up = y[(j - 1) * d];
        let down = if j + 1 < cells { y[(j + 1) * d] } else { 0.0 };
        let inj = g * (up - v) + gk * (down - v);
        cell.derivative(&y[j * d..(j + 1) * d], inj, &mut dy[j * d..(j + 1) * d]);
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Rk4 {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    fn step<F: FnMut(&[f64], &mut [f64])>(&mut self, y: &mut [f64], dt: f64, mut f: F) {
        f(y, &mut self.k1);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k1) {
            *t = y + 0.5 * dt * k;
        }
        f(&self.tmp, &mut self.k2);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k2) {
            *t = y + 0.5 * dt * k;
        }
        f(&self.tmp, &mut self.k3);
        for ((t, &y), &k) in self.tmp.iter_mut().zip(y.iter()).zip(&self.k3) {
            *t = y + dt * k;
        }
        f(&self.tmp, &mut self.k4);
        for (i, y) in y.iter_mut().enumerate() {
            *y += dt / 6.0 * (self.k1[i] + 2.0 * (self.k2[i] + self.k3[i]) + self.k4[i]);
        }
    }
}

// FNV-1a over the bit patterns.
fn config_hash(
    config: &ChainConfig,
    protocol: &ClampProtocol,
    integration: &Integration,
    dim: usize,
) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(config.n_cells as u64);
    eat(config.g.to_bits());
    eat(config.k.to_bits());
    eat(integration.dt.to_bits());
    eat(integration.t_end.to_bits());
    eat(integration.stride as u64);
    eat(dim as u64);
    for s in protocol.segments() {
        eat(s.duration.to_bits());
        eat(s.v_u.to_bits());
    }
    if let Some(r) = protocol.release() {
        eat(r.observed as u64);
        eat(r.threshold.to_bits());
        match r.then {
            AfterRelease::Clamp(v) => eat(v.to_bits()),
            AfterRelease::Free => eat(u64::MAX),
        }
    }
    format!("{h:016x}")
}

/// Classifies the response of `cell` after the driver is released at
/// `release_time`.
///
/// Active if the cell ends above `v_E`; semi-active if it exceeded `v_E`
/// before release but ends back at rest; passive otherwise. The trace must
/// extend at least `5 tau` past the release.
pub fn classify_trajectory(
    traj: &Trajectory,
    cell: usize,
    release_time: f64,
    landmarks: &Landmarks,
    tau: f64,
) -> Result<PropagationClass> {
    let t_last = *traj.times.last().expect("trajectories are never empty");
    if t_last < release_time + 5.0 * tau {
        return Err(Error::Simulation(format!(
            "trajectory ends at t = {t_last}, before release + 5 tau = {}",
            release_time + 5.0 * tau
        )));
    }
    if cell >= traj.voltages.len() {
        return Err(Error::Simulation(format!("no cell {cell} in trajectory")));
    }
    let terminal = traj.terminal(cell);
    let class = if terminal > landmarks.v_e {
        PropagationClass::Active
    } else if traj.max_before(cell, release_time) > landmarks.v_e && terminal.abs() < REST_TOL {
        PropagationClass::SemiActive
    } else {
        PropagationClass::Passive
    };
    Ok(class)
}

/// Whether an isolated cell nudged `delta` above and below rest relaxes back
/// (to within `delta / 2` after twenty time constants).
pub fn rest_is_stable<D: CellDynamics + ?Sized>(cell: &D, delta: f64) -> bool {
    let tau = cell.time_constant();
    if !(tau > 0.0) || !tau.is_finite() {
        return false;
    }
    let dt = tau / 200.0;
    let d = cell.dim();
    [delta, -delta].iter().all(|&nudge| {
        let mut y = cell.rest_state();
        y[0] += nudge;
        let mut rk = Rk4::new(d);
        for _ in 0..4000 {
            rk.step(&mut y, dt, |s, ds| cell.derivative(s, 0.0, ds));
        }
        y[0].is_finite() && y[0].abs() < 0.5 * delta
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LengthSensitivity {
    pub n_cells: usize,
    pub penultimate_max: f64,
    pub doubled_penultimate_max: f64,
}

impl LengthSensitivity {
    pub fn change(&self) -> f64 {
        (self.doubled_penultimate_max - self.penultimate_max).abs()
    }
}

/// Reruns a chain with twice as many cells and compares the maximum of the
/// penultimate cell.
pub fn chain_length_sensitivity<D: CellDynamics + ?Sized>(
    cell: &D,
    config: ChainConfig,
    protocol: &ClampProtocol,
    integration: Integration,
) -> Result<LengthSensitivity> {
    let a = simulate_chain(cell, config, protocol, integration)?;
    let doubled = ChainConfig {
        n_cells: 2 * config.n_cells,
        ..config
    };
    let b = simulate_chain(cell, doubled, protocol, integration)?;
    Ok(LengthSensitivity {
        n_cells: config.n_cells,
        penultimate_max: a.max_voltage[config.penultimate()],
        doubled_penultimate_max: b.max_voltage[doubled.penultimate()],
    })
}
