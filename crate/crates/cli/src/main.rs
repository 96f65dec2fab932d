//! `gapjunc`: CSV front end for the propagation analyses and simulations.
//!
//! Exit codes: 0 ok, 2 bad arguments, 3 empty domain, 4 analysis domain
//! error, 5 model-file error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gapjunc::cubic::TANGENCY_TOL;
use gapjunc::ionic::{self, Dynamics, Model, Network, PreparedModel, SweepConfig};
use gapjunc::region::{self, Coupling};
use gapjunc::sim::{self, AfterRelease, CellDynamics, ChainConfig, ClampProtocol, Integration};
use gapjunc::tree;
use gapjunc::{par, CubicCell, Excitable, Execution, GridSpec, Landmarks};

use output::{opt, Csv};

#[derive(Parser)]
#[command(
    name = "gapjunc",
    version,
    about = "Action-potential propagation through gap-junction-coupled cells"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Landmark voltages of the cubic current or of a reduced model.
    Landmarks {
        #[command(flatten)]
        cell: CellArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Firing boundary k_max(g) and excitability boundary k_exc(g).
    Regions {
        #[command(flatten)]
        cell: CellArgs,
        /// Upstream clamp voltage.
        #[arg(long, default_value_t = 1.0)]
        vu: f64,
        /// g grid `min:max:count[:log]`, clipped to (g_min, g_max). Default: 1000 interior points.
        #[arg(long)]
        g: Option<GridSpec>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// v_inf and class over a (g, k) grid.
    Heatmap {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value_t = 1.0)]
        vu: f64,
        #[arg(long, default_value = "0.005:0.3:60")]
        g: GridSpec,
        #[arg(long, default_value = "0:6:61")]
        k: GridSpec,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Class of a single (g, k) point.
    Classify {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, default_value_t = 1.0)]
        vu: f64,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        k: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Iterates the tree map from v_0 = v_F.
    Iterate {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        k: f64,
        /// Stop once successive iterates differ by less than this.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Region of persistent propagation k_prop(g).
    Treeregion {
        #[command(flatten)]
        cell: CellArgs,
        /// g grid; points below the tree g_min are dropped. Default: tree g_min to 0.3, 500 points.
        #[arg(long)]
        g: Option<GridSpec>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Time-domain simulation of a driven cell or collapsed chain.
    Simulate {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Full)]
        dynamics: DynamicsArg,
        #[arg(long)]
        g: f64,
        #[arg(long)]
        k: f64,
        /// Free cells downstream of the driver.
        #[arg(long, default_value_t = 1)]
        n_cells: usize,
        #[arg(long, value_enum, default_value_t = ProtocolArg::Step)]
        protocol: ProtocolArg,
        /// Driver voltage while clamped (default v_F).
        #[arg(long)]
        v_on: Option<f64>,
        /// Clamp duration for the step protocol.
        #[arg(long, default_value_t = 30.0)]
        t_on: f64,
        /// Driver voltage after the step.
        #[arg(long, default_value_t = 0.0)]
        v_off: f64,
        #[command(flatten)]
        run: RunArgs,
        /// Keep every n-th step.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Condition-1 / condition-2 sweep over a (g, k) grid.
    Sweep {
        #[command(flatten)]
        cell: CellArgs,
        #[arg(long, value_enum, default_value_t = ModeArg::Single)]
        mode: ModeArg,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Full)]
        dynamics: DynamicsArg,
        /// Default: 0.005:0.3:40 for the cubic, 0.01:30:40:log for conductance models.
        #[arg(long)]
        g: Option<GridSpec>,
        /// Default: 0:6:40 for the cubic, 0:20:40 for conductance models.
        #[arg(long)]
        k: Option<GridSpec>,
        /// Free cells in tree mode.
        #[arg(long, default_value_t = 10)]
        n_cells: usize,
        /// Band threshold as a fraction of the spike amplitude.
        #[arg(long, default_value_t = 0.25)]
        band_fraction: f64,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args)]
struct CellArgs {
    /// Threshold of the cubic current, 0 < v_T < 1/2.
    #[arg(long, value_parser = parse_threshold, default_value_t = 0.15, conflicts_with = "model")]
    vt: f64,
    /// Model file or bundled model name (hh-squid, cubic, ...). Overrides --vt.
    #[arg(long)]
    model: Option<String>,
    /// Gap below which a line counts as touching the critical segment.
    #[arg(long, default_value_t = TANGENCY_TOL)]
    tangency_tol: f64,
}

#[derive(Args)]
struct RunArgs {
    /// Time step (default 0.01 for the cubic, 0.001 for conductance models).
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon (default 200 for the cubic, 30 for conductance models).
    #[arg(long)]
    t_end: Option<f64>,
    /// Condition-2 trigger voltage (default v_E).
    #[arg(long)]
    trigger: Option<f64>,
    /// Driver after the condition-2 trigger.
    #[arg(long, value_enum, default_value_t = ReleaseArg::Rest)]
    release: ReleaseArg,
}

#[derive(Args)]
struct OutArgs {
    /// Write here (atomically) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Worker threads for grid evaluation (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum DynamicsArg {
    Full,
    Reduced,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Single,
    Tree,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    /// v_on for t_on, then v_off.
    Step,
    /// v_on throughout.
    Constant,
    /// Driver at v_F throughout.
    Condition1,
    /// Driver at v_F until the observed cell reaches the trigger.
    Condition2,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReleaseArg {
    /// Clamp the driver to rest.
    Rest,
    /// Let the driver evolve freely.
    Free,
}

impl ReleaseArg {
    fn after(self) -> AfterRelease {
        match self {
            ReleaseArg::Rest => AfterRelease::Clamp(0.0),
            ReleaseArg::Free => AfterRelease::Free,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ReleaseArg::Rest => "rest",
            ReleaseArg::Free => "free",
        }
    }
}

fn parse_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v > 0.0 && v < 0.5 {
        Ok(v)
    } else {
        Err(format!(
            "v_T = {v} violates 0 < v_T < 1/2 (threshold must be closer to rest than to peak)"
        ))
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    EmptyDomain(String),
    #[error(transparent)]
    Analysis(gapjunc::Error),
    #[error("{0}")]
    Model(gapjunc::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<gapjunc::Error> for CliError {
    fn from(e: gapjunc::Error) -> Self {
        use gapjunc::Error as E;
        match e {
            E::InvalidParameter { .. } | E::Grid { .. } => CliError::Usage(e.to_string()),
            E::Model(_) | E::ModelParse(_) => CliError::Model(e),
            E::Io(io) => CliError::Io(io),
            other => CliError::Analysis(other),
        }
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::EmptyDomain(_) => 3,
            CliError::Analysis(_) => 4,
            CliError::Model(_) => 5,
            CliError::Io(_) => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

/// The cubic current or a prepared model, behind one analysis interface.
enum Cell {
    Cubic(CubicCell),
    Model(Box<PreparedModel>),
}

impl Excitable for Cell {
    fn current(&self, v: f64) -> f64 {
        match self {
            Cell::Cubic(c) => c.current(v),
            Cell::Model(m) => m.reduced.current(v),
        }
    }

    fn current_slope(&self, v: f64) -> f64 {
        match self {
            Cell::Cubic(c) => c.current_slope(v),
            Cell::Model(m) => m.reduced.current_slope(v),
        }
    }

    fn landmarks(&self) -> &Landmarks {
        match self {
            Cell::Cubic(c) => c.landmarks(),
            Cell::Model(m) => m.reduced.landmarks(),
        }
    }

    fn segment_point_with_slope(&self, slope: f64) -> Option<f64> {
        match self {
            Cell::Cubic(c) => c.segment_point_with_slope(slope),
            Cell::Model(m) => m.reduced.segment_point_with_slope(slope),
        }
    }

    fn chord_roots(&self, c: f64) -> Option<(f64, f64)> {
        match self {
            Cell::Cubic(cell) => cell.chord_roots(c),
            Cell::Model(m) => m.reduced.chord_roots(c),
        }
    }
}

impl CellArgs {
    fn load(&self) -> CliResult<Cell> {
        match &self.model {
            None => Ok(Cell::Cubic(CubicCell::new(self.vt)?)),
            Some(name) => Ok(Cell::Model(Box::new(self.prepared(name)?))),
        }
    }

    fn prepared(&self, name: &str) -> CliResult<PreparedModel> {
        let model = load_model(name)?;
        PreparedModel::new(model).map_err(|e| match e {
            gapjunc::Error::Io(io) => CliError::Io(io),
            other => CliError::Model(other),
        })
    }

    /// The model for simulation commands; the cubic at `--vt` by default.
    fn prepared_or_cubic(&self) -> CliResult<PreparedModel> {
        match &self.model {
            Some(name) => self.prepared(name),
            None => Ok(PreparedModel::new(Model::cubic(self.vt)?)?),
        }
    }

    fn describe(&self) -> Vec<(&'static str, String)> {
        let mut p = match &self.model {
            Some(m) => vec![("model", m.clone())],
            None => vec![("v_t", self.vt.to_string())],
        };
        p.push(("tangency_tol", self.tangency_tol.to_string()));
        p
    }
}

fn load_model(name: &str) -> CliResult<Model> {
    let path = Path::new(name);
    let loaded = if path.exists() {
        Model::from_path(path)
    } else if ionic::BUNDLED.iter().any(|(n, _)| *n == name) {
        ionic::bundled(name)
    } else {
        let names: Vec<&str> = ionic::BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(CliError::Model(gapjunc::Error::Model(format!(
            "'{name}' is neither a file nor a bundled model ({})",
            names.join(", ")
        ))));
    };
    loaded.map_err(|e| match e {
        gapjunc::Error::Io(io) => CliError::Model(gapjunc::Error::Model(format!("{name}: {io}"))),
        other => CliError::Model(other),
    })
}

impl OutArgs {
    fn exec(&self) -> Execution {
        if self.jobs == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn pooled<R: Send>(&self, op: impl FnOnce(Execution) -> R + Send) -> CliResult<R> {
        let exec = self.exec();
        Ok(par::with_jobs(self.jobs, move || op(exec))?)
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Landmarks { cell, out } => landmarks(&cell, &out),
        Command::Regions { cell, vu, g, out } => regions(&cell, vu, g, &out),
        Command::Heatmap {
            cell,
            vu,
            g,
            k,
            out,
        } => heatmap(&cell, vu, g, k, &out),
        Command::Classify {
            cell,
            vu,
            g,
            k,
            out,
        } => classify(&cell, vu, g, k, &out),
        Command::Iterate {
            cell,
            g,
            k,
            tol,
            max_steps,
            out,
        } => iterate(&cell, g, k, tol, max_steps, &out),
        Command::Treeregion { cell, g, out } => treeregion(&cell, g, &out),
        Command::Simulate {
            cell,
            dynamics,
            g,
            k,
            n_cells,
            protocol,
            v_on,
            t_on,
            v_off,
            run,
            stride,
            out,
        } => simulate(
            &cell,
            SimArgs {
                dynamics,
                g,
                k,
                n_cells,
                protocol,
                v_on,
                t_on,
                v_off,
                stride,
            },
            &run,
            &out,
        ),
        Command::Sweep {
            cell,
            mode,
            dynamics,
            g,
            k,
            n_cells,
            band_fraction,
            run,
            out,
        } => sweep(
            &cell,
            mode,
            dynamics,
            g,
            k,
            n_cells,
            band_fraction,
            &run,
            &out,
        ),
    }
}

fn landmarks(args: &CellArgs, out: &OutArgs) -> CliResult {
    let cell = args.load()?;
    let lm = *cell.landmarks();
    let mut csv = Csv::new("landmarks", &args.describe());
    if let Cell::Model(m) = &cell {
        let red = m.reduced.reduced();
        csv.comment(format!(
            "normalised v = (V - {}) / {}; g_leak = {}",
            red.v_rest(),
            red.scale(),
            m.reduced.g_leak()
        ));
        if let Some(report) = m.timescales() {
            csv.comment(format!("tau_membrane = {}", report.tau_membrane));
            for g in &report.gates {
                csv.comment(format!(
                    "gate {}: tau_rest = {} ratio = {} declared = {:?} suggested = {:?}",
                    g.gate, g.tau_at_rest, g.ratio, g.declared, g.suggested
                ));
            }
        }
    }
    csv.header("v_t,v_min,v_i,v_e,v_max,v_f");
    csv.row(&[&lm.v_t, &lm.v_min, &lm.v_i, &lm.v_e, &lm.v_max, &lm.v_f]);
    Ok(csv.emit(out.output.as_deref())?)
}

fn regions(args: &CellArgs, vu: f64, grid: Option<GridSpec>, out: &OutArgs) -> CliResult {
    let cell = args.load()?;
    let (g_min, g_max) = region::g_bounds(&cell, vu)?;
    let gs: Vec<f64> = match grid {
        Some(spec) => spec
            .values()
            .into_iter()
            .filter(|&g| g > g_min && g < g_max)
            .collect(),
        None => {
            let all = GridSpec::linear(g_min, g_max, 1002).values();
            all[1..all.len() - 1].to_vec()
        }
    };
    if gs.is_empty() {
        return Err(CliError::EmptyDomain(format!(
            "no g sample lies inside (g_min, g_max) = ({g_min}, {g_max})"
        )));
    }
    let rows = out.pooled(|exec| {
        par::map(exec, &gs, |&g| {
            region::k_max(&cell, vu, g).map(|km| (g, km, region::k_exc(&cell, g)))
        })
    })?;
    let mut params = args.describe();
    params.push(("v_u", vu.to_string()));
    params.push(("g_min", g_min.to_string()));
    params.push(("g_max", g_max.to_string()));
    params.push(("g_star", region::g_star(&cell, vu).to_string()));
    let mut csv = Csv::new("regions", &params);
    csv.header("g,k_max,k_exc,branch");
    for r in rows {
        let (g, km, ke) = r?;
        csv.row(&[&g, &km.k, &ke, &km.branch]);
    }
    Ok(csv.emit(out.output.as_deref())?)
}

fn heatmap(args: &CellArgs, vu: f64, g: GridSpec, k: GridSpec, out: &OutArgs) -> CliResult {
    let cell = args.load()?;
    let (gs, ks) = (g.values(), k.values());
    let nk = ks.len();
    let tol = args.tangency_tol;
    let rows = out.pooled(|exec| {
        par::map_range(exec, gs.len() * nk, |idx| {
            let c = Coupling::new(gs[idx / nk], ks[idx % nk], vu)?;
            Ok::<_, gapjunc::Error>((
                c,
                region::v_infinity(&cell, &c),
                region::classify_with_tol(&cell, &c, tol),
            ))
        })
    })?;
    let mut params = args.describe();
    params.push(("v_u", vu.to_string()));
    params.push(("g", g.to_string()));
    params.push(("k", k.to_string()));
    let mut csv = Csv::new("heatmap", &params);
    csv.header("g,k,v_inf,class");
    for r in rows {
        let (c, v, class) = r?;
        csv.row(&[&c.g, &c.k, &v, &class]);
    }
    Ok(csv.emit(out.output.as_deref())?)
}

fn classify(args: &CellArgs, vu: f64, g: f64, k: f64, out: &OutArgs) -> CliResult {
    let cell = args.load()?;
    let c = Coupling::new(g, k, vu)?;
    let class = region::classify_with_tol(&cell, &c, args.tangency_tol);
    let mut params = args.describe();
    params.push(("v_u", vu.to_string()));
    let mut csv = Csv::new("classify", &params);
    csv.header("g,k,v_u,v_inf,class,critical_v_u");
    csv.row(&[
        &g,
        &k,
        &vu,
        &region::v_infinity(&cell, &c),
        &class,
        &opt(region::critical_upstream_voltage(&cell, g, k)),
    ]);
    Ok(csv.emit(out.output.as_deref())?)
}

fn iterate(
    args: &CellArgs,
    g: f64,
    k: f64,
    tol: f64,
    max_steps: usize,
    out: &OutArgs,
) -> CliResult {
    let cell = args.load()?;
    if !(g > 0.0) || !(k >= 0.0) {
        return Err(CliError::Usage(format!(
            "need g > 0 and k >= 0 (got g = {g}, k = {k})"
        )));
    }
    let trace = tree::iterate_phi(&cell, g, k, tol, max_steps)?;
    let v_plus = tree::rest_excited_equilibria(&cell, g, k).map(|p| p.v_plus);
    let mut params = args.describe();
    params.extend([
        ("g", g.to_string()),
        ("k", k.to_string()),
        ("tol", tol.to_string()),
        ("max_steps", max_steps.to_string()),
    ]);
    let mut csv = Csv::new("iterate", &params);
    csv.comment(format!(
        "limit_tag={} limit={} steps={} v_plus={} persistent={}",
        trace.limit_tag,
        trace.limit,
        trace.steps,
        opt(v_plus),
        tree::persistent_propagation_with_tol(&cell, g, k, args.tangency_tol)
    ));
    csv.header("step,v");
    for (i, v) in trace.iterates.iter().enumerate() {
        csv.row(&[&i, v]);
    }
    Ok(csv.emit(out.output.as_deref())?)
}

fn treeregion(args: &CellArgs, grid: Option<GridSpec>, out: &OutArgs) -> CliResult {
    let cell = args.load()?;
    let g0 = tree::tree_g_min(&cell)?;
    let gs: Vec<f64> = match grid {
        Some(spec) => spec.values().into_iter().filter(|&g| g >= g0).collect(),
        None => GridSpec::linear(g0, 0.3_f64.max(2.0 * g0), 500).values(),
    };
    if gs.is_empty() {
        return Err(CliError::EmptyDomain(format!(
            "no g sample at or above the tree g_min = {g0}"
        )));
    }
    let tol = args.tangency_tol;
    let rows = out.pooled(|exec| {
        par::map(exec, &gs, |&g| {
            tree::k_prop_with_tol(&cell, g, tol, tree::K_PROP_TOL).map(|kp| (g, kp))
        })
    })?;
    let mut params = args.describe();
    params.push(("tree_g_min", g0.to_string()));
    params.push(("k_tol", tree::K_PROP_TOL.to_string()));
    let mut csv = Csv::new("treeregion", &params);
    csv.header("g,k_prop,branch");
    for r in rows {
        let (g, kp) = r?;
        csv.row(&[&g, &kp.k, &kp.branch]);
    }
    Ok(csv.emit(out.output.as_deref())?)
}

struct SimArgs {
    dynamics: DynamicsArg,
    g: f64,
    k: f64,
    n_cells: usize,
    protocol: ProtocolArg,
    v_on: Option<f64>,
    t_on: f64,
    v_off: f64,
    stride: usize,
}

fn observed_cell(n_cells: usize) -> usize {
    n_cells.saturating_sub(1).max(1)
}

fn simulate(args: &CellArgs, s: SimArgs, run: &RunArgs, out: &OutArgs) -> CliResult {
    let model = args.prepared_or_cubic()?;
    let lm = *model.landmarks();
    let (dt0, t0) = model.default_integration();
    let (dt, t_end) = (run.dt.unwrap_or(dt0), run.t_end.unwrap_or(t0));
    let integration = Integration::new(dt, t_end)?.with_stride(s.stride);
    let config = ChainConfig::new(s.n_cells, s.g, s.k)?;
    let observed = observed_cell(s.n_cells);
    let v_on = s.v_on.unwrap_or(lm.v_f);
    let trigger = run.trigger.unwrap_or(lm.v_e);
    let (protocol, name) = match s.protocol {
        ProtocolArg::Step => (ClampProtocol::step(v_on, s.t_on, s.v_off)?, "step"),
        ProtocolArg::Constant => (ClampProtocol::constant(v_on), "constant"),
        ProtocolArg::Condition1 => (ClampProtocol::constant(lm.v_f), "condition1"),
        ProtocolArg::Condition2 => (
            ClampProtocol::until(lm.v_f, observed, trigger, run.release.after())?,
            "condition2",
        ),
    };
    let (traj, tau) = match s.dynamics {
        DynamicsArg::Full => (
            sim::simulate_chain(&model.full, config, &protocol, integration)?,
            model.full.time_constant(),
        ),
        DynamicsArg::Reduced => (
            sim::simulate_chain(&model.reduced, config, &protocol, integration)?,
            model.reduced.time_constant(),
        ),
    };

    let mut params = args.describe();
    params.extend([
        ("dynamics", dyn_name(s.dynamics).to_string()),
        ("g", s.g.to_string()),
        ("k", s.k.to_string()),
        ("n_cells", s.n_cells.to_string()),
        ("protocol", name.to_string()),
        ("v_on", v_on.to_string()),
        ("t_on", s.t_on.to_string()),
        ("v_off", s.v_off.to_string()),
        ("trigger", trigger.to_string()),
        ("release", run.release.name().to_string()),
        ("dt", dt.to_string()),
        ("t_end", t_end.to_string()),
        ("stride", s.stride.to_string()),
        ("integrator", traj.metadata.integrator.clone()),
        ("config_hash", traj.metadata.config_hash.clone()),
    ]);
    let mut csv = Csv::new("simulate", &params);
    let release = match s.protocol {
        ProtocolArg::Step => Some(s.t_on),
        ProtocolArg::Condition2 => traj.metadata.release_time,
        _ => None,
    };
    let class = match release {
        Some(t) => match sim::classify_trajectory(&traj, observed, t, &lm, tau) {
            Ok(c) => c.to_string(),
            Err(_) => "NA".into(),
        },
        None => "NA".into(),
    };
    csv.comment(format!(
        "observed={observed} max={} terminal={} release_time={} triggered={} class={class}",
        traj.max_voltage[observed],
        traj.terminal(observed),
        opt(release),
        traj.metadata
            .release_triggered
            .map(|b| b.to_string())
            .unwrap_or_else(|| "NA".into()),
    ));
    let mut body = Vec::new();
    traj.write_csv(&mut body)?;
    csv.raw(&body);
    Ok(csv.emit(out.output.as_deref())?)
}

fn dyn_name(d: DynamicsArg) -> &'static str {
    match d {
        DynamicsArg::Full => "full",
        DynamicsArg::Reduced => "reduced",
    }
}

#[allow(clippy::too_many_arguments)]
fn sweep(
    args: &CellArgs,
    mode: ModeArg,
    dynamics: DynamicsArg,
    g: Option<GridSpec>,
    k: Option<GridSpec>,
    n_cells: usize,
    band_fraction: f64,
    run: &RunArgs,
    out: &OutArgs,
) -> CliResult {
    let model = args.prepared_or_cubic()?;
    let cubic = matches!(model.model, Model::Cubic(_));
    let g = g.unwrap_or(if cubic {
        GridSpec::linear(0.005, 0.3, 40)
    } else {
        GridSpec::log(0.01, 30.0, 40)
    });
    let k = k.unwrap_or(GridSpec::linear(0.0, if cubic { 6.0 } else { 20.0 }, 40));
    let network = match mode {
        ModeArg::Single => Network::Single,
        ModeArg::Tree => {
            if n_cells < 2 {
                return Err(CliError::Usage("tree mode needs --n-cells >= 2".into()));
            }
            Network::Tree { n_cells }
        }
    };
    let dynamics_core = match dynamics {
        DynamicsArg::Full => Dynamics::Full,
        DynamicsArg::Reduced => Dynamics::Reduced,
    };
    let mut config = SweepConfig::new(&model, network, dynamics_core);
    if let Some(dt) = run.dt {
        config.dt = dt;
    }
    if let Some(t) = run.t_end {
        config.t_end = t;
    }
    config.trigger = run.trigger;
    config.after_release = run.release.after();
    config.band_fraction = band_fraction;
    let (gs, ks) = (g.values(), k.values());
    if gs.is_empty() || ks.is_empty() {
        return Err(CliError::EmptyDomain("empty sweep grid".into()));
    }
    let result = out.pooled(|exec| {
        config.exec = exec;
        ionic::condition_sweep(&model, &gs, &ks, &config)
    })??;

    let mut params = args.describe();
    params.extend([
        (
            "mode",
            match mode {
                ModeArg::Single => "single".to_string(),
                ModeArg::Tree => format!("tree n_cells={n_cells}"),
            },
        ),
        ("dynamics", dyn_name(dynamics).to_string()),
        ("g", g.to_string()),
        ("k", k.to_string()),
        ("dt", config.dt.to_string()),
        ("t_end", config.t_end.to_string()),
        ("trigger", result.trigger.to_string()),
        ("release", run.release.name().to_string()),
        ("band_fraction", band_fraction.to_string()),
        ("g_leak", result.g_leak.to_string()),
    ]);
    let mut csv = Csv::new("sweep", &params);
    let mut body = Vec::new();
    result.write_csv(&mut body)?;
    csv.raw(&body);
    Ok(csv.emit(out.output.as_deref())?)
}
