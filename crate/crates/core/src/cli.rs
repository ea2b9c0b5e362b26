use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use ndarray::{Array2, Array3, Axis};

use ltlp::analysis::cross_validate;
use ltlp::embedding::{EmbedConfig, ReferenceKind, ReferenceSignal};
use ltlp::experiment::{cluster_ari, distance_matrix, linear_embeddings};
use ltlp::finance::{backtest, pnl_series, ppt, sharpe, BacktestConfig, ReturnKind, WindowConfig};
use ltlp::flow::{flow_minimize, normalize_density, FlowConfig, GridField};
use ltlp::interp::mode_sweep;
use ltlp::io::{self, EmbeddingMeta, Manifest};
use ltlp::measures::{DistanceMethod, TLpSignal};
use ltlp::solvers::{SinkhornConfig, Solver};
use ltlp::synth::{gen_dataset_1d, gen_dataset_2d, Synth1dConfig, Synth2dConfig};
use ltlp::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "ltlp", version, about = "Transportation Lp distances and linear transport embeddings")]
pub struct Cli {
    /// Worker threads (defaults to the number of logical cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the 1D hump / chirp dataset.
    Synth1d(Synth1dArgs),
    /// Generate the 2D two-class dataset.
    Synth2d(Synth2dArgs),
    /// Linear embeddings of a dataset against its mean reference.
    Embed(EmbedArgs),
    /// Full pairwise distance matrix of a dataset.
    Distmat(DistmatArgs),
    /// Repeated K-means on embeddings, scored by ARI.
    Cluster(ClusterArgs),
    /// Repeated k-fold nearest-neighbour classification, scored by macro-F1.
    Classify(ClassifyArgs),
    /// Signals along a principal mode of the embeddings.
    Interp(InterpArgs),
    /// Flow minimization between two grid densities.
    Flowmin(FlowArgs),
    /// Nearest-neighbour return forecasting backtest.
    Finance(FinanceArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverKind {
    Exact,
    Sinkhorn,
    Auto,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Exponent of the ground cost.
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = SolverKind::Exact)]
    pub solver: SolverKind,
    /// Entropic regularization for Sinkhorn.
    #[arg(long, default_value_t = 1e-2)]
    pub eps: f64,
    /// Use log-domain Sinkhorn iterations.
    #[arg(long)]
    pub log_domain: bool,
    /// Multiplier applied to channel values before lifting.
    #[arg(long, default_value_t = 1.0)]
    pub channel_scale: f64,
}

impl SolverArgs {
    fn config(&self) -> EmbedConfig {
        let sk = SinkhornConfig {
            log_domain: self.log_domain,
            ..SinkhornConfig::with_epsilon(self.eps)
        };
        let solver = match self.solver {
            SolverKind::Exact => Solver::Exact,
            SolverKind::Sinkhorn => Solver::Sinkhorn(sk),
            SolverKind::Auto => Solver::Auto {
                threshold: ltlp::solvers::AUTO_EXACT_THRESHOLD,
                sinkhorn: sk,
            },
        };
        EmbedConfig {
            p: self.p,
            solver,
            channel_scale: self.channel_scale,
        }
    }
}

#[derive(Debug, Args)]
pub struct Synth1dArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.2)]
    pub l: f64,
    #[arg(long, default_value_t = 0.1)]
    pub r: f64,
    #[arg(long, default_value_t = 0.3)]
    pub b: f64,
    #[arg(long, default_value_t = 0.02)]
    pub gamma1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub gamma2: f64,
    /// Probability that a chirp uses gamma1.
    #[arg(long, default_value_t = 0.5)]
    pub r1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 150)]
    pub grid: usize,
}

#[derive(Debug, Args)]
pub struct Synth2dArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 32)]
    pub grid: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LinearMethod {
    Lwp,
    Ltlp,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Dataset directory holding signals.csv.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: LinearMethod,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Embedding rows; reference.csv and embedding_meta.json are written beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MatrixMethod {
    Lp,
    Wp,
    Tlp,
    Lwp,
    Ltlp,
    Cor,
}

#[derive(Debug, Args)]
pub struct DistmatArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum)]
    pub method: MatrixMethod,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Ground-truth labels (`id,label`).
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    /// Scores as `repeat,score`; assignments.csv of repeat 0 goes beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 100)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Neighbours voting in the classifier.
    #[arg(long, default_value_t = 1)]
    pub neighbors: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InterpArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Directory holding reference.csv and embedding_meta.json.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub component: usize,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-2,-1,0,1,2")]
    pub stddevs: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FlowArgs {
    #[arg(long)]
    pub mu: PathBuf,
    #[arg(long)]
    pub nu: PathBuf,
    #[arg(long)]
    pub f: Option<PathBuf>,
    #[arg(long)]
    pub g: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 500)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub energy_tol: f64,
    /// Map and energy trace files, `map.csv,energy.csv`.
    #[arg(long, value_delimiter = ',', required = true)]
    pub out: Vec<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WindowMethod {
    Cor,
    Wp,
    Lwp,
    Ltlp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReturnArg {
    Rr,
    Mr,
}

#[derive(Debug, Args)]
pub struct FinanceArgs {
    #[arg(long)]
    pub prices: PathBuf,
    #[arg(long, value_enum)]
    pub method: WindowMethod,
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,10")]
    pub horizons: Vec<usize>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "rr,mr")]
    pub returns: Vec<ReturnArg>,
    #[arg(long, default_value_t = 20)]
    pub window: usize,
    /// Leading windows averaged into the embedding reference.
    #[arg(long, default_value_t = 60)]
    pub reference_windows: usize,
    /// Market index column, removed from the universe and used for MR.
    #[arg(long, default_value = "SPY")]
    pub market: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

fn method_of(m: MatrixMethod) -> DistanceMethod {
    match m {
        MatrixMethod::Lp => DistanceMethod::Lp,
        MatrixMethod::Wp => DistanceMethod::Wp,
        MatrixMethod::Tlp => DistanceMethod::Tlp,
        MatrixMethod::Lwp => DistanceMethod::Lwp,
        MatrixMethod::Ltlp => DistanceMethod::Ltlp,
        MatrixMethod::Cor => DistanceMethod::Cor,
    }
}

fn parent(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn solver_params(m: &mut Manifest, s: &SolverArgs) {
    m.param("p", s.p)
        .param("solver", s.config().solver)
        .param("channel_scale", s.channel_scale);
}

/// Run a parsed command. `argv` excludes the program name.
pub fn run(cli: Cli, argv: Vec<String>) -> Result<()> {
    let threads = cli.threads.unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let name = command_name(&cli.command);
    let mut manifest = Manifest::new(name, argv, threads);
    pool.install(|| dispatch(cli.command, &mut manifest))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Synth1d(_) => "synth1d",
        Command::Synth2d(_) => "synth2d",
        Command::Embed(_) => "embed",
        Command::Distmat(_) => "distmat",
        Command::Cluster(_) => "cluster",
        Command::Classify(_) => "classify",
        Command::Interp(_) => "interp",
        Command::Flowmin(_) => "flowmin",
        Command::Finance(_) => "finance",
        Command::Replay(_) => "replay",
    }
}

fn dispatch(command: Command, m: &mut Manifest) -> Result<()> {
    match command {
        Command::Synth1d(a) => synth1d(a, m),
        Command::Synth2d(a) => synth2d(a, m),
        Command::Embed(a) => embed(a, m),
        Command::Distmat(a) => distmat(a, m),
        Command::Cluster(a) => cluster(a, m),
        Command::Classify(a) => classify(a, m),
        Command::Interp(a) => interp(a, m),
        Command::Flowmin(a) => flowmin(a, m),
        Command::Finance(a) => finance(a, m),
        Command::Replay(a) => replay(a),
    }
}

fn synth1d(a: Synth1dArgs, m: &mut Manifest) -> Result<()> {
    let cfg = Synth1dConfig {
        l: a.l,
        r: a.r,
        b: a.b,
        gamma1: a.gamma1,
        gamma2: a.gamma2,
        r1: a.r1,
        noise: a.noise,
        grid: a.grid,
        ..Synth1dConfig::default()
    };
    m.param("seed", a.seed).param("config", cfg);
    let data = m.time("generate", || gen_dataset_1d(&cfg, a.seed))?;
    ensure_dir(&a.out)?;
    io::write_signals(&a.out.join("signals.csv"), &data.signals)?;
    io::write_labels(&a.out.join("labels.csv"), "label", &data.labels)?;
    io::write_json(&a.out.join("manifest.json"), m)
}

fn synth2d(a: Synth2dArgs, m: &mut Manifest) -> Result<()> {
    let cfg = Synth2dConfig {
        nx: a.grid,
        ny: a.grid,
        ..Synth2dConfig::default()
    };
    m.param("seed", a.seed).param("config", cfg);
    let data = m.time("generate", || gen_dataset_2d(&cfg, a.seed))?;
    ensure_dir(&a.out)?;
    io::write_signals(&a.out.join("signals.csv"), &data.signals)?;
    io::write_labels(&a.out.join("labels.csv"), "label", &data.labels)?;
    io::write_json(&a.out.join("manifest.json"), m)
}

fn embed(a: EmbedArgs, m: &mut Manifest) -> Result<()> {
    let cfg = a.solver.config();
    let method = match a.method {
        LinearMethod::Lwp => DistanceMethod::Lwp,
        LinearMethod::Ltlp => DistanceMethod::Ltlp,
    };
    m.param("data", &a.data).param("method", method);
    solver_params(m, &a.solver);
    let signals = io::read_signals(&a.data.join("signals.csv"))?;
    let e = m.time("embed", || linear_embeddings(&signals, method, &cfg))?;
    info!("embedded {} signals with {} transport solves", signals.len(), e.solver_calls);
    m.solver_calls = e.solver_calls;
    let dir = parent(&a.out);
    ensure_dir(&dir)?;
    io::write_rows(&a.out, &io::embeddings_to_rows(&e.embeddings))?;
    io::write_signals(&dir.join("reference.csv"), std::slice::from_ref(e.reference.signal()))?;
    let first = e.embeddings.first().ok_or(Error::EmptySupport)?;
    let meta = EmbeddingMeta {
        method,
        atoms: first.spatial.nrows(),
        dim: first.spatial.ncols(),
        channels: first.channel.ncols(),
        p: cfg.p,
        channel_scale: cfg.channel_scale,
    };
    io::write_json(&dir.join("embedding_meta.json"), &meta)?;
    io::write_json(&dir.join("manifest.json"), m)
}

fn distmat(a: DistmatArgs, m: &mut Manifest) -> Result<()> {
    let cfg = a.solver.config();
    let method = method_of(a.method);
    m.param("data", &a.data).param("method", method);
    solver_params(m, &a.solver);
    let signals = io::read_signals(&a.data.join("signals.csv"))?;
    let every = (signals.len() * signals.len().saturating_sub(1) / 2 / 10).max(1);
    let progress = move |k: usize, total: usize| {
        if k % every == 0 || k == total {
            info!("solved {k}/{total} transport problems");
        }
    };
    let (d, calls) = m.time("solve", || distance_matrix(&signals, method, &cfg, &progress))?;
    m.solver_calls = calls;
    ensure_dir(&parent(&a.out))?;
    io::write_distance_matrix(&a.out, &d)?;
    io::write_json(&parent(&a.out).join("manifest.json"), m)
}

fn cluster(a: ClusterArgs, m: &mut Manifest) -> Result<()> {
    m.param("embeddings", &a.embeddings)
        .param("labels", &a.labels)
        .param("k", a.k)
        .param("seed", a.seed)
        .param("repeats", a.repeats)
        .param("kmeans_restarts", ltlp::experiment::KMEANS_RESTARTS);
    let x = io::read_rows(&a.embeddings)?;
    let truth = io::read_labels(&a.labels)?;
    let runs = m.time("evaluate", || cluster_ari(x.view(), &truth, a.k, a.seed, a.repeats))?;
    let scores: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let dir = parent(&a.out);
    ensure_dir(&dir)?;
    io::write_scores(&a.out, "repeat", "score", &scores)?;
    if let Some(first) = runs.first() {
        io::write_labels(&dir.join("assignments.csv"), "cluster", &first.0)?;
    }
    io::write_json(&dir.join("manifest.json"), m)
}

fn classify(a: ClassifyArgs, m: &mut Manifest) -> Result<()> {
    m.param("embeddings", &a.embeddings)
        .param("labels", &a.labels)
        .param("folds", a.folds)
        .param("repeats", a.repeats)
        .param("seed", a.seed)
        .param("neighbors", a.neighbors);
    let x = io::read_rows(&a.embeddings)?;
    let y = io::read_labels(&a.labels)?;
    let report = m.time("evaluate", || cross_validate(x.view(), &y, a.folds, a.repeats, a.seed, a.neighbors))?;
    m.param("stratified", report.stratified);
    ensure_dir(&parent(&a.out))?;
    io::write_scores(&a.out, "repeat", "score", &report.scores)?;
    io::write_json(&parent(&a.out).join("manifest.json"), m)
}

fn interp(a: InterpArgs, m: &mut Manifest) -> Result<()> {
    m.param("embeddings", &a.embeddings)
        .param("ref", &a.reference)
        .param("component", a.component)
        .param("stddevs", &a.stddevs);
    let meta: EmbeddingMeta = io::read_json(&a.reference.join("embedding_meta.json"))?;
    let mut refs = io::read_signals(&a.reference.join("reference.csv"))?;
    let ref_signal: TLpSignal = refs.pop().ok_or(Error::EmptySupport)?;
    let kind = if meta.method == DistanceMethod::Ltlp {
        ReferenceKind::Tlp
    } else {
        ReferenceKind::Wp
    };
    let reference = ReferenceSignal::new(ref_signal, kind)?;
    let x = io::read_rows(&a.embeddings)?;
    let weights = reference.measure().weights().to_owned();
    let embs = io::rows_to_embeddings(&x, &meta, &weights)?;
    let cfg = EmbedConfig {
        p: meta.p,
        channel_scale: meta.channel_scale,
        ..EmbedConfig::default()
    };
    let sweep = m.time("interpolate", || mode_sweep(&embs, a.component, &a.stddevs, &reference, &cfg))?;
    ensure_dir(&a.out)?;
    io::write_signals(&a.out.join("sweep.csv"), &sweep)?;
    io::write_json(&a.out.join("manifest.json"), m)
}

fn channel_grid(path: &Option<PathBuf>, shape: (usize, usize)) -> Result<Array3<f64>> {
    match path {
        Some(p) => {
            let g = io::read_grid(p)?;
            if g.dim() != shape {
                return Err(Error::GridMismatch);
            }
            Ok(g.insert_axis(Axis(2)))
        }
        None => Ok(Array3::zeros((shape.0, shape.1, 0))),
    }
}

fn flowmin(a: FlowArgs, m: &mut Manifest) -> Result<()> {
    let cfg = FlowConfig {
        tau: a.tau,
        max_steps: a.max_steps,
        energy_tol: a.energy_tol,
    };
    m.param("mu", &a.mu)
        .param("nu", &a.nu)
        .param("f", &a.f)
        .param("g", &a.g)
        .param("tau", a.tau)
        .param("max_steps", a.max_steps)
        .param("energy_tol", a.energy_tol);
    if a.out.len() != 2 {
        return Err(Error::InvalidInput("--out takes two paths, map.csv,energy.csv".into()));
    }
    let mu = io::read_grid(&a.mu)?;
    let nu = io::read_grid(&a.nu)?;
    let (nx, ny) = mu.dim();
    if nx < 3 || ny < 3 {
        return Err(Error::InvalidInput("density grids need at least 3 x 3 nodes".into()));
    }
    let (hx, hy) = (1.0 / (nx - 1) as f64, 1.0 / (ny - 1) as f64);
    let f = channel_grid(&a.f, (nx, ny))?;
    let g = channel_grid(&a.g, (nx, ny))?;
    if f.len_of(Axis(2)) != g.len_of(Axis(2)) {
        return Err(Error::InvalidInput("--f and --g must be given together".into()));
    }
    let grid = GridField::new(hx, hy, normalize_density(&mu, hx, hy)?, normalize_density(&nu, hx, hy)?, f, g)?;
    let r = m.time("solve", || flow_minimize(&grid, &cfg))?;
    m.param("steps", r.steps)
        .param("converged", r.converged)
        .param("final_tau", r.tau)
        .param("min_jacobian", r.min_jacobian);
    if r.min_jacobian <= 0.0 {
        log::warn!("the map folded over during the flow (Jacobian {:.3e})", r.min_jacobian);
    }
    let (map_path, energy_path) = (&a.out[0], &a.out[1]);
    ensure_dir(&parent(map_path))?;
    ensure_dir(&parent(energy_path))?;
    let mut rows = Array2::zeros((nx * ny, 4));
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            rows[[k, 0]] = i as f64;
            rows[[k, 1]] = j as f64;
            rows[[k, 2]] = r.map[[i, j, 0]];
            rows[[k, 3]] = r.map[[i, j, 1]];
        }
    }
    let mut w = csv::Writer::from_path(map_path).map_err(Error::from)?;
    w.write_record(["ix", "iy", "tx", "ty"]).map_err(Error::from)?;
    for row in rows.rows() {
        w.write_record([
            (row[0] as usize).to_string(),
            (row[1] as usize).to_string(),
            row[2].to_string(),
            row[3].to_string(),
        ])?;
    }
    w.flush()?;
    io::write_scores(energy_path, "step", "energy", &r.energies)?;
    io::write_json(&parent(map_path).join("manifest.json"), m)
}

fn finance(a: FinanceArgs, m: &mut Manifest) -> Result<()> {
    let method = match a.method {
        WindowMethod::Cor => DistanceMethod::Cor,
        WindowMethod::Wp => DistanceMethod::Wp,
        WindowMethod::Lwp => DistanceMethod::Lwp,
        WindowMethod::Ltlp => DistanceMethod::Ltlp,
    };
    let kinds: Vec<ReturnKind> = a
        .returns
        .iter()
        .map(|r| match r {
            ReturnArg::Rr => ReturnKind::Rr,
            ReturnArg::Mr => ReturnKind::Mr,
        })
        .collect();
    let cfg = BacktestConfig {
        window: a.window,
        k: a.k,
        windows: WindowConfig {
            embed: a.solver.config(),
            reference_windows: a.reference_windows,
        },
    };
    m.param("prices", &a.prices)
        .param("method", method)
        .param("horizons", &a.horizons)
        .param("returns", &kinds)
        .param("market", &a.market)
        .param("config", cfg)
        .param("wp_preprocessing", "standardize rows, average instruments, shift by |min| + 0.01, normalize");
    let all = io::read_prices(&a.prices)?;
    let (universe, market) = match all.split_ticker(&a.market) {
        Some((u, mk)) => (u, Some(mk)),
        None => (all.clone(), None),
    };
    if market.is_none() && kinds.contains(&ReturnKind::Mr) {
        return Err(Error::InvalidInput(format!("market column {} not found", a.market)));
    }
    let bt = m.time("solve", || {
        backtest(&universe, market.as_ref().map(|v| v.view()), method, &a.horizons, &kinds, &cfg)
    })?;
    m.solver_calls = bt.solver_calls;
    ensure_dir(&a.out)?;
    let n = universe.tickers().len();
    let mut pnl_w = csv::Writer::from_path(a.out.join("pnl.csv"))?;
    pnl_w.write_record(["date", "horizon", "returnKind", "quintile", "pnl"])?;
    let mut stats_w = csv::Writer::from_path(a.out.join("stats.csv"))?;
    stats_w.write_record(["method", "horizon", "returnKind", "quintile", "SR", "PPT", "N"])?;
    m.time("evaluate", || -> Result<()> {
        for s in &bt.series {
            for q in 1..=5 {
                let pnl = pnl_series(s.forecasts.view(), s.realized.view(), q)?;
                for (&w, v) in s.windows.iter().zip(pnl.iter()) {
                    let date = &universe.dates()[w + cfg.window];
                    pnl_w.write_record([
                        date.clone(),
                        s.horizon.to_string(),
                        s.kind.as_str().to_string(),
                        q.to_string(),
                        v.to_string(),
                    ])?;
                }
                let sr = sharpe(&pnl).map(|v| v.to_string()).unwrap_or_else(|_| "NaN".into());
                let traded = ltlp::finance::quintile_count(q, n);
                stats_w.write_record([
                    method.as_str().to_string(),
                    s.horizon.to_string(),
                    s.kind.as_str().to_string(),
                    q.to_string(),
                    sr,
                    ppt(&pnl, traded).to_string(),
                    pnl.len().to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    pnl_w.flush()?;
    stats_w.flush()?;
    io::write_json(&a.out.join("manifest.json"), m)
}

fn replay(a: ReplayArgs) -> Result<()> {
    let recorded: Manifest = io::read_json(&a.manifest)?;
    let mut argv = vec!["ltlp".to_string()];
    argv.extend(recorded.argv.iter().cloned());
    let cli = Cli::try_parse_from(&argv).map_err(|e| Error::InvalidInput(e.to_string()))?;
    if matches!(cli.command, Command::Replay(_)) {
        return Err(Error::InvalidInput("a replay manifest cannot replay itself".into()));
    }
    run(cli, recorded.argv)
}
