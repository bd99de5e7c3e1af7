//! Command-line front end. `run` takes the full argument vector and returns
//! the process exit code: 0 on success, 1 on input errors (with usage), 2 on
//! numerical failures (with the error variant name on stderr).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use serde_json::json;

use dlimit_core::bvp::{classify_ss, mems_folds, mems_solutions};
use dlimit_core::dispersion::{count_bifurcations_4comp, count_bifurcations_limit, ScanOptions, SktParams};
use dlimit_core::fastslow::{classify_olsen, classify_transcritical, tc_flip_interval, StateBox, TcConfig, OLSEN_SEED_STATE, TC_EPS_FLOOR};
use dlimit_core::pdmp::{classify_bdd, logistic_stationary, pdl_label, threshold_g, DEFAULT_CELLS};
use dlimit_core::shear::{compute_c0, lyapunov_quadrature, sigma_zero};
use dlimit_core::stochastic::{classify_fhn, transition_probability_transcritical};
use dlimit_core::sweep::{
    extract_boundary, fit_boundary, problem_evaluator, recipes, render, sweep, ClassificationDiagram, Effort, Fit, FitModel,
    GridSpec, Recipe, PROBLEMS,
};

mod config;
pub use config::RunConfig;

pub const SEED_ENV: &str = "DLIMIT_SEED";
pub const THREADS_ENV: &str = "DLIMIT_THREADS";
const DEFAULT_OUT: &str = "dlimit-out";

#[derive(Parser, Debug)]
#[command(name = "dlimit", version, about = "Regime diagrams for two-parameter singular limits")]
struct Cli {
    /// Read run settings from a `run.cfg` file; flags given here override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Base seed (falls back to DLIMIT_SEED, then 0).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (falls back to DLIMIT_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Reduced path counts and grids.
    #[arg(long, global = true)]
    quick: bool,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Classify a grid of (x, y) points with one problem evaluator.
    Sweep {
        #[arg(long)]
        problem: Option<String>,
        /// `lo:hi:NXxNY` or `xlo:xhi:ylo:yhi:NXxNY`, optional `:lin` suffix.
        #[arg(long)]
        grid: Option<String>,
        /// `powerlaw` or `explaw`.
        #[arg(long)]
        fit: Option<String>,
        /// Lower and upper region labels of the fitted boundary, `A,B`.
        #[arg(long)]
        boundary: Option<String>,
    },
    /// Run the figure recipes (`all` or a list of ids).
    Figures { ids: Vec<String> },
    /// Deterministic transcritical passage: label at (eps, delta) or the flip interval at eps.
    Tc {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Bifurcation-point count of the fast-reaction SKT system.
    Skt {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        r1_min: Option<f64>,
        #[arg(long)]
        r1_max: Option<f64>,
        #[arg(long)]
        n_modes: Option<usize>,
        #[arg(long)]
        n_scan: Option<usize>,
    },
    /// SKT count over an (eps, delta) grid.
    SktPlane {
        #[arg(long)]
        grid: Option<String>,
    },
    /// Lyapunov exponents of the shear oscillator.
    Shear {
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
    },
    /// Linear switching system: threshold G(eps) and stability label.
    Pdl {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Logistic switching system: stationary density and boundedness flag.
    Bdd {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Regularized membrane: folds, solutions at lambda, regime at (eps, delta).
    Mems {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Noisy FitzHugh-Nagumo spiking pattern.
    Fhn {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Noisy transcritical transition probability.
    Transition {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        /// Avoided crossing with this offset.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Olsen oscillation pattern (conjectural classification).
    Olsen {
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        t_transient: Option<f64>,
        #[arg(long)]
        window: Option<f64>,
    },
    /// List problem ids and figure recipes.
    Problems,
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numeric(dlimit_core::Error),
}

impl From<dlimit_core::Error> for CliError {
    fn from(e: dlimit_core::Error) -> Self {
        if e.is_input_error() {
            CliError::Input(e.to_string())
        } else {
            CliError::Numeric(e)
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(dlimit_core::Error::Io(e.to_string()))
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn input<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Input(msg.into()))
}

fn need<T>(v: Option<T>, name: &str) -> CliResult<T> {
    match v {
        Some(x) => Ok(x),
        None => input(format!("missing --{name}")),
    }
}

pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}\n\n{}", Cli::command().render_usage());
            1
        }
        Err(CliError::Numeric(e)) => {
            eprintln!("error: {}: {e}", e.name());
            2
        }
    }
}

fn from_cli(cli: &Cli) -> RunConfig {
    let mut c = RunConfig {
        out: cli.out.as_ref().map(|p| p.display().to_string()),
        seed: cli.seed,
        quick: cli.quick.then_some(true),
        ..Default::default()
    };
    let Some(cmd) = &cli.command else { return c };
    match cmd {
        Cmd::Sweep { problem, grid, fit, boundary } => {
            c.command = Some("sweep".into());
            c.problem = problem.clone();
            c.grid = grid.clone();
            c.fit = fit.clone();
            c.boundary = boundary.clone();
        }
        Cmd::Figures { ids } => {
            c.command = Some("figures".into());
            c.figures = (!ids.is_empty()).then(|| ids.clone());
        }
        Cmd::Tc { eps, delta } => {
            c.command = Some("tc".into());
            (c.eps, c.delta) = (*eps, *delta);
        }
        Cmd::Skt { eps, delta, r1_min, r1_max, n_modes, n_scan } => {
            c.command = Some("skt".into());
            (c.eps, c.delta, c.r1_min, c.r1_max, c.n_modes, c.n_scan) = (*eps, *delta, *r1_min, *r1_max, *n_modes, *n_scan);
        }
        Cmd::SktPlane { grid } => {
            c.command = Some("skt-plane".into());
            c.grid = grid.clone();
        }
        Cmd::Shear { alpha, b, sigma } => {
            c.command = Some("shear".into());
            (c.alpha, c.b, c.sigma) = (*alpha, *b, *sigma);
        }
        Cmd::Pdl { eps, delta } => {
            c.command = Some("pdl".into());
            (c.eps, c.delta) = (*eps, *delta);
        }
        Cmd::Bdd { eps, delta } => {
            c.command = Some("bdd".into());
            (c.eps, c.delta) = (*eps, *delta);
        }
        Cmd::Mems { eps, lambda, delta } => {
            c.command = Some("mems".into());
            (c.eps, c.lambda, c.delta) = (*eps, *lambda, *delta);
        }
        Cmd::Fhn { eps, delta, sigma, t_end } => {
            c.command = Some("fhn".into());
            (c.eps, c.delta, c.sigma, c.t_end) = (*eps, *delta, *sigma, *t_end);
        }
        Cmd::Transition { eps, sigma, delta, paths } => {
            c.command = Some("transition".into());
            (c.eps, c.sigma, c.delta, c.paths) = (*eps, *sigma, *delta, *paths);
        }
        Cmd::Olsen { eps, delta, t_transient, window } => {
            c.command = Some("olsen".into());
            (c.eps, c.delta, c.t_transient, c.window) = (*eps, *delta, *t_transient, *window);
        }
        Cmd::Problems => c.command = Some("problems".into()),
    }
    c
}

fn env_parse<T: std::str::FromStr>(name: &str) -> CliResult<Option<T>> {
    match std::env::var(name) {
        Ok(v) => match v.trim().parse() {
            Ok(x) => Ok(Some(x)),
            Err(_) => input(format!("{name}={v} is not a valid value")),
        },
        Err(_) => Ok(None),
    }
}

struct Ctx {
    cfg: RunConfig,
    threads: usize,
}

impl Ctx {
    fn effort(&self) -> Effort {
        if self.cfg.quick.unwrap_or(false) {
            Effort::Quick
        } else {
            Effort::Full
        }
    }

    fn seed(&self) -> u64 {
        self.cfg.seed.unwrap_or(0)
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.cfg.out.clone().unwrap_or_else(|| DEFAULT_OUT.into()))
    }

    /// Writes `run.cfg` into the output directory.
    fn save_config(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("run.cfg"), self.cfg.to_toml()?)?;
        Ok(())
    }

    /// Prints `value` and, when an output directory was requested, stores it
    /// next to the configuration.
    fn report(&self, value: serde_json::Value) -> CliResult<()> {
        let text = serde_json::to_string_pretty(&value).map_err(|e| dlimit_core::Error::Io(e.to_string()))?;
        println!("{text}");
        if self.cfg.out.is_some() {
            let dir = self.out_dir();
            self.save_config(&dir)?;
            fs::write(dir.join("result.json"), text + "\n")?;
        }
        Ok(())
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let mut cfg = from_cli(&cli);
    if let Some(path) = &cli.config {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return input(format!("cannot read {}: {e}", path.display())),
        };
        let file = RunConfig::from_toml(&text).map_err(CliError::Input)?;
        cfg = cfg.or(file);
    }
    if cfg.seed.is_none() {
        cfg.seed = Some(env_parse(SEED_ENV)?.unwrap_or(0));
    }
    let threads = match cli.threads {
        Some(t) => t,
        None => env_parse(THREADS_ENV)?.unwrap_or(0),
    };
    let Some(command) = cfg.command.clone() else {
        return input("no subcommand given");
    };
    let ctx = Ctx { cfg, threads };
    match command.as_str() {
        "sweep" => cmd_sweep(&ctx),
        "figures" => cmd_figures(&ctx),
        "tc" => cmd_tc(&ctx),
        "skt" => cmd_skt(&ctx),
        "skt-plane" => cmd_skt_plane(&ctx),
        "shear" => cmd_shear(&ctx),
        "pdl" => cmd_pdl(&ctx),
        "bdd" => cmd_bdd(&ctx),
        "mems" => cmd_mems(&ctx),
        "fhn" => cmd_fhn(&ctx),
        "transition" => cmd_transition(&ctx),
        "olsen" => cmd_olsen(&ctx),
        "problems" => cmd_problems(),
        other => input(format!("unknown command '{other}'")),
    }
}

fn recipe_for_problem(problem: &str) -> Option<Recipe> {
    recipes().into_iter().find(|r| r.problem == problem)
}

fn parse_boundary(s: &str) -> CliResult<(String, String)> {
    match s.split_once(',') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.trim().into(), b.trim().into())),
        _ => input(format!("--boundary expects A,B, got '{s}'")),
    }
}

/// Boundary extraction and fit; a missing boundary is a note, not a failure.
fn try_fit(d: &mut ClassificationDiagram, labels: &(String, String), model: FitModel) -> serde_json::Value {
    let res = extract_boundary(d, &labels.0, &labels.1).and_then(|pts| fit_boundary(&pts, model));
    match res {
        Ok(fit) => {
            let v = fit_json(&fit);
            d.fits.push(fit);
            v
        }
        Err(e) => json!({ "error": e.name(), "message": e.to_string() }),
    }
}

fn fit_json(fit: &Fit) -> serde_json::Value {
    match fit {
        Fit::PowerLaw(f) => json!({ "model": "powerlaw", "kappa": f.kappa, "p": f.p, "p_se": f.p_se, "support": f.support, "low_support": f.low_support }),
        Fit::ExpLaw(f) => json!({ "model": "explaw", "c": f.c, "h": f.h, "h_se": f.h_se, "support": f.support, "low_support": f.low_support }),
    }
}

fn cmd_sweep(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let problem = need(c.problem.clone(), "problem")?;
    if !PROBLEMS.contains(&problem.as_str()) {
        return input(format!("unknown problem '{problem}' (known: {})", PROBLEMS.join(", ")));
    }
    let recipe = recipe_for_problem(&problem);
    let grid: GridSpec = match (&c.grid, &recipe) {
        (Some(g), _) => g.parse()?,
        (None, Some(r)) => if ctx.effort() == Effort::Quick { r.quick_grid.clone() } else { r.grid.clone() },
        (None, None) => return input("missing --grid"),
    };
    let model: Option<FitModel> = match &c.fit {
        Some(f) => Some(f.parse()?),
        None => None,
    };
    let labels = match (&c.boundary, &recipe) {
        (Some(b), _) => Some(parse_boundary(b)?),
        (None, Some(r)) => r.boundary.clone(),
        (None, None) => None,
    };
    if model.is_some() && labels.is_none() {
        return input("--fit needs --boundary A,B");
    }
    let ev = problem_evaluator(&problem, ctx.effort())?;
    let mut d = sweep(ev.as_ref(), &grid, ctx.seed(), ctx.threads)?;
    let fit = match (model, &labels) {
        (Some(m), Some(l)) => Some(try_fit(&mut d, l, m)),
        _ => None,
    };
    let dir = ctx.out_dir();
    let mut saved = ctx.cfg.clone();
    saved.grid = Some(grid.to_string());
    Ctx { cfg: saved, threads: ctx.threads }.save_config(&dir)?;
    let files = render(&d, &dir)?;
    let counts = label_counts(&d);
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "problem": problem,
            "grid": grid.to_string(),
            "labels": counts,
            "fit": fit,
            "csv": files.csv,
            "svg": files.svg,
            "json": files.json,
        }))
        .unwrap_or_default()
    );
    Ok(())
}

fn label_counts(d: &ClassificationDiagram) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for row in &d.labels {
        for c in row {
            *m.entry(c.to_string()).or_insert(0) += 1;
        }
    }
    m
}

fn cmd_figures(ctx: &Ctx) -> CliResult<()> {
    let all = recipes();
    let ids = ctx.cfg.figures.clone().unwrap_or_else(|| vec!["all".into()]);
    let chosen: Vec<Recipe> = if ids.iter().any(|i| i == "all") {
        all
    } else {
        let mut v = Vec::new();
        for id in &ids {
            match all.iter().find(|r| &r.id == id) {
                Some(r) => v.push(r.clone()),
                None => {
                    let known: Vec<&str> = all.iter().map(|r| r.id.as_str()).collect();
                    return input(format!("unknown figure '{id}' (known: {})", known.join(", ")));
                }
            }
        }
        v
    };
    let dir = ctx.out_dir();
    ctx.save_config(&dir)?;
    let mut manifest = Vec::new();
    let mut failed = 0;
    for r in &chosen {
        let grid = if ctx.effort() == Effort::Quick { &r.quick_grid } else { &r.grid };
        let outcome = problem_evaluator(&r.problem, ctx.effort())
            .and_then(|ev| sweep(ev.as_ref(), grid, ctx.seed(), ctx.threads))
            .and_then(|mut d| {
                d.name = r.id.clone();
                let fit = match (&r.boundary, r.fit) {
                    (Some(l), Some(m)) => Some(try_fit(&mut d, l, m)),
                    _ => None,
                };
                let files = render(&d, &dir)?;
                Ok((files, fit, label_counts(&d)))
            });
        let entry = match outcome {
            Ok((files, fit, counts)) => {
                eprintln!("{}: ok", r.id);
                json!({
                    "id": r.id,
                    "problem": r.problem,
                    "description": r.description,
                    "grid": grid.to_string(),
                    "status": "ok",
                    "files": { "csv": file_name(&files.csv), "svg": file_name(&files.svg), "json": file_name(&files.json) },
                    "labels": counts,
                    "fit": fit,
                })
            }
            Err(e) => {
                failed += 1;
                eprintln!("{}: failed: {}: {e}", r.id, e.name());
                json!({
                    "id": r.id,
                    "problem": r.problem,
                    "description": r.description,
                    "grid": grid.to_string(),
                    "status": "failed",
                    "error": e.name(),
                    "message": e.to_string(),
                })
            }
        };
        manifest.push(entry);
    }
    let text = serde_json::to_string_pretty(&json!({ "seed": ctx.seed(), "quick": ctx.effort() == Effort::Quick, "figures": manifest }))
        .map_err(|e| dlimit_core::Error::Io(e.to_string()))?;
    fs::write(dir.join("manifest.json"), text + "\n")?;
    println!("{} of {} recipes written to {}", chosen.len() - failed, chosen.len(), dir.display());
    if failed > 0 {
        return Err(CliError::Numeric(dlimit_core::Error::Degenerate(format!("{failed} recipe(s) failed"))));
    }
    Ok(())
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn cmd_tc(ctx: &Ctx) -> CliResult<()> {
    let eps = need(ctx.cfg.eps, "eps")?;
    if !(eps >= TC_EPS_FLOOR) {
        return input(format!(
            "eps = {eps} is below the floor {TC_EPS_FLOOR}: the wedge around delta = eps is not resolved in double precision"
        ));
    }
    let (bbox, cfg) = (StateBox::default(), TcConfig::default());
    match ctx.cfg.delta {
        Some(delta) => {
            let label = classify_transcritical(eps, delta, &bbox, &cfg)?;
            ctx.report(json!({ "eps": eps, "delta": delta, "label": format!("{label:?}") }))
        }
        None => {
            let f = tc_flip_interval(eps, &bbox, &cfg)?;
            ctx.report(json!({ "eps": eps, "flip_interval": f }))
        }
    }
}

fn cmd_skt(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let eps = need(c.eps, "eps")?;
    let delta = need(c.delta, "delta")?;
    let window = match (c.r1_min, c.r1_max) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => return input("--r1-min and --r1-max go together"),
    };
    let defaults = ScanOptions::default();
    let opts = ScanOptions { r1_window: window, n_modes: c.n_modes.unwrap_or(defaults.n_modes), n_scan: c.n_scan.unwrap_or(defaults.n_scan) };
    let p = SktParams::default();
    let four = count_bifurcations_4comp(&p, eps, delta, &opts)?;
    if four.clipped {
        eprintln!("warning: r1 window clipped to [{}, {}] where the homogeneous state stays positive", four.window.0, four.window.1);
    }
    let limit = count_bifurcations_limit(&p, &opts)?;
    ctx.report(json!({ "eps": eps, "delta": delta, "four_component": four, "limit": limit }))
}

fn cmd_skt_plane(ctx: &Ctx) -> CliResult<()> {
    let mut c = ctx.cfg.clone();
    c.problem = Some("skt".into());
    cmd_sweep(&Ctx { cfg: c, threads: ctx.threads })
}

fn cmd_shear(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let alpha = need(c.alpha, "alpha")?;
    let b = c.b.unwrap_or(1.0);
    let sigma = need(c.sigma, "sigma")?;
    let l = lyapunov_quadrature(alpha, b, sigma)?;
    let s0 = if alpha > 0.0 && b > 0.0 { Some(sigma_zero(alpha, b)?) } else { None };
    let label = if l.lambda1 < 0.0 { "Synchronizing" } else if l.lambda1 > 0.0 { "Chaotic" } else { "Neutral" };
    ctx.report(json!({ "alpha": alpha, "b": b, "sigma": sigma, "lambda1": l.lambda1, "lambda2": l.lambda2, "c0": compute_c0()?, "sigma0": s0, "label": label }))
}

fn cmd_pdl(ctx: &Ctx) -> CliResult<()> {
    let eps = need(ctx.cfg.eps, "eps")?;
    let delta = need(ctx.cfg.delta, "delta")?;
    let g = threshold_g(eps, DEFAULT_CELLS)?;
    ctx.report(json!({ "eps": eps, "delta": delta, "g": g, "label": format!("{:?}", pdl_label(delta, g)) }))
}

fn cmd_bdd(ctx: &Ctx) -> CliResult<()> {
    let eps = need(ctx.cfg.eps, "eps")?;
    let delta = need(ctx.cfg.delta, "delta")?;
    let st = logistic_stationary(eps, delta)?;
    ctx.report(json!({ "eps": eps, "delta": delta, "bounded": classify_bdd(eps, delta), "stationary": st }))
}

fn cmd_mems(ctx: &Ctx) -> CliResult<()> {
    let eps = need(ctx.cfg.eps, "eps")?;
    let folds = mems_folds(eps)?;
    let solutions = match ctx.cfg.lambda {
        Some(lambda) => {
            let sols = mems_solutions(lambda, eps, 200)?;
            let v: Vec<_> = sols
                .iter()
                .map(|s| json!({ "u0": s.u0, "branch": s.branch_tag, "norm_sq": s.norm_sq, "min_u": s.min_u(), "residual": s.residual }))
                .collect();
            Some(v)
        }
        None => None,
    };
    let regime = ctx.cfg.delta.map(|d| classify_ss(eps, d).map(|r| format!("{r:?}")));
    ctx.report(json!({ "eps": eps, "lambda": ctx.cfg.lambda, "folds": folds, "solutions": solutions, "regime": regime }))
}

fn cmd_fhn(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let eps = c.eps.unwrap_or(0.01);
    let delta = need(c.delta, "delta")?;
    let sigma = need(c.sigma, "sigma")?;
    let t_end = c.t_end.unwrap_or(if ctx.effort() == Effort::Quick { 500.0 } else { 2000.0 });
    let s = classify_fhn(eps, delta, sigma, t_end, ctx.seed())?;
    ctx.report(json!({
        "eps": eps, "delta": delta, "sigma": sigma, "t_end": t_end,
        "label": s.label, "spikes": s.spike_times.len(), "median_count": s.median_count,
        "respike_fraction": s.respike_fraction, "theory_respike": s.theory_respike,
    }))
}

fn cmd_transition(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let eps = need(c.eps, "eps")?;
    let sigma = need(c.sigma, "sigma")?;
    let n = c.paths.unwrap_or(if ctx.effort() == Effort::Quick { 200 } else { 2000 });
    let p = transition_probability_transcritical(eps, sigma, c.delta, -1.0, n, ctx.seed())?;
    ctx.report(json!({ "eps": eps, "sigma": sigma, "delta": c.delta, "estimate": p }))
}

fn cmd_olsen(ctx: &Ctx) -> CliResult<()> {
    let c = &ctx.cfg;
    let eps = need(c.eps, "eps")?;
    let delta = need(c.delta, "delta")?;
    let t_tr = c.t_transient.unwrap_or(1e5);
    let window = c.window.unwrap_or(if ctx.effort() == Effort::Quick { 2000.0 } else { 4000.0 });
    let l = classify_olsen(eps, delta, t_tr, window, &OLSEN_SEED_STATE)?;
    ctx.report(json!({ "eps": eps, "delta": delta, "result": l }))
}

fn cmd_problems() -> CliResult<()> {
    println!("problems:");
    for p in PROBLEMS {
        println!("  {p}");
    }
    println!("figures:");
    for r in recipes() {
        println!("  {:<6} {:<12} {}", r.id, r.problem, r.description);
    }
    Ok(())
}
