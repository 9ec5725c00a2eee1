//! Command-line front end: argument parsing, run manifests and the five
//! commands `simulate`, `sweep`, `portrait`, `reduce`, `diagnose`.
//!
//! All computation happens first; files are written afterwards from this
//! thread only.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{
    detect_transition, revival_diagnostics, sweep, EnsembleSpec, GridSpec, OrderSettings, RevivalSettings, SweepResult,
};
use crate::config::{load_config, ConfigSource, RunConfig};
use crate::dynamics::{ModelRegistry, ReducedModel};
use crate::error::{Error, Result};
use crate::model::FullState;
use crate::output::{self, Line, Series};
use crate::presets::{comb_ep_coupling, DEFAULT_SEED};
use crate::propagation::{config_hash, sample_times, sample_trajectory, SpectralPropagator, Trajectory};
use crate::ratio::{fixed_points, generate_portrait, PortraitSpec};
use crate::reduced::{ep_coupling, eigensystem, ReducedParams};

#[derive(Debug, Parser)]
#[command(name = "epsim", version, about = "Exceptional-point transition in coupled oscillators with finite reservoirs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Single trajectory (full system plus reduced-model overlay)
    Simulate(RunArgs),
    /// Order parameter |D12| over a coupling grid
    Sweep(RunArgs),
    /// Phase portrait of the amplitude-ratio dynamics
    Portrait(RunArgs),
    /// Reduced-model eigenvalues, eigenvectors and Ω_EP
    Reduce(RunArgs),
    /// Revival times and synchronization of a single trajectory
    Diagnose(RunArgs),
    /// List the registered dynamics models
    Models,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Named preset (fig2, fig6a, fig6b, fig7, fig8, fig3a-c, fig4, fig5a, fig5b, fig7b, fig8b)
    #[arg(long, required_unless_present = "config", conflicts_with = "config")]
    pub preset: Option<String>,
    /// TOML run configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Ensemble seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write SVG plots
    #[arg(long)]
    pub svg: bool,
    /// Observation time T (sweep), simulated time (simulate, diagnose) or span (portrait)
    #[arg(long = "T")]
    pub t_obs: Option<f64>,
    /// Ensemble size
    #[arg(long)]
    pub n_states: Option<usize>,
    /// Coupling grid start:stop:steps[:log]; suffix bounds with `ep` for multiples of Ω_EP
    #[arg(long, allow_hyphen_values = true)]
    pub omega_grid: Option<String>,
    /// Dynamics model (see `epsim models`)
    #[arg(long)]
    pub model: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Sweep,
    Portrait,
    Reduce,
    Diagnose,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Portrait => "portrait",
            Command::Reduce => "reduce",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub observation_time: Option<f64>,
    pub n_states: Option<usize>,
    pub omega_grid: Option<GridSpec>,
    pub model: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub preset_name: Option<String>,
    pub output_dir: PathBuf,
    pub seed_override: Option<u64>,
    pub emit_svg: bool,
    pub overrides: Overrides,
}

impl RunManifest {
    pub fn from_args(command: Command, args: RunArgs) -> Result<Self> {
        let omega_grid = args.omega_grid.as_deref().map(str::parse).transpose()?;
        let m = Self {
            command,
            config_path: args.config,
            preset_name: args.preset,
            output_dir: args.out,
            seed_override: args.seed,
            emit_svg: args.svg,
            overrides: Overrides {
                observation_time: args.t_obs,
                n_states: args.n_states,
                omega_grid,
                model: args.model,
            },
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.config_path, &self.preset_name) {
            (Some(_), None) | (None, Some(_)) => Ok(()),
            _ => Err(Error::InvalidArgument("exactly one of --config / --preset is required".into())),
        }
    }

    fn source(&self) -> ConfigSource<'_> {
        match (&self.config_path, &self.preset_name) {
            (Some(p), _) => ConfigSource::File(p),
            (None, Some(n)) => ConfigSource::Preset(n),
            (None, None) => unreachable!("validated"),
        }
    }
}

/// Files written and per-point failures of one run.
#[derive(Debug, Default)]
pub struct RunReport {
    pub artifacts: Vec<PathBuf>,
    pub failures: Vec<String>,
    pub summary: Vec<String>,
}

impl RunReport {
    pub fn success(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Configuration after applying command-line overrides.
pub fn resolve(manifest: &RunManifest) -> Result<RunConfig> {
    manifest.validate()?;
    let mut cfg = load_config(manifest.source())?;
    let o = &manifest.overrides;
    if let Some(m) = &o.model {
        cfg.model = Some(m.clone());
    }
    if let Some(seed) = manifest.seed_override {
        cfg.ensemble.get_or_insert(EnsembleSpec::new(300, DEFAULT_SEED)).seed = seed;
    }
    if let Some(n) = o.n_states {
        cfg.ensemble.get_or_insert(EnsembleSpec::new(n, DEFAULT_SEED)).n_states = n;
    }
    if let Some(g) = o.omega_grid {
        cfg.sweep = Some(g);
    }
    if let Some(t) = o.observation_time {
        match manifest.command {
            Command::Sweep => {
                let a = cfg.analysis.get_or_insert(OrderSettings::new(t, 0.5));
                a.observation_time = t;
                a.dt = a.dt.min(t / 10.0);
            }
            Command::Simulate | Command::Diagnose => {
                cfg.system.t_max = t;
                cfg.system.dt_sample = cfg.system.dt_sample.min(t);
            }
            Command::Portrait => {
                let delta = ReducedParams::from_config(&cfg.system).rate_difference().abs().max(1e-300);
                cfg.portrait.get_or_insert_with(|| PortraitSpec::with_defaults(50.0 / delta)).t_span = t;
            }
            Command::Reduce => {}
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn header(command: Command, cfg: &RunConfig, seed: u64) -> String {
    json!({ "command": command.name(), "seed": seed, "config": cfg }).to_string()
}

fn seed_of(cfg: &RunConfig) -> u64 {
    cfg.ensemble.map_or(DEFAULT_SEED, |e| e.seed)
}

struct Writer<'a> {
    dir: &'a Path,
    report: &'a mut RunReport,
}

impl Writer<'_> {
    fn file(&mut self, name: &str, fill: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        fill(&mut w)?;
        w.flush()?;
        self.report.artifacts.push(path);
        Ok(())
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        self.file(name, |w| w.write_all(body.as_bytes()))
    }
}

pub fn run(manifest: &RunManifest) -> Result<RunReport> {
    let cfg = resolve(manifest)?;
    std::fs::create_dir_all(&manifest.output_dir)?;
    let mut report = RunReport::default();
    let mut w = Writer {
        dir: &manifest.output_dir,
        report: &mut report,
    };
    match manifest.command {
        Command::Simulate => simulate(&cfg, manifest, &mut w)?,
        Command::Sweep => run_sweep(&cfg, manifest, &mut w)?,
        Command::Portrait => portrait(&cfg, manifest, &mut w)?,
        Command::Reduce => reduce(&cfg, manifest, &mut w)?,
        Command::Diagnose => diagnose(&cfg, manifest, &mut w)?,
    }
    Ok(report)
}

/// Selected-model trajectory from the configured initial pair; the Hermitian
/// model keeps reservoir amplitudes.
fn single_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let sys = &cfg.system;
    let a = cfg.initial_pair();
    if cfg.model_name() == "hermitian" {
        let prop = SpectralPropagator::from_config(sys)?;
        let init = FullState::from_oscillators(sys.dim(), a[0], a[1]);
        return sample_trajectory(&prop, &init, sys.t_max, sys.dt_sample, true);
    }
    let times = sample_times(sys.t_max, sys.dt_sample)?;
    let model = ModelRegistry::builtin().get(cfg.model_name())?;
    let pairs = model.prepare(sys, &times)?.evolve(a)?;
    let mut tr = Trajectory::from_pairs(times, pairs)?;
    tr.config_hash = config_hash(sys);
    Ok(tr)
}

fn abs_lines(times: &[f64], pairs: &[[num_complex::Complex64; 2]], tag: &str, dashed: bool) -> [Line; 2] {
    std::array::from_fn(|j| Line {
        label: format!("|a{}| {tag}", j + 1),
        points: times.iter().zip(pairs).map(|(&t, p)| (t, p[j].norm())).collect(),
        dashed,
    })
}

fn simulate(cfg: &RunConfig, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let traj = single_trajectory(cfg)?;
    let pairs = traj.pairs();
    let reduced = ReducedModel::prepare_unscaled(&cfg.system, &traj.times)?.evolve(cfg.initial_pair())?;
    let head = header(m.command, cfg, seed_of(cfg));
    let n1 = cfg.system.reservoir1.n_modes;
    let reservoirs = traj
        .full_states()
        .map(|s| (n1, s.iter().map(|f| &f.amplitudes()[2..]).collect::<Vec<_>>()));
    w.file("trajectory.csv", |f| {
        output::write_trajectory(
            f,
            &head,
            &[Series {
                label: None,
                times: &traj.times,
                pairs: &pairs,
                reservoirs,
            }],
        )
    })?;
    let model = cfg.model_name().to_string();
    w.file("trajectory_overlay.csv", |f| {
        output::write_trajectory(
            f,
            &head,
            &[
                Series {
                    label: Some(&model),
                    times: &traj.times,
                    pairs: &pairs,
                    reservoirs: None,
                },
                Series {
                    label: Some("reduced"),
                    times: &traj.times,
                    pairs: &reduced,
                    reservoirs: None,
                },
            ],
        )
    })?;
    if m.emit_svg {
        let mut lines: Vec<Line> = abs_lines(&traj.times, &pairs, &model, false).into();
        if model != "reduced" {
            lines.extend(abs_lines(&traj.times, &reduced, "reduced", true));
        }
        let vlines = cfg
            .system
            .min_return_time()
            .map(|_| vec![("T_R1".to_string(), crate::model::return_time(&cfg.system.reservoir1))])
            .unwrap_or_default();
        let svg = output::line_plot("oscillator amplitudes", "t", "|a|", &lines, &vlines);
        w.text("trajectory.svg", &svg)?;
    }
    w.report.summary.push(format!("{} samples, t_max = {}", traj.len(), cfg.system.t_max));
    Ok(())
}

fn run_sweep(cfg: &RunConfig, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let ensemble = cfg.ensemble.unwrap_or(EnsembleSpec::new(300, DEFAULT_SEED));
    let settings = cfg
        .analysis
        .ok_or_else(|| Error::config("analysis", "sweep needs an [analysis] section or --T"))?;
    let grid = cfg
        .sweep
        .ok_or_else(|| Error::config("sweep", "sweep needs a [sweep] section or --omega-grid"))?;
    let omega_ep = comb_ep_coupling(&cfg.system);
    let omegas = grid.values(omega_ep)?;
    let model = ModelRegistry::builtin().get(cfg.model_name())?;
    let points = sweep(&cfg.system, &omegas, model.as_ref(), &ensemble, &settings)?;
    let head = header(m.command, cfg, ensemble.seed);
    w.file("sweep.csv", |f| output::write_sweep(f, &head, &points, settings.observation_time, ensemble.seed))?;

    for p in &points {
        if let Err(e) = &p.outcome {
            w.report.failures.push(format!("omega = {}: {e}", p.coupling));
        }
    }
    let ok: Vec<SweepResult> = points.iter().filter_map(|p| p.outcome.as_ref().ok().copied()).collect();
    match detect_transition(&ok) {
        Ok(est) => w.report.summary.push(format!(
            "transition at omega = {:.6e} (+/- {:.2e}), {:.3} x omega_EP = {:.6e}",
            est.coupling,
            est.uncertainty,
            est.coupling / omega_ep,
            omega_ep
        )),
        Err(e) => w.report.summary.push(format!("no transition estimate: {e}")),
    }
    if m.emit_svg {
        let line = Line {
            label: format!("|D12|, T = {}", settings.observation_time),
            points: points
                .iter()
                .map(|p| (p.coupling, p.outcome.as_ref().map_or(f64::NAN, |r| r.abs_var)))
                .collect(),
            dashed: false,
        };
        let svg = output::line_plot("order parameter", "Ω", "|D12|", &[line], &[("Ω_EP".into(), omega_ep)]);
        w.text("sweep.svg", &svg)?;
    }
    Ok(())
}

fn portrait(cfg: &RunConfig, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let params = ReducedParams::from_config(&cfg.system);
    let spec = match &cfg.portrait {
        Some(p) => p.clone(),
        None => {
            let delta = params.rate_difference().abs();
            let span = if delta > 0.0 { 50.0 / delta } else { 1000.0 };
            PortraitSpec::with_defaults(span)
        }
    };
    let portrait = generate_portrait(&spec, &params)?;
    let head = header(m.command, cfg, seed_of(cfg));
    w.file("portrait.csv", |f| output::write_portrait(f, &head, &portrait))?;
    for (k, tr) in portrait.trajectories.iter().enumerate() {
        w.file(&format!("ratio_trajectory_{k}.csv"), |f| output::write_ratio_trajectory(f, &head, tr))?;
    }
    w.file("fixed_points.csv", |f| output::write_fixed_points(f, &head, &portrait.fixed_points))?;
    if m.emit_svg {
        let title = format!("ratio dynamics, Ω/Ω_EP = {:.3}", params.coupling / ep_coupling(&params));
        w.text("portrait.svg", &output::portrait_svg(&title, &portrait, spec.re_range, spec.im_range))?;
    }
    Ok(())
}

fn reduce(cfg: &RunConfig, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let params = ReducedParams::from_config(&cfg.system);
    let eig = eigensystem(&params);
    let ep = ep_coupling(&params);
    let head = header(m.command, cfg, seed_of(cfg));
    let f = output::fmt_f64;
    w.file("reduced.csv", |out| {
        output::write_comment(out, &head)?;
        writeln!(out, "quantity,re,im")?;
        let rows = [
            ("gamma1", params.gamma1, 0.0),
            ("gamma2", params.gamma2, 0.0),
            ("omega", params.coupling, 0.0),
            ("omega_ep", ep, 0.0),
            ("lambda1", eig.lambda1.re, eig.lambda1.im),
            ("lambda2", eig.lambda2.re, eig.lambda2.im),
            ("h1_1", eig.h1[0].re, eig.h1[0].im),
            ("h1_2", eig.h1[1].re, eig.h1[1].im),
            ("h2_1", eig.h2[0].re, eig.h2[0].im),
            ("h2_2", eig.h2[1].re, eig.h2[1].im),
            ("overlap", eig.overlap(), 0.0),
            ("coalesced", if eig.coalesced { 1.0 } else { 0.0 }, 0.0),
        ];
        for (name, re, im) in rows {
            writeln!(out, "{name},{},{}", f(re), f(im))?;
        }
        Ok(())
    })?;
    w.file("fixed_points.csv", |out| output::write_fixed_points(out, &head, &fixed_points(&params)))?;
    w.report.summary.push(format!(
        "gamma1 = {:.6e}, gamma2 = {:.6e}, omega_EP = {:.6e}, omega/omega_EP = {:.4}, lambda1 = {:.6e}, lambda2 = {:.6e}",
        params.gamma1,
        params.gamma2,
        ep,
        params.coupling / ep,
        eig.lambda1,
        eig.lambda2
    ));
    Ok(())
}

fn diagnose(cfg: &RunConfig, m: &RunManifest, w: &mut Writer<'_>) -> Result<()> {
    let traj = single_trajectory(cfg)?;
    let settings = cfg.diagnostics.unwrap_or_else(|| RevivalSettings {
        threshold: 0.05,
        window: cfg.system.min_return_time().unwrap_or(cfg.system.t_max) / 20.0,
    });
    let rep = revival_diagnostics(&traj, &settings)?;
    let head = header(m.command, cfg, seed_of(cfg));
    w.file("revivals.csv", |f| output::write_revivals(f, &head, &rep))?;
    let f = output::fmt_f64;
    let opt = |x: Option<f64>| x.map_or("NaN".to_string(), f);
    w.file("sync.csv", |out| {
        output::write_comment(out, &head)?;
        writeln!(out, "sync_score,first_revival_a1,first_revival_a2")?;
        writeln!(out, "{},{},{}", f(rep.sync_score), opt(rep.first_revival(0)), opt(rep.first_revival(1)))
    })?;
    if m.emit_svg {
        let pairs = traj.pairs();
        let lines: Vec<Line> = abs_lines(&traj.times, &pairs, cfg.model_name(), false).into();
        let vlines: Vec<(String, f64)> = rep
            .peaks
            .iter()
            .enumerate()
            .flat_map(|(j, ts)| ts.iter().map(move |&t| (format!("a{}", j + 1), t)))
            .collect();
        w.text("diagnose.svg", &output::line_plot("revivals", "t", "|a|", &lines, &vlines))?;
    }
    w.report.summary.push(format!(
        "sync score {:.4}; first revivals a1 = {}, a2 = {}",
        rep.sync_score,
        opt(rep.first_revival(0)),
        opt(rep.first_revival(1))
    ));
    Ok(())
}

/// Parses arguments, runs, reports; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (command, args) = match cli.command {
        CommandArgs::Models => {
            let mut out = std::io::stdout().lock();
            for m in ModelRegistry::builtin().iter() {
                let _ = writeln!(out, "{:<14} {}", m.name(), m.description());
            }
            return 0;
        }
        CommandArgs::Simulate(a) => (Command::Simulate, a),
        CommandArgs::Sweep(a) => (Command::Sweep, a),
        CommandArgs::Portrait(a) => (Command::Portrait, a),
        CommandArgs::Reduce(a) => (Command::Reduce, a),
        CommandArgs::Diagnose(a) => (Command::Diagnose, a),
    };
    let result = RunManifest::from_args(command, args).and_then(|m| run(&m));
    match result {
        Ok(report) => {
            // a closed stdout (e.g. piped into `head`) is not a failure
            let mut out = std::io::stdout().lock();
            for line in &report.summary {
                let _ = writeln!(out, "{line}");
            }
            for path in &report.artifacts {
                let _ = writeln!(out, "wrote {}", path.display());
            }
            if report.success() {
                0
            } else {
                eprintln!("{} sweep point(s) failed:", report.failures.len());
                for f in &report.failures {
                    eprintln!("  {f}");
                }
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
