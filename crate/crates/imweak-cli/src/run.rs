//! Command dispatch, error classification and the no-execute validator.

use std::path::Path;
use std::time::SystemTime;

use imweak::dist::GridDistribution;
use imweak::metersim::MeterWavefunction;
use imweak::postselect::{self, ReportOptions};
use imweak::qcore;
use imweak::Error as EngineError;

use crate::artifacts;
use crate::config::{DistributionConfig, RunConfig};
use crate::{RunArgs, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_ENGINE, EXIT_NO_ACCEPT};

/// CLI-level error carrying its exit class.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Engine(EngineError),
    EngineMsg(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self::Config(msg.into())
    }

    pub fn engine(err: EngineError) -> Self {
        Self::Engine(err)
    }

    pub fn engine_msg(msg: impl Into<String>) -> Self {
        Self::EngineMsg(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => EXIT_CONFIG,
            Self::Engine(
                EngineError::DegenerateSelection { .. } | EngineError::DegenerateOffset { .. },
            ) => EXIT_DEGENERATE,
            Self::Engine(EngineError::NoAcceptedSamples { .. }) => EXIT_NO_ACCEPT,
            Self::Engine(_) | Self::EngineMsg(_) => EXIT_ENGINE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(msg) => write!(f, "config: {msg}"),
            Self::Engine(err) => write!(f, "{err}"),
            Self::EngineMsg(msg) => write!(f, "{msg}"),
        }
    }
}

fn report_options(cfg: &RunConfig) -> ReportOptions {
    ReportOptions {
        offset_decomposition: cfg.offset_decomposition.unwrap_or(true),
        weak_threshold: cfg.weak_threshold.unwrap_or(postselect::WEAK_THRESHOLD),
    }
}

pub fn run_command(command: &str, args: &RunArgs) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if cfg.command != command {
        return Err(CliError::config(format!(
            "config declares command `{}` but `{command}` was invoked",
            cfg.command
        )));
    }
    if args.seed.is_some() || args.n.is_some() {
        let mc = cfg
            .mc
            .as_mut()
            .ok_or_else(|| CliError::config("--seed/--n overrides need an `mc` section"))?;
        if let Some(seed) = args.seed {
            mc.seed = seed;
        }
        if let Some(n) = args.n {
            mc.n = n;
        }
    }
    let config_dir = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(".").to_path_buf());

    let started = SystemTime::now();
    let outcome = dispatch(command, &cfg, &config_dir, &args.out);
    let error_text = outcome.as_ref().err().map(|e| e.to_string());
    artifacts::write_manifest(&args.out, command, &cfg, started, error_text)?;
    outcome
}

fn dispatch(
    command: &str,
    cfg: &RunConfig,
    config_dir: &Path,
    out: &Path,
) -> Result<(), CliError> {
    match command {
        "weakvalue" => {
            let (observable, tsv) = cfg.build_system()?;
            let wv = qcore::weak_value(&observable, &tsv).map_err(CliError::engine)?;
            artifacts::write_json(out, "report.json", &wv)?;
            Ok(())
        }
        "postselect" => {
            let (observable, tsv) = cfg.build_system()?;
            let prior = cfg.build_distribution(config_dir)?;
            let report = postselect::report(&prior, &observable, &tsv, report_options(cfg))
                .map_err(CliError::engine)?;
            write_distribution(out, "prior.csv", &prior)?;
            write_distribution(out, "posterior.csv", &report.posterior)?;
            artifacts::write_json(out, "report.json", &report)?;
            Ok(())
        }
        "montecarlo" => {
            let (observable, tsv) = cfg.build_system()?;
            let prior = cfg.build_distribution(config_dir)?;
            let mc = cfg
                .mc
                .as_ref()
                .ok_or_else(|| CliError::config("montecarlo needs an `mc` section"))?;
            let report = postselect::mc_run(&prior, &observable, &tsv, mc.n, mc.seed)
                .map_err(CliError::engine)?;
            write_distribution(out, "prior.csv", &prior)?;
            artifacts::write_json(out, "report.json", &report)?;
            Ok(())
        }
        "meter" => {
            let (observable, tsv) = cfg.build_system()?;
            let mcfg = cfg
                .meter
                .as_ref()
                .ok_or_else(|| CliError::config("meter needs a `meter` section"))?;
            let meter = MeterWavefunction::gaussian(mcfg.sigma_p, mcfg.n, mcfg.span)
                .map_err(CliError::engine)?;
            let (report, after) =
                imweak::metersim::shift_report(&meter, mcfg.k, &observable, &tsv)
                    .map_err(CliError::engine)?;
            write_meter(out, "meter_before.csv", &meter)?;
            write_meter(out, "meter_after.csv", &after)?;
            artifacts::write_json(out, "report.json", &report)?;
            Ok(())
        }
        "scenario" => {
            let scfg = cfg
                .scenario
                .as_ref()
                .ok_or_else(|| CliError::config("scenario needs a `scenario` section"))?;
            let report = scfg.run(config_dir, cfg.system.as_ref())?;
            write_distribution(out, "prior.csv", &report.coupling_distribution)?;
            write_distribution(out, "posterior.csv", &report.postselection.posterior)?;
            artifacts::write_json(out, "report.json", &report)?;
            Ok(())
        }
        other => Err(CliError::config(format!("unknown command `{other}`"))),
    }
}

fn write_distribution(out: &Path, name: &str, dist: &GridDistribution) -> Result<(), CliError> {
    let mut buf = Vec::new();
    dist.write_csv(&mut buf).map_err(CliError::engine)?;
    artifacts::write_atomic(out, name, &buf)?;
    Ok(())
}

fn write_meter(out: &Path, name: &str, meter: &MeterWavefunction) -> Result<(), CliError> {
    let mut buf = Vec::new();
    meter.write_csv(&mut buf).map_err(CliError::engine)?;
    artifacts::write_atomic(out, name, &buf)?;
    Ok(())
}

/// Full validation without execution: structural checks, Hermiticity and
/// normalization diagnostics, distribution construction, and the weak-regime
/// pre-flight with the configured states. Prints one line per finding and
/// never panics.
pub fn validate_command(config_path: &Path) -> Result<(), CliError> {
    let mut problems = 0usize;
    let fail = |msg: String, problems: &mut usize| {
        println!("error: {msg}");
        *problems += 1;
    };

    let cfg = match RunConfig::load(config_path) {
        Ok(cfg) => cfg,
        Err(e) => {
            println!("error: {e}");
            return Err(CliError::config("validation failed"));
        }
    };
    let config_dir = config_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| Path::new(".").to_path_buf());

    match cfg.command.as_str() {
        "weakvalue" | "postselect" | "montecarlo" | "meter" | "scenario" => {
            println!("ok: command `{}`", cfg.command);
        }
        other => fail(format!("unknown command `{other}`"), &mut problems),
    }

    let mut system = None;
    if let Some(sys) = &cfg.system {
        // report the raw asymmetry before the typed constructor rejects it
        let d = sys.observable.len();
        let square = sys.observable.iter().all(|r| r.len() == d);
        if !square {
            fail("observable matrix is not square".into(), &mut problems);
        } else {
            let mut max_asym: f64 = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let a = sys.observable[i][j];
                    let b = sys.observable[j][i];
                    let dre = a[0] - b[0];
                    let dim = a[1] + b[1];
                    max_asym = max_asym.max((dre * dre + dim * dim).sqrt());
                }
            }
            if max_asym > 1e-12 {
                fail(
                    format!("observable is not Hermitian: max |M - M†| = {max_asym:.3e}"),
                    &mut problems,
                );
            } else {
                println!("ok: observable Hermitian (max asymmetry {max_asym:.3e})");
            }
        }
        for (name, state) in [("pre", &sys.pre), ("post", &sys.post)] {
            let norm_sq: f64 = state.iter().map(|[re, im]| re * re + im * im).sum();
            if (norm_sq - 1.0).abs() > 1e-12 {
                fail(format!("{name} state not normalized: ‖ψ‖² = {norm_sq}"), &mut problems);
            } else {
                println!("ok: {name} state normalized");
            }
        }
        match sys.build() {
            Ok(pair) => {
                println!("ok: selection overlap |⟨Φ|Ψ⟩| = {:.6e}", pair.1.overlap().norm());
                system = Some(pair);
            }
            Err(e) => fail(e.to_string(), &mut problems),
        }
    } else if cfg.command != "scenario" {
        fail("missing `system` section".into(), &mut problems);
    }

    let mut distribution = None;
    if let Some(spec) = &cfg.distribution {
        if let DistributionConfig::Csv { path } = spec {
            let resolved = if path.is_absolute() {
                path.clone()
            } else {
                config_dir.join(path)
            };
            if !resolved.exists() {
                fail(format!("distribution CSV not found: {}", resolved.display()), &mut problems);
            }
        }
        match spec.build(&config_dir) {
            Ok(d) => {
                println!(
                    "ok: distribution ({} nodes, renormalization factor {:.6})",
                    d.len(),
                    d.renormalization()
                );
                distribution = Some(d);
            }
            Err(e) => fail(e.to_string(), &mut problems),
        }
    } else if matches!(cfg.command.as_str(), "postselect" | "montecarlo") {
        fail("missing `distribution` section".into(), &mut problems);
    }

    if let Some(mc) = &cfg.mc {
        if mc.n < postselect::MC_MIN_SAMPLES {
            fail(
                format!("mc.n = {} below minimum {}", mc.n, postselect::MC_MIN_SAMPLES),
                &mut problems,
            );
        } else {
            println!("ok: mc (n = {}, seed = {})", mc.n, mc.seed);
        }
    } else if cfg.command == "montecarlo" {
        fail("missing `mc` section".into(), &mut problems);
    }

    if let Some(m) = &cfg.meter {
        if MeterWavefunction::gaussian(m.sigma_p, m.n, m.span).is_err() {
            fail(
                format!(
                    "meter grid invalid: sigma_p = {}, n = {}, span = {}",
                    m.sigma_p, m.n, m.span
                ),
                &mut problems,
            );
        } else {
            println!("ok: meter grid");
        }
    } else if cfg.command == "meter" {
        fail("missing `meter` section".into(), &mut problems);
    }

    if cfg.command == "scenario" {
        match &cfg.scenario {
            Some(s) => match s.name.as_str() {
                "white_light_phase" | "michelson_fs" | "atomic_emission" | "doppler" => {
                    println!("ok: scenario `{}`", s.name);
                }
                other => fail(format!("unknown scenario `{other}`"), &mut problems),
            },
            None => fail("missing `scenario` section".into(), &mut problems),
        }
    }

    // weak-regime pre-flight with the configured states
    if let (Some((observable, tsv)), Some(dist)) = (&system, &distribution) {
        let options = report_options(&cfg);
        let wv = if options.offset_decomposition {
            postselect::offset_decomposition(dist, observable, tsv)
                .map(|d| d.modified_weak_value)
        } else {
            qcore::weak_value(observable, tsv)
        };
        match wv {
            Ok(wv) => {
                let v =
                    postselect::validity_with_threshold(wv, dist, options.weak_threshold);
                println!(
                    "ok: predicted validity ratio {:.6} ({})",
                    v.ratio,
                    if v.weak_ok { "weak" } else { "NOT weak" }
                );
            }
            Err(e) => fail(format!("weak-regime pre-flight: {e}"), &mut problems),
        }
    }

    if problems == 0 {
        println!("ok");
        Ok(())
    } else {
        Err(CliError::config(format!("{problems} problem(s) found")))
    }
}
