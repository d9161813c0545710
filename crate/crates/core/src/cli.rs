//! Command-line surface. Exit codes: 0 success, 1 validation error, 2 I/O error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use log::{info, warn};

use crate::curve::LearningCurve;
use crate::emulator::{ceiling_performance, gen_synthetic, run_al, split_eval};
use crate::error::{Error, Result};
use crate::fitting::fit_curves;
use crate::io::config::{load_config, CeilingSource, ConfigFile};
use crate::io::csv::{parse_curve_csv, write_curve_csv};
use crate::io::plot::render_plots;
use crate::io::report::{emit_report, FitSection, ReportDocument};
use crate::metrics::{
    analyze, stability_series, Analysis, MetricSelector, StabilityContext, StabilitySeries,
    BASELINE_ID,
};

/// Sidecar written by `emulate` next to the curve log, holding the ceiling.
pub const ANALYSIS_SIDECAR: &str = "analysis.toml";
pub const CURVES_FILE: &str = "curves.csv";
pub const REPORT_FILE: &str = "report.toml";

#[derive(Debug, Parser)]
#[command(
    name = "al-speedup",
    version,
    about = "Speed-up factor and baseline metrics for active-learning query methods"
)]
struct Cli {
    /// Data-generation seed for `emulate` (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// TOML configuration with [emulation] and [analysis] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the synthetic AL emulator and write the curve log.
    Emulate,
    /// Fit the learning-curve families to a curve log.
    Fit { curves: PathBuf },
    /// Speed-up factor and baseline metrics for every query method.
    Metrics { curves: PathBuf },
    /// Metric values over a series of stop budgets.
    Stability {
        curves: PathBuf,
        /// Comma-separated stop budgets in added samples; defaults to the config.
        #[arg(long, value_delimiter = ',')]
        stop_budgets: Vec<f64>,
        /// Metrics to track; defaults to all.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
    },
    /// Fit, metrics, stability and plots in one go.
    Report { curves: PathBuf },
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Emulate => emulate(cli),
        Command::Fit { curves } => {
            let (curves, cfg, ceiling, source) = load_inputs(cli, curves)?;
            let fits = fit_curves(&curves, ceiling, &cfg.analysis.families)?;
            let mut doc = ReportDocument::new();
            push_ceiling_warning(&mut doc, source);
            doc.fit = Some(FitSection::new(&fits, source.as_str()));
            output(cli, &doc, "fit.toml")
        }
        Command::Metrics { curves } => {
            let (curves, cfg, ceiling, source) = load_inputs(cli, curves)?;
            let analysis = analyze(&curves, &cfg.analysis.options(ceiling))?;
            let doc = analysis_document(&analysis, source);
            output(cli, &doc, "metrics.toml")
        }
        Command::Stability {
            curves,
            stop_budgets,
            metrics,
        } => {
            let (curves, cfg, ceiling, source) = load_inputs(cli, curves)?;
            let budgets = if stop_budgets.is_empty() {
                cfg.analysis.stop_budgets.clone()
            } else {
                stop_budgets.clone()
            };
            if budgets.is_empty() {
                return Err(Error::ConfigInvalid(
                    "no stop budgets given (use --stop-budgets or analysis.stop_budgets)".into(),
                ));
            }
            let selectors: Vec<MetricSelector> = if metrics.is_empty() {
                MetricSelector::ALL.to_vec()
            } else {
                metrics.iter().map(|m| m.parse()).collect::<Result<_>>()?
            };
            let analysis = analyze(&curves, &cfg.analysis.options(ceiling))?;
            let series =
                all_stability(&curves, &analysis, &budgets, &selectors, cfg.analysis.alpha)?;
            let mut doc = ReportDocument::new();
            push_ceiling_warning(&mut doc, source);
            for s in &series {
                doc.add_stability(s);
            }
            output(cli, &doc, "stability.toml")
        }
        Command::Report { curves } => {
            let (curves, cfg, ceiling, source) = load_inputs(cli, curves)?;
            let analysis = analyze(&curves, &cfg.analysis.options(ceiling))?;
            let series = if cfg.analysis.stop_budgets.is_empty() {
                info!("no stop budgets configured; stability series skipped");
                Vec::new()
            } else {
                all_stability(
                    &curves,
                    &analysis,
                    &cfg.analysis.stop_budgets,
                    &MetricSelector::ALL,
                    cfg.analysis.alpha,
                )?
            };
            let mut doc = analysis_document(&analysis, source);
            for s in &series {
                doc.add_stability(s);
            }
            let out_dir = cli
                .out
                .clone()
                .or_else(|| cfg.analysis.out_dir.clone())
                .unwrap_or_else(|| PathBuf::from("report"));
            fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
            emit_report(&doc, &out_dir.join(REPORT_FILE))?;
            let speed_up: BTreeMap<String, f64> = analysis
                .report
                .per_qm
                .iter()
                .map(|(id, m)| (id.clone(), m.speed_up.s))
                .collect();
            let written = render_plots(
                &curves,
                Some(&analysis.fits),
                &analysis.ratio_series,
                &speed_up,
                &series,
                &out_dir,
            )?;
            for path in written {
                info!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

fn emulate(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    let em = &cfg.emulation;
    let data_seed = cli.seed.unwrap_or(em.data_seed);
    let data = gen_synthetic(em.n_samples, em.positive_fraction, data_seed)?;
    let (pool, eval) = split_eval(&data, em.eval_fraction, data_seed)?;
    let loops = em.loop_configs()?;
    let mut curves = Vec::with_capacity(loops.len());
    for config in &loops {
        info!(
            "emulating '{}' over {} seeds",
            config.qm,
            config.seeds.len()
        );
        curves.push(run_al(config, &pool, &eval)?.to_curve()?);
    }
    let ceiling = ceiling_performance(&pool, &eval, &em.trainer())?;

    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("runs"));
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;
    write_curve_csv(&out_dir.join(CURVES_FILE), curves.iter())?;
    let sidecar = out_dir.join(ANALYSIS_SIDECAR);
    fs::write(&sidecar, format!("[analysis]\nceiling = {ceiling:?}\n"))
        .map_err(|e| Error::io(&sidecar, e))?;
    info!(
        "wrote {} and {}",
        out_dir.join(CURVES_FILE).display(),
        sidecar.display()
    );
    Ok(())
}

type Inputs = (
    BTreeMap<String, LearningCurve>,
    ConfigFile,
    f64,
    CeilingSource,
);

/// Curve log, config and ceiling. Without a configured ceiling the
/// `analysis.toml` sidecar next to the log is consulted, then the observed maximum.
fn load_inputs(cli: &Cli, csv: &Path) -> Result<Inputs> {
    let curves = parse_curve_csv(csv)?;
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => ConfigFile::default(),
    };
    if cfg.analysis.ceiling.is_none() && cfg.analysis.ceilings.is_none() {
        let sidecar = csv
            .parent()
            .unwrap_or(Path::new("."))
            .join(ANALYSIS_SIDECAR);
        if sidecar.is_file() {
            let side = load_config(&sidecar)?;
            cfg.analysis.ceiling = side.analysis.ceiling;
            cfg.analysis.ceilings = side.analysis.ceilings;
            info!("ceiling taken from {}", sidecar.display());
        }
    }
    if !curves.contains_key(BASELINE_ID) {
        return Err(Error::MissingQueryMethod(BASELINE_ID.to_string()));
    }
    let (ceiling, source) = cfg.analysis.resolve_ceiling(&curves)?;
    if source == CeilingSource::ObservedMaximum {
        warn!("no ceiling configured; using the observed maximum {ceiling}");
    }
    Ok((curves, cfg, ceiling, source))
}

fn push_ceiling_warning(doc: &mut ReportDocument, source: CeilingSource) {
    if source == CeilingSource::ObservedMaximum {
        doc.warnings.push(
            "ceiling not configured; a_inf set to the maximum observed mean performance".into(),
        );
    }
}

fn analysis_document(analysis: &Analysis, source: CeilingSource) -> ReportDocument {
    let mut doc = ReportDocument::new();
    push_ceiling_warning(&mut doc, source);
    doc.fit = Some(FitSection::new(&analysis.fits, source.as_str()));
    doc.with_metrics(&analysis.report, &analysis.ratio_series)
}

fn all_stability(
    curves: &BTreeMap<String, LearningCurve>,
    analysis: &Analysis,
    budgets: &[f64],
    selectors: &[MetricSelector],
    alpha: f64,
) -> Result<Vec<StabilitySeries>> {
    let family = analysis.fits.selected_family;
    let ctx = StabilityContext {
        a_inf: analysis.fits.a_inf,
        family,
        a0: analysis.fits.intercepts[&family].a0,
        alpha,
    };
    let mut out = Vec::new();
    for qm in curves.keys().filter(|id| *id != BASELINE_ID) {
        for &metric in selectors {
            out.push(stability_series(metric, qm, curves, budgets, &ctx)?);
        }
    }
    Ok(out)
}

/// Writes `doc` to `<out>/<name>` when `--out` is set, otherwise to stdout.
fn output(cli: &Cli, doc: &ReportDocument, name: &str) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            emit_report(doc, &dir.join(name))
        }
        None => {
            print!("{}", doc.to_toml()?);
            Ok(())
        }
    }
}
