//! `rydchip`: polarizability tables, synthetic EIT data, and the
//! spectra → field → patch-model inversion.
//!
//! Exit codes: 0 ok, 2 unreadable/malformed input, 3 model error,
//! 4 fit did not converge.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rydchip::pipeline::{
    self, parse_state_list, read_field_csv, run_analysis, run_patch_fit, stark_table, summary_text, synth_experiment,
    validate_constants, write_stark_csv, PipelineError, RunConfig,
};

#[derive(Parser)]
#[command(name = "rydchip", version, about = "Rydberg Stark shifts near surfaces from ladder-EIT spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; the built-in example when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; the configuration's `paths.out_dir` when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Polarizabilities for a list of states.
    Stark {
        #[command(flatten)]
        common: Common,
        /// File with one `n l j mj` per line; the configured states when omitted.
        #[arg(long)]
        states: Option<PathBuf>,
        /// Single state, e.g. "30 0 1/2 1/2". May be repeated.
        #[arg(long = "state")]
        state: Vec<String>,
    },
    /// Write synthetic reference and EIT spectra plus a manifest.
    Synth {
        #[command(flatten)]
        common: Common,
    },
    /// Fit spectra, infer fields and fit the patch model.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// Directory with manifest.json; the configuration's `paths.data_dir` when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Fit the patch model to an existing field-sample CSV.
    PatchFit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: PathBuf,
    },
    /// Check shipped constants and unit conversions.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Print the example configuration as JSON.
    ExampleConfig,
}

fn load_config(common: &Common) -> Result<RunConfig, PipelineError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::example(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &RunConfig) -> PathBuf {
    common.out.clone().unwrap_or_else(|| cfg.paths.out_dir.clone())
}

fn read_text(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    match cli.command {
        Command::Stark { common, states, state } => {
            let cfg = load_config(&common)?;
            let mut list = Vec::new();
            if let Some(p) = &states {
                list.extend(parse_state_list(&read_text(p)?)?);
            }
            for s in &state {
                list.extend(parse_state_list(s)?);
            }
            if list.is_empty() {
                for s in &cfg.states {
                    list.push(s.state()?);
                }
            }
            let defects = pipeline::load_defects(&cfg)?;
            let rows = stark_table(&list, &defects, &cfg.window())?;
            let path = out_dir(&common, &cfg).join("stark.csv");
            write_stark_csv(&path, &rows)?;
            for r in &rows {
                println!("{}  n*={:.4}  alpha={:+.6e} MHz/(V/cm)^2", r.state, r.n_star, r.alpha);
            }
            eprintln!("wrote {}", path.display());
        }
        Command::Synth { common } => {
            let cfg = load_config(&common)?;
            let dir = out_dir(&common, &cfg);
            let m = synth_experiment(&cfg, &dir)?;
            eprintln!("wrote {} spectrum pairs to {}", m.entries.len(), dir.display());
        }
        Command::Analyze { common, data } => {
            let cfg = load_config(&common)?;
            let data = data.unwrap_or_else(|| cfg.paths.data_dir.clone());
            let dir = out_dir(&common, &cfg);
            let report = run_analysis(&cfg, &data, &dir)?;
            print!("{}", summary_text(&report));
        }
        Command::PatchFit { common, samples } => {
            let cfg = load_config(&common)?;
            let s = read_field_csv(&samples)?;
            let fit = run_patch_fit(&s, &cfg, &out_dir(&common, &cfg))?;
            println!(
                "d0 = {:.4e} +/- {:.2e} Debye/um^2, w = {:.3} +/- {:.3} um, reduced chi2 = {:.3}",
                fit.model.d0, fit.d0_error, fit.model.w, fit.w_error, fit.reduced_chi2
            );
        }
        Command::Validate { common } => {
            if common.config.is_some() {
                load_config(&common)?;
            }
            let report = validate_constants();
            for c in &report.checks {
                println!(
                    "{} {:<42} {:.12e} (expected {:.12e}, rel {:.1e})",
                    if c.passed { "ok  " } else { "FAIL" },
                    c.name,
                    c.value,
                    c.expected,
                    c.relative_error
                );
            }
            if let Some(out) = &common.out {
                pipeline::write_json(&out.join("constants.json"), &report)?;
            }
            if !report.all_passed() {
                return Err(PipelineError::Model("constant checks failed".into()));
            }
        }
        Command::ExampleConfig => {
            let text =
                serde_json::to_string_pretty(&RunConfig::example()).map_err(|e| PipelineError::Parse(e.to_string()))?;
            println!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
