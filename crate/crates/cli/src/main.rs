mod config;
mod output;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{Format, Mode};
use output::{labelled_path, render_csv, resolve_output, round_json, write_file, Provenance};

#[derive(Parser)]
#[command(name = "spinlink", version, about = "Quantum state transfer through XY qubit networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-excitation spectrum, numeric and closed form.
    Spectrum(Common),
    /// Transfer fidelity traces.
    Transfer(Common),
    /// One summary row per run.
    Sweep(Common),
    /// Effective model against the qubit-cavity model.
    Validate(Common),
    /// Lindblad evolution with decay, dephasing and cavity loss.
    Dissipative(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; defaults to the config entry, then `$SPINLINK_OUT_DIR/<stem>.<ext>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads; all cores when omitted.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, env = "SPINLINK_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

/// Failure with the exit code and `kind` reported on stderr.
struct Failure {
    kind: &'static str,
    code: u8,
    error: anyhow::Error,
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use spinlink::Error as E;
    match e.chain().find_map(|c| c.downcast_ref::<spinlink::Error>()) {
        Some(E::NotHermitian { .. }) => "not_hermitian",
        Some(E::NoConvergence { .. }) => "no_convergence",
        Some(E::DimensionMismatch { .. }) => "dimension_mismatch",
        Some(E::Parameter(_)) => "parameter",
        Some(E::SiteOutOfRange { .. }) => "site_out_of_range",
        Some(E::SectorTooLarge { .. }) => "sector_too_large",
        Some(E::NonFinite(_)) => "non_finite",
        Some(E::Consistency(_)) => "consistency",
        Some(E::Resolution { .. }) => "resolution",
        Some(E::Integration { .. }) => "integration",
        None if e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some()) => "io",
        None => "runtime",
    }
}

fn execute(mode: Mode, args: &Common) -> std::result::Result<Value, Failure> {
    let config_err = |error| Failure { kind: "config", code: 2, error };
    let (cfg, text) = config::load_config(&args.config).map_err(config_err)?;
    if cfg.mode != mode {
        return Err(config_err(anyhow::anyhow!(
            "config error at `mode`: config is for `{}` but the `{mode}` subcommand was invoked",
            cfg.mode
        )));
    }
    let runtime = |error: anyhow::Error| Failure { kind: error_kind(&error), code: 1, error };
    let report = run::run_scenario(&cfg, args.jobs).map_err(runtime)?;
    let format = args.format.or(cfg.format).unwrap_or(match mode {
        Mode::Transfer | Mode::Sweep | Mode::Dissipative => Format::Csv,
        Mode::Spectrum | Mode::Validate => Format::Json,
    });
    let base = resolve_output(args.out.as_deref(), cfg.output.as_deref(), &args.config, args.out_dir.as_deref(), format);
    let provenance = Provenance::new(&text, &mode.to_string());
    let files = write_outputs(&report, &provenance, &base, format).map_err(runtime)?;
    let mut summary = json!({ "provenance": provenance.to_json(), "files": files });
    if let (Value::Object(s), Value::Object(extra)) = (&mut summary, report.summary) {
        s.extend(extra);
    }
    Ok(round_json(summary))
}

fn write_outputs(report: &run::Report, provenance: &Provenance, base: &Path, format: Format) -> Result<Vec<String>> {
    let mut files = Vec::new();
    match format {
        Format::Json => {
            let mut doc = json!({ "provenance": provenance.to_json() });
            if let (Value::Object(d), Value::Object(body)) = (&mut doc, report.document.clone()) {
                d.extend(body);
            }
            let text = serde_json::to_string_pretty(&round_json(doc))? + "\n";
            write_file(base, &text)?;
            files.push(base.display().to_string());
        }
        Format::Csv => {
            if report.tables.is_empty() {
                bail!("scenario produced no tables");
            }
            for table in &report.tables {
                let path = if table.label.is_empty() { base.to_path_buf() } else { labelled_path(base, &table.label) };
                write_file(&path, &render_csv(table, provenance))?;
                files.push(path.display().to_string());
            }
        }
    }
    Ok(files)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match &cli.command {
        Command::Spectrum(a) => (Mode::Spectrum, a),
        Command::Transfer(a) => (Mode::Transfer, a),
        Command::Sweep(a) => (Mode::Sweep, a),
        Command::Validate(a) => (Mode::Validate, a),
        Command::Dissipative(a) => (Mode::Dissipative, a),
    };
    match execute(mode, args) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).unwrap_or_default());
            ExitCode::SUCCESS
        }
        Err(f) => {
            let message = format!("{:#}", f.error);
            eprintln!("{}", json!({ "error": message, "kind": f.kind }));
            ExitCode::from(f.code)
        }
    }
}
