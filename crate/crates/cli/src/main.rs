mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use config::RunConfig;
use output::Outputs;

/// Interior transmission eigenvalues: assembly, spectra, trace diagnostics
/// and zero counting.
#[derive(Debug, Parser)]
#[command(name = "te-spect", version)]
struct Cli {
    /// TOML run configuration; every key is optional.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override one config key, e.g. `--set basis.n=48`.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Write G, A, B, C and problem metadata.
    Assemble,
    /// Transmission eigenvalues from the companion operator.
    Solve,
    /// Traces, Schatten norms and trace identities.
    Trace,
    /// Sampled numerical range of the companion operator.
    Range,
    /// Zero counting through the Fredholm determinant.
    Count,
    /// Trace functional along a line of potentials.
    Scan,
    /// Closed-form roots on the interval.
    Oracle1d,
    /// Closed-form roots on the unit disk.
    OracleDisk,
    /// First real eigenvalue under basis refinement.
    Convergence,
    /// Check the scalar reference pencil.
    Selftest,
}

enum Failure {
    Usage(String),
    Domain(te_spect::Error),
    Io(String),
}

fn error_record(code: &str, message: &str) -> String {
    json!({ "error": { "code": code, "message": message } }).to_string()
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            config::parse(&text).map_err(Failure::Usage)?
        }
        None => RunConfig::default(),
    };
    let mut cfg = config::apply_overrides(base, &cli.overrides).map_err(Failure::Usage)?;
    if let Some(out) = &cli.out {
        cfg.out = out.display().to_string();
    }
    Ok(cfg)
}

fn configure_threads() {
    let Ok(raw) = std::env::var("TE_SPECT_THREADS") else {
        return;
    };
    match raw.trim().parse::<usize>() {
        Ok(n) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
                log::warn!("thread pool already configured: {e}");
            }
        }
        Err(_) => log::warn!("ignoring TE_SPECT_THREADS={raw}"),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let cfg = load_config(cli)?;
    let hash = config::hash(&cfg);
    let mut out = Outputs::new(&hash);
    let mut ok = true;
    let result = match cli.command {
        Command::Assemble => commands::assemble(&cfg, &mut out),
        Command::Solve => commands::solve(&cfg, &mut out),
        Command::Trace => commands::trace(&cfg, &mut out),
        Command::Range => commands::range(&cfg, &mut out),
        Command::Count => commands::count(&cfg, &mut out),
        Command::Scan => commands::scan(&cfg, &mut out),
        Command::Oracle1d => commands::oracle1d(&cfg, &mut out),
        Command::OracleDisk => commands::oracle_disk_cmd(&cfg, &mut out),
        Command::Convergence => commands::convergence(&cfg, &mut out),
        Command::Selftest => commands::selftest(&mut out).map(|pass| ok = pass),
    };
    result.map_err(Failure::Domain)?;
    out.resolved_config(&config::render(&cfg));
    let dir = PathBuf::from(&cfg.out);
    out.write(&dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    for name in out.names() {
        log::info!("wrote {}", dir.join(name).display());
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    configure_threads();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{}", error_record("selftest_failed", "one or more reference checks failed"));
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("{}", error_record("usage", &msg));
            ExitCode::from(2)
        }
        Err(Failure::Domain(e)) => {
            eprintln!("{}", error_record(e.code(), &e.to_string()));
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("{}", error_record("io", &msg));
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_is_green() {
        for c in commands::selftest_checks().unwrap() {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn convergence_of_repeated_n_is_flat() {
        let mut cfg = RunConfig::default();
        cfg.convergence.n_list = vec![16, 16, 16];
        let t = commands::convergence_table(&cfg).unwrap();
        assert_eq!(t.rel_change, vec![0.0, 0.0]);
        assert!(t.cauchy);
    }

    #[test]
    fn convergence_rejects_descending_lists() {
        let mut cfg = RunConfig::default();
        cfg.convergence.n_list = vec![24, 16];
        assert!(matches!(commands::convergence_table(&cfg), Err(te_spect::Error::InvalidArgument(_))));
    }

    #[test]
    fn interval_convergence_approaches_the_oracle() {
        let cfg = RunConfig::default();
        let t = commands::convergence_table(&cfg).unwrap();
        let target = 4.0 * std::f64::consts::PI.powi(2);
        let errs: Vec<f64> = t.first_real.iter().map(|l| (l - target).abs()).collect();
        assert!(errs.last().unwrap() / target < 1e-4, "{t:?}");
        assert!(t.rel_change.windows(2).all(|w| w[1] <= w[0]), "{t:?}");
    }
}
