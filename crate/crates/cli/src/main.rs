//! `oldroyd2d` command-line driver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime failure
//! (blow-up, loss of positive definiteness, I/O), 3 verification failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oldroyd2d::diagnostics::write_csv;
use oldroyd2d::runner::write_state;
use oldroyd2d::{
    parse_config, run_suite, simulate_config, sweep, Error, Knob, RunConfig, Suite, VerifyOptions,
};

#[derive(Parser)]
#[command(name = "oldroyd2d", version, about = "Compressible Oldroyd-B solver with energy and closure diagnostics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write the diagnostic time series.
    Run {
        config: PathBuf,
    },
    /// Run a verification suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the number of random matrix samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Rerun a configuration for a decreasing list of knob values.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        knob: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Report path; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_VERIFY: u8 = 3;

fn fail(code: u8, err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn runtime_code(err: &Error) -> u8 {
    match err.root() {
        Error::Config { .. } | Error::InvalidParameter(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn load_config(path: &Path) -> Result<RunConfig, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn cmd_run(path: &Path) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let report = match simulate_config(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(runtime_code(&e), &e),
    };
    let written = (|| -> Result<(), Error> {
        match &cfg.output {
            Some(p) => {
                let mut w = create(p)?;
                write_csv(&mut w, &report.rows)?;
                w.flush()?;
            }
            None => write_csv(&mut io::stdout().lock(), &report.rows)?,
        }
        if let Some(p) = &cfg.snapshot {
            let mut w = create(p)?;
            write_state(&mut w, &report.outcome.state)?;
            w.flush()?;
        }
        Ok(())
    })();
    if let Err(e) = written {
        return fail(EXIT_RUNTIME, &e);
    }
    let o = &report.outcome;
    if o.floor_events > 0 {
        eprintln!(
            "warning: density floor active in {} cell-steps during velocity recovery",
            o.floor_events
        );
    }
    if report.stress.growth_flag {
        eprintln!(
            "warning: stress L2 norm grew by a factor {:.3} within one time unit",
            report.stress.max_unit_time_growth
        );
    }
    eprintln!(
        "completed {} steps to t = {}; max energy residual {:.3e}; mass drift {:.3e}; eta drift {:.3e}",
        o.steps, o.state.t, report.energy_residual, report.mass_drift, report.eta_drift
    );
    ExitCode::SUCCESS
}

fn cmd_verify(suite: &str, seed: u64, samples: Option<usize>) -> ExitCode {
    let suites: Vec<Suite> = if suite == "all" {
        Suite::ALL.to_vec()
    } else {
        match suite.parse() {
            Ok(s) => vec![s],
            Err(e) => return fail(EXIT_CONFIG, &e),
        }
    };
    let mut opts = VerifyOptions::default();
    if let Some(n) = samples {
        opts.matrix_samples = n;
    }
    let mut out = io::stdout().lock();
    let mut failure = None;
    for s in suites {
        let report = match run_suite(s, seed, &opts) {
            Ok(r) => r,
            Err(e) => return fail(runtime_code(&e), &e),
        };
        let _ = write!(out, "{}", report.render());
        if failure.is_none() {
            if let Some((check, ce)) = report.first_counterexample() {
                failure = Some(format!("{}/{check}: {ce}", report.suite));
            }
        }
    }
    let _ = out.flush();
    match failure {
        Some(ce) => {
            eprintln!("verification failed; first counterexample {ce}");
            ExitCode::from(EXIT_VERIFY)
        }
        None => ExitCode::SUCCESS,
    }
}

fn cmd_sweep(path: &Path, knob: &str, values: &[f64], output: Option<&Path>) -> ExitCode {
    let cfg = match load_config(path) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let knob: Knob = match knob.parse() {
        Ok(k) => k,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let report = match sweep(&cfg, knob, values) {
        Ok(r) => r,
        Err(e) => return fail(runtime_code(&e), &e),
    };
    let written = match output {
        Some(p) => create(p).and_then(|mut w| {
            report.write_csv(&mut w)?;
            w.flush().map_err(Error::from)
        }),
        None => report.write_csv(&mut io::stdout().lock()),
    };
    if let Err(e) = written {
        return fail(EXIT_RUNTIME, &e);
    }
    if !report.cauchy_decreasing() {
        eprintln!("warning: successive differences are not strictly decreasing");
    }
    if !report.eta_bound_holds() {
        eprintln!("warning: regularized number-density bound violated");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which would collide with runtime failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Verify {
            suite,
            seed,
            samples,
        } => cmd_verify(&suite, seed, samples),
        Command::Sweep {
            config,
            knob,
            values,
            output,
        } => cmd_sweep(&config, &knob, &values, output.as_deref()),
    }
}
