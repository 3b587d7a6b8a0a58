use std::io::Read;
use std::process::ExitCode;

use clap::Parser;
use log::{LevelFilter, Log, Metadata, Record};
use qucap::{run, write_rendered, CliError, Mode, RunConfig};

/// Simulate and verify a driven two-level quantum capacitor.
#[derive(Parser, Debug)]
#[command(name = "qucap", version)]
struct Cli {
    /// Run mode.
    mode: Mode,
    /// JSON config file, or `-` for standard input.
    #[arg(long)]
    config: String,
    /// Output file, or `-` for standard output. Overrides the config's `output`.
    #[arg(long)]
    output: Option<String>,
    /// Log progress to standard error.
    #[arg(short, long)]
    verbose: bool,
}

struct StderrLogger;

impl Log for StderrLogger {
    fn enabled(&self, metadata: &Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &Record) {
        if self.enabled(record.metadata()) {
            eprintln!("qucap: {}: {}", record.level().as_str().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn read_config(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read config {path}: {e}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(if cli.verbose { LevelFilter::Info } else { LevelFilter::Warn });

    let result = read_config(&cli.config)
        .and_then(|text| RunConfig::from_json(&text, cli.mode, cli.output.as_deref()))
        .and_then(|config| {
            let rendered = run(&config)?;
            write_rendered(&config, &rendered)?;
            Ok(rendered)
        });
    match result {
        Ok(rendered) => {
            if let Some(summary) = &rendered.summary {
                eprintln!("{summary}");
            }
            ExitCode::from(rendered.outcome.exit_code())
        }
        Err(e) => {
            eprintln!("qucap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
