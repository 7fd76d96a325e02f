//! Command-line front end: flags and config files become an
//! [`ExperimentConfig`], which runs on a rayon pool of `--threads` workers.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage or config error.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use lerchlab::experiment::{
    parse_config_text, run as run_experiment, ExperimentConfig, ExperimentError, KeyDefault, COMMANDS,
};
use lerchlab::Execution;

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub fn cli() -> Command {
    let mut app = Command::new("lerchlab")
        .about("Joint universality experiments for Lerch zeta functions")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true);
    for spec in COMMANDS {
        let mut sub = Command::new(spec.name)
            .about(spec.about)
            .arg(
                Arg::new("config")
                    .long("config")
                    .value_name("FILE")
                    .value_parser(value_parser!(PathBuf))
                    .help("key = value file, or a previous output; flags override it"),
            )
            .arg(
                Arg::new("output")
                    .long("output")
                    .short('o')
                    .value_name("FILE")
                    .value_parser(value_parser!(PathBuf))
                    .help("write the result here instead of stdout"),
            )
            .arg(
                Arg::new("threads")
                    .long("threads")
                    .value_name("N")
                    .value_parser(value_parser!(usize))
                    .help("worker threads [default: available cores]"),
            );
        for key in spec.keys {
            let help = match key.default {
                KeyDefault::Value(d) => format!("{} [default: {d}]", key.help),
                KeyDefault::Required => format!("{} (required)", key.help),
                KeyDefault::Unset => key.help.to_string(),
            };
            let mut arg = Arg::new(key.name).long(key.name).help(help).action(ArgAction::Set);
            if key.switch {
                arg = arg.value_name("BOOL").num_args(0..=1).default_missing_value("true");
            } else {
                arg = arg.value_name("VALUE").allow_hyphen_values(true);
            }
            sub = sub.arg(arg);
        }
        app = app.subcommand(sub);
    }
    app
}

fn flag_entries(name: &str, m: &ArgMatches) -> Vec<(String, String)> {
    let spec = lerchlab::experiment::command(name).expect("registered command");
    spec.keys
        .iter()
        .filter(|k| m.value_source(k.name) == Some(ValueSource::CommandLine))
        .filter_map(|k| m.get_one::<String>(k.name).map(|v| (k.name.to_string(), v.clone())))
        .collect()
}

fn execute(name: &str, m: &ArgMatches) -> Result<(), ExperimentError> {
    let mut sources = Vec::new();
    if let Some(path) = m.get_one::<PathBuf>("config") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
        sources.push(parse_config_text(&text)?);
    }
    sources.push(flag_entries(name, m));
    let cfg = ExperimentConfig::from_sources(name, &sources)?;

    let threads = match m.get_one::<usize>("threads") {
        Some(0) => return Err(ExperimentError::Config("threads must be >= 1".into())),
        Some(&n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| ExperimentError::Compute(format!("cannot start thread pool: {e}")))?;
    let out = pool.install(|| run_experiment(&cfg, Execution::Parallel))?;

    match m.get_one::<PathBuf>("output") {
        Some(path) => std::fs::write(path, &out.body)
            .map_err(|e| ExperimentError::Compute(format!("cannot write {}: {e}", path.display())))?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(out.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| ExperimentError::Compute(format!("cannot write output: {e}")))?;
        }
    }
    eprintln!("{}", out.summary);
    Ok(())
}

/// Parse `args` (program name first) and run; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let Some((name, sub)) = matches.subcommand() else {
        return EXIT_USAGE;
    };
    match execute(name, sub) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("lerchlab {name}: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
