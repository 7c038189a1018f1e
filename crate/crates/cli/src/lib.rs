//! Command-line front end.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod units;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use cli::{Cli, Command};
use commands::Output;

fn parse(argv: &[OsString]) -> Result<Cli, i32> {
    Cli::try_parse_from(argv).map_err(|e| {
        let _ = e.print();
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
            _ => 2,
        }
    })
}

/// Find `--config FILE` and the subcommand token without a full parse, so
/// the overlay can supply required flags.
fn prescan(argv: &[OsString]) -> Option<(PathBuf, String)> {
    let names: Vec<String> = Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
    let (mut config, mut sub) = (None, None);
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = it.next().map(PathBuf::from);
        } else if let Some(v) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if s == "--threads" {
            it.next();
        } else if sub.is_none() && names.iter().any(|n| *n == s) {
            sub = Some(s.into_owned());
        }
    }
    Some((config?, sub?))
}

/// Parse `argv` (program name first), run the command and return the exit
/// code: 0 on success, 2 for usage and validation errors, 1 otherwise.
pub fn run(argv: Vec<OsString>) -> i32 {
    let argv = match prescan(&argv) {
        Some((path, sub)) => match config::splice(&argv, &sub, &path) {
            Ok(spliced) => spliced,
            Err(e) => {
                eprintln!("error: {e:#}");
                return error::exit_code(&e);
            }
        },
        None => argv,
    };
    let cli = match parse(&argv) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return 2;
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already configured: {e}");
        }
    }
    let out = Output { stamp: cli.stamp };
    let result = match &cli.command {
        Command::Beam(a) => commands::beam(a),
        Command::Propagate(a) => commands::propagate_cmd(a),
        Command::Screen(a) => commands::screen(a, &out),
        Command::Dataset(a) => commands::dataset(a),
        Command::Train(a) => commands::train(a, &out),
        Command::Eval(a) => commands::eval(a, &out),
        Command::Xsection(a) => commands::xsection(a, &out),
        Command::Verify(a) => {
            if verify::run(a.suite) {
                Ok(())
            } else {
                eprintln!("verify: some checks failed");
                return 1;
            }
        }
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            error::exit_code(&e)
        }
    }
}
