//! The `txguard` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 malformed or unusable input data,
//! 3 runtime failure (I/O, network).

pub mod args;
mod commands;
pub mod config;

use std::ffi::OsString;

use args::Command;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
    Clap(clap::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) => 1,
        }
    }
}

impl From<clap::Error> for CliError {
    fn from(e: clap::Error) -> Self {
        CliError::Clap(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Runtime(m) => f.write_str(m),
            CliError::Clap(e) => write!(f, "{e}"),
        }
    }
}

fn dispatch(cli: &args::Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Gen(a) => commands::gen(cli.seed, a),
        Command::Train(a) => commands::train(cli.seed, a),
        Command::Eval(a) => commands::eval(a),
        Command::Stream(a) => commands::stream(a),
        Command::Decode(a) => commands::decode(a),
        Command::Encode(a) => commands::encode(a),
        Command::Fetch(a) => commands::fetch(a),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let result = config::parse(argv).and_then(|cli| {
        if cli.print_config {
            print!("{}", config::effective(&cli));
            Ok(())
        } else {
            dispatch(&cli)
        }
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
