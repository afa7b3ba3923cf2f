// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]
mod args;
mod config;
mod data;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;
use pointpe::{Error, ErrorClass};

use args::Cli;

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Config => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out_dir = output::resolve_out_dir(cli.out_dir);
    let result = cli.command.into_config().and_then(|cfg| run::execute(&cfg, &out_dir));
    match result {
        Ok(files) => {
            let is_cloud = |f: &std::path::PathBuf| f.extension().is_some_and(|e| e == "xyz");
            for f in files.iter().filter(|f| !is_cloud(f)) {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
