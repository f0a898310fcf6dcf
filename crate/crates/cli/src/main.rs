use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use qkdloss::args::Cli;
use qkdloss::commands::USAGE_ERROR;

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { USAGE_ERROR } else { 0 });
        }
    };
    let exec = match qkdloss::dispatch(&cli, &argv[1..]).and_then(|exec| {
        qkdloss::persist(&exec)?;
        Ok(exec)
    }) {
        Ok(exec) => exec,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(USAGE_ERROR);
        }
    };
    let mut out = std::io::stdout().lock();
    if out
        .write_all(&exec.outcome.stdout)
        .and_then(|_| out.flush())
        .is_err()
    {
        return ExitCode::from(USAGE_ERROR);
    }
    eprint!("{}", exec.outcome.summary);
    ExitCode::from(exec.outcome.verdict.code())
}
