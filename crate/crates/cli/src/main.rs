use clap::error::ErrorKind;
use clap::Parser;
use g2flow_cli::{commands, Cli, ExitCode};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::Pass,
                _ => ExitCode::BadConfig,
            };
            let _ = e.print();
            std::process::exit(code.code());
        }
    };
    let code = commands::dispatch(cli.command, &cli.common).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    std::process::exit(code.code());
}
