use clap::Parser;

use linklogic::cli::{exit_code, init_logging, run, Cli, EXIT_CONFIG};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    init_logging();
    if let Err(e) = run(cli) {
        log::error!("{e}");
        std::process::exit(exit_code(&e));
    }
}
