use clap::Parser;

use liouville::cli::{self, Cli};

fn main() {
    // clap's own usage-error exit code is 2, which this tool reserves for
    // numeric failures; remap argument errors to the config exit code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { cli::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(cli::run(cli));
}
