use clap::error::ErrorKind;
use clap::Parser;

use qshor::cli::{self, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(cli::EXIT_OK);
            }
            eprint!("{e}");
            std::process::exit(cli::EXIT_ERROR);
        }
    };
    let code = cli::run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(code);
}
