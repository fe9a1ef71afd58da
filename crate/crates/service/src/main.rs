use clap::Parser;
use qreward_service::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("qreward: {e}");
        std::process::exit(e.exit_code());
    }
}
