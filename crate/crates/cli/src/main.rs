use clap::Parser;

fn main() {
    let cli = pmn_cli::Cli::parse();
    if let Err(e) = pmn_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
