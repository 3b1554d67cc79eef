use clap::Parser;

fn main() {
    let cli = cce_cli::Cli::parse();
    if let Err(err) = cce_cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(cce_cli::exit_code(&err));
    }
}
