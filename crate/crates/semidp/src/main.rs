use clap::Parser;

fn main() {
    let cli = semidp::cli::Cli::parse();
    if let Err(e) = semidp::cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
