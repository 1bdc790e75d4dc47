use clap::Parser;
use hebart_cli::args::Cli;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("HEBART_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = hebart_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
