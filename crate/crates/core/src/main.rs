use clap::Parser;

fn main() {
    let cli = ssls::cli::Cli::parse();
    if let Err(e) = ssls::cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
