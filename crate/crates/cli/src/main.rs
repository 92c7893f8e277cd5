use clap::Parser;

fn main() {
    let cli = sephia_cli::Cli::parse();
    if let Err(e) = sephia_cli::run(&cli.command) {
        eprintln!("sephia: {e}");
        std::process::exit(e.exit_code());
    }
}
