use clap::Parser;

fn main() {
    let cli = rgsla_cli::Cli::parse();
    if let Err(e) = rgsla_cli::run(cli) {
        eprintln!("rgsla: {e}");
        std::process::exit(e.exit_code());
    }
}
