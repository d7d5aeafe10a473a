use clap::Parser;

fn main() {
    let cli = dkstp_cs::commands::Cli::parse();
    if let Err(e) = dkstp_cs::commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
