use clap::Parser;

fn main() {
    std::process::exit(rothe_cli::run(rothe_cli::Cli::parse()));
}
