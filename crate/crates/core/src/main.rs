use clap::Parser;

fn main() {
    let cli = weilzeta::cli::Cli::parse();
    std::process::exit(weilzeta::cli::run(cli));
}
