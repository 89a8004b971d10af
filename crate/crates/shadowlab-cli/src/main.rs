use clap::Parser;

fn main() {
    let cli = shadowlab_cli::Cli::parse();
    std::process::exit(shadowlab_cli::execute(cli));
}
