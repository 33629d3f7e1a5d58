use clap::Parser;

fn main() {
    let args = crossdiff::cli::Args::parse();
    std::process::exit(crossdiff::cli::execute(&args));
}
