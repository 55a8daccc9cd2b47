use clap::Parser;

use gapfilter::cli::{execute, Args};

fn main() {
    let args = Args::parse();
    std::process::exit(execute(&args).code());
}
