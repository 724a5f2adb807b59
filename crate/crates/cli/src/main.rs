use clap::Parser;
use ssd_cli::{run, Cli};

fn main() {
    let (out, code) = run(Cli::parse());
    match out {
        Ok(text) => print!("{text}"),
        Err(msg) => eprintln!("{msg}"),
    }
    std::process::exit(code);
}
