use clap::Parser;
use daa_cli::commands::{self, Cli};

fn main() -> anyhow::Result<()> {
    commands::run(Cli::parse())
}
