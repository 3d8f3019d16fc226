use clap::Parser;

use earlystop_cli::args::{Cli, Command};
use earlystop_cli::commands;

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Path(args) => commands::cmd_path(args),
        Command::CompareRules(args) => commands::cmd_compare_rules(args),
        Command::Rate(args) => commands::cmd_rate(args),
        Command::Krr(args) => commands::cmd_krr(args),
        Command::CriticalRadius(args) => commands::cmd_critical_radius(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
