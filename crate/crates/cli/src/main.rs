mod args;
mod commands;

use clap::Parser;

use args::{Cli, Command};

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Gen(a) => commands::gen(&cli, a),
        Command::Eval(a) => commands::eval(&cli, a),
        Command::Verify(a) => commands::verify(&cli, a),
        Command::Sweep(a) => commands::sweep(&cli, a),
        Command::Bounds(a) => commands::bounds_cmd(&cli, a),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
