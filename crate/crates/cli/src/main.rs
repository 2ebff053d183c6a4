use clap::Parser;

use headpos_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary.trim_end());
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
