use clap::Parser;
use rdwsim::{execute, Cli};

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            // bad flags are configuration errors
            std::process::exit(if usage { 1 } else { 0 });
        }
    };
    if let Err(e) = execute(&cli) {
        eprintln!("rdwsim: {e}");
        std::process::exit(e.exit_code());
    }
}
