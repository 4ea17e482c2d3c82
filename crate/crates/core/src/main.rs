use std::process::ExitCode;

use clap::Parser;
use mimo_capacity::cli::{exit_code, run_command, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run_command(&cli.command) {
        Ok(manifest) => {
            for w in &manifest.warnings {
                eprintln!("warning: {w}");
            }
            for f in &manifest.outputs {
                println!("wrote {}", cli.command.args().out.join(f).display());
            }
            if let Some(t) = &manifest.table1 {
                println!("best-fit SNR {} dB (objective {:.4})", t.best_snr_db, t.objective);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
