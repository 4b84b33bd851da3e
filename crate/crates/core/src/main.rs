use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use wavetail::cli::{error_line, run_command, Command};

#[derive(Parser)]
#[command(name = "wavetail", version, about = "Late-time tails of small-data semilinear waves")]
struct Args {
    command: Cmd,
    #[arg(long)]
    config: PathBuf,
    /// Override `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cmd {
    Solve,
    Predict,
    Compare,
    Scaling,
    Convergence,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Solve => Command::Solve,
            Cmd::Predict => Command::Predict,
            Cmd::Compare => Command::Compare,
            Cmd::Scaling => Command::Scaling,
            Cmd::Convergence => Command::Convergence,
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run_command(args.command.into(), &args.config, args.out.as_deref()) {
        Ok(manifest) => {
            let dir = manifest.files.len();
            println!("ok: {} files ({:.2} s)", dir, manifest.runtime_seconds);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_line(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
