use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robust_xva_cli::{bundle, pipeline};

#[derive(Parser)]
#[command(
    name = "rxva",
    version,
    about = "Worst-case XVA under Wasserstein uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline from a TOML config or a previous run's manifest.json.
    Run {
        config: PathBuf,
        /// Output directory; replaced atomically.
        #[arg(long, default_value = "rxva-out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, out } => {
            let result = bundle::load_config(&config)
                .and_then(|cfg| pipeline::run(&cfg))
                .and_then(|res| bundle::write_bundle(&res, &out).map(|_| res));
            match result {
                Ok(res) => {
                    let mut so = std::io::stdout().lock();
                    let _ = writeln!(so, "{}", bundle::summary_line(&res));
                    let _ = writeln!(so, "wrote {}", out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("rxva: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
