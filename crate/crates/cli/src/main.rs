mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::{CmdError, CmdResult, Context, Status};
use config::{ExperimentConfig, ModelKind};
use output::Output;

#[derive(Parser)]
#[command(name = "horolab", version = output::VERSION, about = "Numerical experiments on time-changed horocycle flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (default: the configured `out`, else ./horolab-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Cocycle, u_{0,0} and operator identities.
    VerifyIdentities,
    /// Expansion rate from Marcus' limit.
    EstimateLambda,
    /// Correlation decay along the φ flow.
    Mixing,
    /// Spectral density and atom scan.
    Spectrum,
    /// Mourre certificate along a t ladder.
    Mourre,
    /// Every experiment that applies to the model.
    All,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::VerifyIdentities => "verify-identities",
            Command::EstimateLambda => "estimate-lambda",
            Command::Mixing => "mixing",
            Command::Spectrum => "spectrum",
            Command::Mourre => "mourre",
            Command::All => "all",
        }
    }

    fn run(self, ctx: &Context) -> CmdResult {
        match self {
            Command::VerifyIdentities => commands::verify_identities(ctx),
            Command::EstimateLambda => commands::estimate_lambda_cmd(ctx),
            Command::Mixing => commands::mixing(ctx),
            Command::Spectrum => commands::spectrum(ctx),
            Command::Mourre => commands::mourre(ctx),
            Command::All => unreachable!("expanded by the caller"),
        }
    }
}

#[derive(Serialize)]
struct Timing {
    command: &'static str,
    status: Option<Status>,
    seconds: f64,
}

#[derive(Serialize)]
struct Manifest {
    threads: usize,
    total_seconds: f64,
    commands: Vec<Timing>,
}

fn fail(e: &CmdError) -> ExitCode {
    eprintln!("horolab: {e}");
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
    .map_err(CmdError::Config);
    if let Ok(c) = &mut cfg {
        if let Some(seed) = cli.seed {
            c.seed = seed;
        }
        if let Some(out) = &cli.out {
            c.out = Some(out.clone());
        }
    }
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            return fail(&CmdError::Refused("--threads must be positive".into()));
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("horolab: could not size the thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from("horolab-out"));
    let out = match Output::create(&dir, cfg.hash(), cfg.seed) {
        Ok(o) => o,
        Err(e) => return fail(&CmdError::Io(e)),
    };
    if let Err(e) = out.text("effective_config.toml", &cfg.canonical()) {
        return fail(&CmdError::Io(e));
    }
    let ctx = Context { cfg, out };

    let plan: Vec<Command> = if cli.command == Command::All {
        let mut v = vec![Command::VerifyIdentities, Command::EstimateLambda];
        if ctx.cfg.model == ModelKind::Bolza {
            v.extend([Command::Mixing, Command::Spectrum, Command::Mourre]);
        } else {
            println!("[SKIP] mixing, spectrum, mourre: the suspension W^u flow is not minimal");
        }
        v
    } else {
        vec![cli.command]
    };

    let started = Instant::now();
    let mut timings = Vec::new();
    let mut code = 0u8;
    for cmd in plan {
        let t0 = Instant::now();
        let result = cmd.run(&ctx);
        let status = match result {
            Ok(s) => {
                if s == Status::Fail {
                    code = code.max(1);
                }
                Some(s)
            }
            Err(e) => {
                eprintln!("horolab {}: {e}", cmd.name());
                code = code.max(e.exit_code());
                None
            }
        };
        timings.push(Timing { command: cmd.name(), status, seconds: t0.elapsed().as_secs_f64() });
    }
    let manifest = Manifest {
        threads: rayon::current_num_threads(),
        total_seconds: started.elapsed().as_secs_f64(),
        commands: timings,
    };
    if let Err(e) = ctx.out.json("run_manifest.json", &manifest) {
        return fail(&CmdError::Io(e));
    }
    println!("outputs in {}", ctx.out.dir().display());
    ExitCode::from(code)
}
