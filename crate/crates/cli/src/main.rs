use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use opvg_core::cli::commands::{parse_plane, parse_point, parse_quad};
use opvg_core::cli::{cmd_check, cmd_integrate, cmd_invariants, load_scene, CheckOptions, IntegrateTarget, Report};
use opvg_core::integrate::Quadrature;

#[derive(Parser)]
#[command(name = "opvg", version, about = "Operator-valued semi-Riemannian geometry checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the identity suite at seeded sample points.
    Check {
        scene: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Christoffel symbols, curvature and sectional curvatures at a point.
    Invariants {
        scene: PathBuf,
        /// Comma separated coordinates.
        #[arg(long)]
        point: String,
        /// Two directions: coordinate indices, coordinate names or vector field names.
        #[arg(long)]
        plane: Vec<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Integrate a form or function over the scene domain.
    Integrate {
        scene: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Gauss points per axis and subdivisions, `m,s`.
        #[arg(long)]
        quad: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    #[arg(long)]
    form: Option<String>,
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    stokes: Option<String>,
    /// `BETA,ALPHA`
    #[arg(long)]
    adjoint: Option<String>,
}

impl Target {
    fn resolve(self) -> anyhow::Result<IntegrateTarget> {
        Ok(match self {
            Target { form: Some(f), .. } => IntegrateTarget::Form(f),
            Target { function: Some(f), .. } => IntegrateTarget::Function(f),
            Target { stokes: Some(f), .. } => IntegrateTarget::Stokes(f),
            Target { adjoint: Some(pair), .. } => {
                let (beta, alpha) = parse_plane(&pair)?;
                IntegrateTarget::Adjoint { beta, alpha }
            }
            _ => anyhow::bail!("one of --form, --function, --stokes or --adjoint is required"),
        })
    }
}

fn emit(report: &Report, output: Option<PathBuf>) -> anyhow::Result<()> {
    let text = report.to_json();
    match output {
        Some(path) => std::fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let (report, output) = match cli.command {
        Command::Check { scene, samples, seed, output } => {
            let scene = load_scene(&scene)?;
            (cmd_check(&scene, &CheckOptions { samples, seed })?, output)
        }
        Command::Invariants { scene, point, plane, output } => {
            let scene = load_scene(&scene)?;
            let point = parse_point(&point)?;
            let planes = plane.iter().map(|p| parse_plane(p)).collect::<Result<Vec<_>, _>>()?;
            (cmd_invariants(&scene, &point, &planes)?, output)
        }
        Command::Integrate { scene, target, quad, output } => {
            let scene = load_scene(&scene)?;
            let quad = match quad {
                Some(q) => parse_quad(&q)?,
                None => Quadrature::default(),
            };
            (cmd_integrate(&scene, &target.resolve()?, &quad)?, output)
        }
    };
    emit(&report, output)?;
    Ok(report.exit)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
