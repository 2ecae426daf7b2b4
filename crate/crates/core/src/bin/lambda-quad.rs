use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lambda_quad::catalog::{self, Problem};
use lambda_quad::check::Sampling;
use lambda_quad::numverify::integrate_ode2;
use lambda_quad::pipeline::{run_pipeline, verify_trajectories, Report, Route, RunOptions};
use lambda_quad::sample::Point;
use lambda_quad::spec::ProblemSpec;

#[derive(Parser)]
#[command(
    name = "lambda-quad",
    version,
    about = "Quadrature certificates for u'' = phi(x, u, u') from two lambda-symmetries"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full procedure on a spec file or catalog problem.
    Run {
        /// Path to a JSON spec, or a catalog name.
        spec: String,
        #[command(flatten)]
        opts: CommonOpts,
        #[arg(long, value_enum, default_value = "both")]
        route: Route,
    },
    /// Integrate initial conditions and check first integrals along them.
    Verify {
        spec: String,
        /// Initial condition `x,u,ux`; repeatable.
        #[arg(long = "ic", value_parser = parse_ic, allow_hyphen_values = true)]
        ics: Vec<Point>,
        /// End of the integration interval.
        #[arg(long, default_value_t = 1.0)]
        x_end: f64,
        /// Write each trajectory as CSV into this directory.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Inspect the built-in catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Print a catalog problem as a JSON spec.
    Export {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
}

#[derive(Args)]
struct CommonOpts {
    /// Master relative tolerance for sampled identities.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = Sampling::default().seed)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl CommonOpts {
    fn options(&self, route: Route) -> RunOptions {
        RunOptions {
            sampling: Sampling {
                samples: self.samples,
                tol: self.tol,
                seed: self.seed,
            },
            route,
            ..RunOptions::default()
        }
    }
}

fn parse_ic(s: &str) -> Result<Point, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, u, ux] => Ok(Point::new(x, u, ux)),
        _ => Err(format!("expected `x,u,ux`, got `{s}`")),
    }
}

fn load(spec: &str) -> Result<Problem, String> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| format!("{spec}: {e}"))?;
        let parsed = ProblemSpec::from_json(&text).map_err(|e| format!("{spec}: {e}"))?;
        Problem::from_spec(parsed).map_err(|e| format!("{spec}: {e}"))
    } else {
        catalog::get_problem(spec).map_err(|e| e.to_string())
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).map_err(|e| format!("{}: {e}", p.display())),
        None => writeln!(io::stdout().lock(), "{text}").map_err(|e| e.to_string()),
    }
}

fn finish(report: &Report, out: Option<&Path>) -> Result<ExitCode, String> {
    emit(&report.to_json(), out)?;
    if let Some(e) = &report.error {
        eprintln!("error: {e}");
    }
    for s in &report.sections {
        for c in s.checks.iter().filter(|c| !c.passed) {
            eprintln!(
                "FAIL [{}] {}: residual {:e} > {:e}",
                s.name, c.name, c.residual, c.tolerance
            );
        }
    }
    Ok(if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn write_csvs(p: &Problem, ics: &[Point], x_end: f64, dir: &Path, tol: f64) -> Result<(), String> {
    fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    for (k, ic) in ics.iter().enumerate() {
        let Ok(traj) = integrate_ode2(&p.phi, ic.x, ic.u, ic.ux, x_end, tol) else {
            continue;
        };
        let path = dir.join(format!("trajectory_{k}.csv"));
        let file = fs::File::create(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        traj.write_csv(io::BufWriter::new(file))
            .map_err(|e| format!("{}: {e}", path.display()))?;
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Run { spec, opts, route } => {
            let p = load(&spec)?;
            finish(&run_pipeline(&p, &opts.options(route)), opts.out.as_deref())
        }
        Command::Verify {
            spec,
            ics,
            x_end,
            csv,
            opts,
        } => {
            let p = load(&spec)?;
            let o = opts.options(Route::Both);
            let runs: Vec<(Point, f64)> = ics.iter().map(|ic| (*ic, x_end)).collect();
            let report = verify_trajectories(&p, &runs, &o);
            if let Some(dir) = csv {
                write_csvs(&p, &ics, x_end, &dir, o.integrate_tol)?;
            }
            finish(&report, opts.out.as_deref())
        }
        Command::Catalog {
            action: CatalogAction::List,
        } => {
            let mut out = io::stdout().lock();
            for (name, about) in catalog::list() {
                writeln!(out, "{name:<14} {about}").map_err(|e| e.to_string())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Export { name, out } => {
            let spec = catalog::get_spec(&name).map_err(|e| e.to_string())?;
            emit(&spec.to_json(), out.as_deref())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match main_inner(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
