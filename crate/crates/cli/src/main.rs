mod commands;
mod report;
mod suites;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use report::{all_pass, Report};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use suites::{par_map, run_suite, SuiteOptions, SUITES};

/// Projective structures, Epstein surfaces and holonomy in hyperbolic 3-space.
#[derive(Parser, Debug)]
#[command(name = "projlab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Export the Epstein–Schwarz surface of a differential as a PLY mesh.
    Surface {
        #[arg(long)]
        diff: PathBuf,
        /// `rect:x0:x1:y0:y1:n`, `annulus:r0:r1:n` or `disk:r0:r1:n`.
        #[arg(long, default_value = "annulus:4:12:200")]
        grid: String,
        /// `ball` or `halfspace`.
        #[arg(long, default_value = "ball")]
        model: String,
        #[arg(long)]
        out: PathBuf,
        /// Minimum flat distance from the zeros for kept vertices.
        #[arg(long, default_value_t = 0.0)]
        standoff: f64,
        /// Keep vertices arbitrarily close to the zeros.
        #[arg(long)]
        bubble: bool,
        /// Record the contact defect at every vertex.
        #[arg(long)]
        certify: bool,
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// `triangle` (q = z only) or `bubble`.
        #[arg(long)]
        figure: Option<String>,
        /// Hexagon `a:b:n` for the triangle figure.
        #[arg(long, default_value = "6:30:60")]
        hexagon: String,
        /// Radii `r0:r1:n` for the bubble figure.
        #[arg(long, default_value = "0.01:0.1:6")]
        bubble_radii: String,
        /// CSV of the triangle boundary curves.
        #[arg(long)]
        curves: Option<PathBuf>,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Trace leaves of the foliation at a given angle to SVG or CSV.
    Trajectories {
        #[arg(long)]
        diff: PathBuf,
        /// Leaves along which `e^{-2i·angle} q dz²` is positive; 0 is horizontal.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        angle: f64,
        /// Seed grid is `seeds × seeds`.
        #[arg(long, default_value_t = 12)]
        seeds: usize,
        /// Box `x0:x1:y0:y1`.
        #[arg(long, default_value = "-3:3:-3:3", allow_hyphen_values = true)]
        bounds: String,
        /// Flat length traced each way from a seed.
        #[arg(long, default_value_t = 6.0)]
        length: f64,
        #[arg(long, default_value_t = 0.02)]
        spacing: f64,
        /// Seeds closer than this to a drawn leaf are skipped; half a grid cell by default.
        #[arg(long)]
        prune: Option<f64>,
        /// Trace the corrected differential instead of q.
        #[arg(long)]
        corrected: bool,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// `.svg` or `.csv`.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Holonomy of a loop, by ODE monodromy or from the osculating Möbius maps.
    Holonomy {
        #[arg(long)]
        diff: PathBuf,
        #[arg(long, default_value = "ode", value_parser = ["ode", "darboux"])]
        method: String,
        /// Path file for the ode method.
        #[arg(long = "loop")]
        lp: Option<PathBuf>,
        /// Real entries `a,b,c,d` of γ for the darboux method.
        #[arg(long, allow_hyphen_values = true)]
        gamma: Option<String>,
        /// Base point `x,y` in the upper half-plane for the darboux method.
        #[arg(long, default_value = "0,1", allow_hyphen_values = true)]
        base: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Flat geodesic between two points, or the closed geodesic in a class.
    Geodesic {
        #[arg(long)]
        surface: PathBuf,
        /// `p:x,y`.
        #[arg(long, allow_hyphen_values = true)]
        from: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        to: Option<String>,
        /// Edge word `p:e1.e2...`.
        #[arg(long)]
        class: Option<String>,
        #[arg(long, default_value_t = 16)]
        max_depth: usize,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Cylinders of closed geodesics in evenly spaced directions.
    Cylinders {
        #[arg(long)]
        surface: PathBuf,
        #[arg(long, default_value_t = 8)]
        directions: usize,
        #[arg(long, default_value_t = 10.0)]
        max_circumference: f64,
        #[arg(long, default_value_t = 1e-9)]
        return_tol: f64,
        #[command(flatten)]
        report: ReportOut,
    },
    /// Run one verification suite.
    Verify {
        #[arg(value_parser = SUITES)]
        suite: String,
        #[command(flatten)]
        opts: SuiteArgs,
    },
    /// Run every suite and emit one aggregate report.
    Report {
        #[command(flatten)]
        opts: SuiteArgs,
    },
}

#[derive(Args, Debug)]
struct ReportOut {
    /// JSON report path; stdout when absent.
    #[arg(long = "report")]
    path: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Differential file replacing the suite defaults.
    #[arg(long)]
    diff: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, value_delimiter = ',', default_value = "5,8,12,20")]
    standoffs: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    exact_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    fd_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    contact_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    product_tol: f64,
    #[arg(long, default_value_t = 1e-10)]
    identity_tol: f64,
    #[arg(long, default_value_t = 1e-8)]
    holonomy_tol: f64,
    #[arg(long, default_value_t = 0.3)]
    slope_tol: f64,
    #[arg(long, default_value_t = 1e-3)]
    sup_tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    tree_tol: f64,
    #[arg(long, default_value_t = 1e-2)]
    residual_tol: f64,
    /// Directory for survey CSV files.
    #[arg(long)]
    csv_dir: Option<PathBuf>,
    /// JSON report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl SuiteArgs {
    fn options(&self) -> Result<SuiteOptions> {
        let diff = match &self.diff {
            Some(p) => {
                let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into());
                Some((name, commands::load_differential(p)?))
            }
            None => None,
        };
        Ok(SuiteOptions {
            diff,
            seed: self.seed,
            samples: self.samples,
            standoffs: self.standoffs.clone(),
            tol: self.tol,
            exact_tol: self.exact_tol,
            fd_tol: self.fd_tol,
            contact_tol: self.contact_tol,
            product_tol: self.product_tol,
            identity_tol: self.identity_tol,
            holonomy_tol: self.holonomy_tol,
            slope_tol: self.slope_tol,
            sup_tol: self.sup_tol,
            tree_tol: self.tree_tol,
            residual_tol: self.residual_tol,
            csv_dir: self.csv_dir.clone(),
        })
    }
}

fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_suite(name: &str, suite: report::SuiteReport, path: Option<&Path>) -> Result<bool> {
    let mut r = Report::new();
    r.insert(name.to_string(), suite);
    emit(&r, path)?;
    Ok(all_pass(&r))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Surface { diff, grid, model, out, standoff, bubble, certify, tol, figure, hexagon, bubble_radii, curves, report } => {
            let args = commands::SurfaceArgs {
                diff: &diff,
                grid: &grid,
                model: &model,
                out: &out,
                standoff,
                bubble,
                certify,
                tol,
                figure: figure.as_deref(),
                hexagon: &hexagon,
                bubble_radii: &bubble_radii,
                curves: curves.as_deref(),
            };
            emit_suite("surface", commands::surface(&args)?, report.path.as_deref())
        }
        Cmd::Trajectories { diff, angle, seeds, bounds, length, spacing, prune, corrected, tol, out, report } => {
            let args = commands::TrajectoryArgs { diff: &diff, angle, seeds, bounds: &bounds, length, spacing, prune, corrected, out: &out, tol };
            emit_suite("trajectories", commands::trajectories(&args)?, report.path.as_deref())
        }
        Cmd::Holonomy { diff, method, lp, gamma, base, tol, report } => {
            emit(&commands::holonomy(&diff, &method, lp.as_deref(), gamma.as_deref(), &base, tol)?, report.path.as_deref())?;
            Ok(true)
        }
        Cmd::Geodesic { surface, from, to, class, max_depth, report } => {
            emit(&commands::geodesic(&surface, from.as_deref(), to.as_deref(), class.as_deref(), max_depth)?, report.path.as_deref())?;
            Ok(true)
        }
        Cmd::Cylinders { surface, directions, max_circumference, return_tol, report } => {
            emit(&commands::cylinders(&surface, directions, max_circumference, return_tol)?, report.path.as_deref())?;
            Ok(true)
        }
        Cmd::Verify { suite, opts } => {
            let o = opts.options()?;
            emit_suite(&suite, run_suite(&suite, &o)?, opts.out.as_deref())
        }
        Cmd::Report { opts } => {
            let o = opts.options()?;
            let results = par_map(&SUITES, |s| run_suite(s, &o));
            let mut r = Report::new();
            for (name, res) in SUITES.iter().zip(results) {
                r.insert(name.to_string(), res?);
            }
            emit(&r, opts.out.as_deref())?;
            Ok(all_pass(&r))
        }
    }
}

/// Input problems are usage errors; anything else is a failed run.
fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return 2;
        }
        if let Some(pe) = cause.downcast_ref::<projlab::Error>() {
            return match pe {
                projlab::Error::Parse { .. } | projlab::Error::InvalidInput(_) | projlab::Error::InvalidSurface(_) => 2,
                _ => 1,
            };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
