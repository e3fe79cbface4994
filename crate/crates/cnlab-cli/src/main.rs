//! Command-line driver: configuration ingestion, experiment orchestration
//! and serialization of tables, scans and verdicts.

mod config;
mod export;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cnlab::lab::{self, Pipeline};
use cnlab::report::{all_pass, Verdict};
use cnlab::widom;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "cnlab", version, about = "High-precision laboratory for Nikishin systems and Chebyshev-Nikishin polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path of the run configuration document
    #[arg(long, global = true, default_value = "config.json")]
    config: PathBuf,
    /// Output directory for tables and verdicts
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the working precision in bits
    #[arg(long, global = true)]
    precision: Option<u32>,
    /// Override the maximum polynomial degree
    #[arg(long, global = true)]
    max_degree: Option<usize>,
    /// Override the staircase permutation, e.g. 2,1
    #[arg(long, global = true, value_delimiter = ',')]
    permutation: Option<Vec<usize>>,
    /// Override the scan grid: RE0,RE1,IM0,IM1,STEPS
    #[arg(long, global = true)]
    grid: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a reference configuration document
    GenSystem {
        /// p1 | p2 | p2-jacobi | p3
        #[arg(long, default_value = "p2")]
        preset: String,
    },
    /// Orthogonal polynomials and their recurrence table
    MopRun,
    /// Limit coefficients and the relation residuals
    Limits,
    /// Operator, curve scan, arcs and eigenvalue-limit masses
    ToeplitzAnalyze,
    /// Branch identities and constants
    SurfaceVerify,
    /// Measures, reconstruction and orthogonality verdicts
    HierarchyVerify,
    /// Widom formulas, second kind functions and asymptotics
    WidomVerify,
    /// Exact-rational algebra on operator truncations
    HessenbergVerify,
    /// Aggregate verdicts written by previous runs
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(passed) => {
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(RunError::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(RunError::Computation(msg)) => {
            eprintln!("computation failed: {msg}");
            ExitCode::from(1)
        }
    }
}

enum RunError {
    Config(String),
    Computation(String),
}

impl From<cnlab::Error> for RunError {
    fn from(e: cnlab::Error) -> Self {
        match e {
            cnlab::Error::InvalidConfig(_)
            | cnlab::Error::InvalidPermutation { .. }
            | cnlab::Error::IntervalsOverlap { .. }
            | cnlab::Error::DensityNotPositive(_) => RunError::Config(e.to_string()),
            other => RunError::Computation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Computation(format!("io: {e}"))
    }
}

fn run(cli: &Cli) -> Result<bool, RunError> {
    if let Command::GenSystem { preset } = &cli.command {
        let cfg = RunConfig::preset(preset)?;
        let doc = serde_json::to_string_pretty(&cfg).expect("config serializes");
        export::write_text(&cli.config, &doc)?;
        println!("wrote {}", cli.config.display());
        return Ok(true);
    }
    if let Command::Report = &cli.command {
        return aggregate_report(&cli.out);
    }

    let bytes = std::fs::read(&cli.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg: RunConfig = serde_json::from_slice(&bytes)
        .map_err(|e| RunError::Config(format!("cannot parse {}: {e}", cli.config.display())))?;
    if let Some(bits) = cli.precision {
        cfg.precision_bits = bits;
    }
    if let Some(n) = cli.max_degree {
        cfg.max_degree = n;
    }
    if let Some(perm) = &cli.permutation {
        cfg.permutation = Some(perm.clone());
    }
    if let Some(grid) = &cli.grid {
        cfg.grid = Some(parse_grid(grid)?);
    }
    cfg.validate()?;

    let ctx = cfg.context()?;
    let system = cfg.system(&ctx)?;
    let pipe = Pipeline::build(
        system,
        cfg.max_degree,
        cfg.permutation_or_identity(),
        cfg.table_points,
        &ctx,
    )?;

    let (experiment, verdicts, files) = match &cli.command {
        Command::MopRun => {
            let dev = cnlab::mop::rebuild_deviation(&pipe.q, &pipe.rec_table);
            let verdicts = vec![Verdict::check(
                "mop.rebuild",
                "recurrence regenerates the stored polynomials coefficientwise",
                dev.to_f64(),
                1e-40,
            )];
            let path = cli.out.join("recurrence.csv");
            export::write_text(&path, &export::recurrence_csv(&pipe))?;
            ("mop-run", verdicts, vec![path])
        }
        Command::Limits => {
            let verdicts = lab::check_relation_residuals(&pipe);
            let path = cli.out.join("limits.csv");
            export::write_text(&path, &export::limits_csv(&pipe))?;
            ("limits", verdicts, vec![path])
        }
        Command::ToeplitzAnalyze => {
            let steps = cfg.grid.as_ref().map(|g| g.steps).unwrap_or(96);
            let scan = match &cfg.grid {
                Some(g) => {
                    let region = (
                        g.re.0.to_real(ctx.prec())?.to_f64(),
                        g.re.1.to_real(ctx.prec())?.to_f64(),
                        g.im.0.to_real(ctx.prec())?.to_f64(),
                        g.im.1.to_real(ctx.prec())?.to_f64(),
                    );
                    cnlab::toeplitz::gamma_scan(&pipe.op, region, steps, &ctx)?
                }
                None => pipe.scan(steps)?,
            };
            let mut verdicts = lab::check_gamma_matches_intervals(&pipe, &scan, "cli")?;
            verdicts.extend(lab::check_widom_oracle(&pipe, cfg.max_degree.min(24), 8)?);
            verdicts.extend(lab::check_strong_asymptotics(&pipe, 3)?);
            let g_path = cli.out.join("gamma_scan.csv");
            export::write_text(&g_path, &export::gamma_csv(&scan))?;
            let a_path = cli.out.join("arcs.csv");
            export::write_text(&a_path, &export::arcs_csv(&pipe))?;
            ("toeplitz-analyze", verdicts, vec![g_path, a_path])
        }
        Command::SurfaceVerify => {
            let verdicts = lab::check_surface_identities(&pipe, 12)?;
            ("surface-verify", verdicts, vec![])
        }
        Command::HierarchyVerify => {
            let mut verdicts = lab::check_mass_laws(&pipe, 48)?;
            verdicts.extend(lab::check_reconstruction(&pipe)?);
            verdicts.extend(lab::check_orthogonality(
                &pipe,
                cfg.orthogonality_degree,
                "cli",
            )?);
            let path = cli.out.join("densities.csv");
            export::write_text(&path, &export::density_csv(&pipe))?;
            ("hierarchy-verify", verdicts, vec![path])
        }
        Command::WidomVerify => {
            let verdicts = lab::check_second_kind(&pipe)?;
            let path = cli.out.join("widom_decay.csv");
            export::write_text(&path, &decay_table(&pipe)?)?;
            ("widom-verify", verdicts, vec![path])
        }
        Command::HessenbergVerify => {
            let verdicts = lab::check_exact_algebra(&pipe)?;
            ("hessenberg-verify", verdicts, vec![])
        }
        Command::GenSystem { .. } | Command::Report => unreachable!(),
    };

    for v in &verdicts {
        println!("{}", v.line());
    }
    let file_names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    export::write_verdicts(&cli.out, experiment, &bytes, &verdicts, file_names)?;
    Ok(all_pass(&verdicts))
}

fn parse_grid(text: &str) -> Result<config::GridSpec, RunError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 5 {
        return Err(RunError::Config(
            "grid must be RE0,RE1,IM0,IM1,STEPS".into(),
        ));
    }
    let steps: usize = parts[4]
        .parse()
        .map_err(|_| RunError::Config("bad grid step count".into()))?;
    Ok(config::GridSpec {
        re: (
            config::NumberOrString::Text(parts[0].into()),
            config::NumberOrString::Text(parts[1].into()),
        ),
        im: (
            config::NumberOrString::Text(parts[2].into()),
            config::NumberOrString::Text(parts[3].into()),
        ),
        steps,
    })
}

/// Strong-asymptotics error decay table at one off-cut sample point.
fn decay_table(pipe: &Pipeline) -> Result<String, RunError> {
    let x = pipe
        .offcut_ring(8)
        .into_iter()
        .next()
        .expect("nonempty ring");
    let rs = cnlab::toeplitz::roots_sorted(&pipe.op, &x, &pipe.ctx)?;
    let limit = widom::strong_asymptotics_limit(&pipe.op, 0, &x, &pipe.ctx)?;
    let expected = rs.roots[0].abs().div_r(&rs.roots[1].abs()).to_f64();
    let mut out = String::from("m,error,fitted_ratio\n");
    let mut prev: Option<f64> = None;
    for m in 5..24usize {
        let n = m * pipe.p();
        let pn = pipe.op.p_eval(n, &x);
        let err = (pn.mul_c(&rs.roots[0].powi(m as i64 + 1)) - &limit)
            .abs()
            .to_f64();
        let ratio = prev.map(|p| err / p).unwrap_or(f64::NAN);
        out.push_str(&format!("{m},{err:.17e},{ratio:.8}\n"));
        prev = Some(err);
    }
    out.push_str(&format!("# expected ratio |z1/z2| = {expected:.8}\n"));
    Ok(out)
}

fn aggregate_report(out_dir: &Path) -> Result<bool, RunError> {
    let mut any = false;
    let mut ok = true;
    let entries = std::fs::read_dir(out_dir)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", out_dir.display())))?;
    let mut names: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .map(|n| n.to_string_lossy().starts_with("verdicts-"))
                .unwrap_or(false)
        })
        .collect();
    names.sort();
    for path in names {
        any = true;
        let doc: serde_json::Value = serde_json::from_slice(&std::fs::read(&path)?)
            .map_err(|e| RunError::Computation(format!("bad verdict file {path:?}: {e}")))?;
        let experiment = doc["experiment"].as_str().unwrap_or("?").to_string();
        let verdicts = doc["verdicts"].as_array().cloned().unwrap_or_default();
        let mut pass = 0usize;
        let mut fail = 0usize;
        for v in &verdicts {
            match v["status"].as_str() {
                Some("fail") => fail += 1,
                Some(_) => pass += 1,
                None => {}
            }
            println!(
                "[{experiment}] {} {}: residual {} vs tolerance {}",
                v["status"].as_str().unwrap_or("?"),
                v["id"].as_str().unwrap_or("?"),
                v["residual"],
                v["tolerance"]
            );
        }
        if fail > 0 {
            ok = false;
        }
        println!("{experiment}: {pass} pass, {fail} fail");
    }
    if !any {
        return Err(RunError::Config("no verdict files found".into()));
    }
    Ok(ok)
}
