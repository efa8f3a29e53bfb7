use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stablefield::config::{parse_config, resolve, ResolvedConfig, RunConfig};
use stablefield::error::{Error, Result};
use stablefield::field::sample_field_exact;
use stablefield::field::{c_alpha, RngStream};
use stablefield::geometry::ActionGeometry;
use stablefield::harness::{
    fit_tail_exponent, run_ldp_experiment, sigma_equivalence_check, weak_convergence_check,
};
use stablefield::limits::{c_f, c_lvh, passage_limit_dissipative, Side};
use stablefield::output;

/// Batch front end for the stable-field laboratory: parse a declarative
/// experiment config, dispatch to analysis/simulation/limits/harness, and
/// emit tables and plot-ready data.
#[derive(Parser)]
#[command(name = "stablefield", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Path to the JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread override (also honors STABLEFIELD_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Decompose the action: free rank, torsion, bases, coset reps.
    AnalyzeAction,
    /// Print Delta / fiber-volume tables and the volume integral.
    Geometry,
    /// Print all applicable analytic limit constants as JSON.
    Limits,
    /// Draw one field realization and dump it as CSV.
    Simulate,
    /// Run the large-deviation experiment (records CSV + summary JSON).
    Ldp,
    /// Run the experiment plus diagnostics and print a merged table.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load(cli: &Cli) -> Result<ResolvedConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let text = std::fs::read_to_string(path)?;
    let mut cfg: RunConfig = parse_config(&text)?;
    if let Some(seed) = cli.seed {
        if let Some(x) = cfg.experiment.as_mut() {
            x.seed = seed;
        }
    }
    if let Some(threads) = cli.threads {
        if let Some(x) = cfg.experiment.as_mut() {
            x.parallelism = threads;
        }
    }
    if let Some(out) = &cli.out {
        let dir = out.to_string_lossy().to_string();
        match cfg.output.as_mut() {
            Some(o) => o.dir = dir,
            None => {
                cfg.output = Some(stablefield::config::OutputSection {
                    dir,
                    field_csv: false,
                })
            }
        }
    }
    resolve(&cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let rc = load(cli)?;
    let out_dir = Path::new(&rc.out_dir);
    match cli.command {
        Command::AnalyzeAction => {
            let json = serde_json::to_string(&rc.structure)?;
            output::atomic_write(&out_dir.join("group.json"), json.as_bytes())?;
            println!("{json}");
        }
        Command::Geometry => {
            let geom = ActionGeometry::new(&rc.structure)?;
            let leb = geom.leb_delta()?;
            let table = fiber_table(&geom);
            let integral = if geom.fiber_dim() > 0 {
                let r = geom.integral_v_alpha(rc.spec.alpha)?;
                Some((rc.spec.alpha, r.value, r.error_bound))
            } else {
                None
            };
            let csv =
                output::geometry_csv((leb.value, leb.error_bound), &table, integral, &rc.hash);
            output::atomic_write(&out_dir.join("geometry.csv"), csv.as_bytes())?;
            print!("{csv}");
        }
        Command::Limits => {
            let json = limits_json(&rc)?;
            output::atomic_write(&out_dir.join("limits.json"), json.as_bytes())?;
            println!("{json}");
        }
        Command::Simulate => {
            let x = rc.experiment.as_ref().ok_or_else(|| {
                Error::config("experiment", "simulate needs an experiment section (n, seed)")
            })?;
            let n = x.n_schedule[0];
            let sample = sample_field_exact(&rc.spec, n, RngStream::new(x.seed, 0))?;
            let csv = output::field_csv(&sample, &rc.hash);
            output::atomic_write(&out_dir.join("field.csv"), csv.as_bytes())?;
            println!(
                "wrote field.csv: d={} n={} values={} saturated={}",
                sample.d,
                sample.n,
                sample.values.len(),
                sample.saturated
            );
        }
        Command::Ldp => {
            let records = run_experiment(&rc)?;
            let fitted = fit_tail_exponent(&records, rc.spec.effective_dim());
            let sigma = sigma_schedule(&rc)?;
            let weak = weak_reports(&rc)?;
            let csv = output::records_csv(&records, &rc.hash);
            output::atomic_write(&out_dir.join("records.csv"), csv.as_bytes())?;
            let summary = output::summary_json(&records, fitted, &sigma, &weak, &rc.hash)?;
            output::atomic_write(&out_dir.join("summary.json"), summary.as_bytes())?;
            print!("{csv}");
        }
        Command::Report => {
            let records = run_experiment(&rc)?;
            let fitted = fit_tail_exponent(&records, rc.spec.effective_dim());
            let sigma = sigma_schedule(&rc)?;
            let weak = weak_reports(&rc)?;
            let table = output::report_table(&records, fitted, &sigma, &weak);
            output::atomic_write(&out_dir.join("report.txt"), table.as_bytes())?;
            print!("{table}");
        }
    }
    Ok(())
}

fn run_experiment(rc: &ResolvedConfig) -> Result<Vec<stablefield::harness::EstimateRecord>> {
    let x = rc.experiment.as_ref().ok_or_else(|| {
        Error::config("experiment", "this subcommand needs an experiment section")
    })?;
    run_ldp_experiment(x)
}

fn sigma_schedule(rc: &ResolvedConfig) -> Result<Vec<stablefield::harness::SigmaRecord>> {
    match rc.experiment.as_ref() {
        Some(x) => sigma_equivalence_check(&rc.spec, &x.n_schedule),
        None => Ok(Vec::new()),
    }
}

fn weak_reports(rc: &ResolvedConfig) -> Result<Vec<stablefield::harness::WeakReport>> {
    let Some(x) = rc.experiment.as_ref() else {
        return Ok(Vec::new());
    };
    if !rc.weak_check {
        return Ok(Vec::new());
    }
    let n = *x.n_schedule.last().expect("validated nonempty");
    let replicates = x.replicates.clamp(1000, 10_000);
    Ok(vec![weak_convergence_check(
        &rc.spec,
        n,
        replicates,
        x.seed,
        x.parallelism,
    )?])
}

fn fiber_table(geom: &ActionGeometry) -> Vec<(Vec<f64>, f64)> {
    let mut table = Vec::new();
    if geom.free_rank() == 1 {
        let w = geom.bounding_box()[0];
        let steps = 80;
        for i in 0..=steps {
            let y = -w + 2.0 * w * i as f64 / steps as f64;
            table.push((vec![y], geom.q_volume(&[y])));
        }
    } else if geom.free_rank() == 2 {
        let (w0, w1) = (geom.bounding_box()[0], geom.bounding_box()[1]);
        let steps = 24;
        for i in 0..=steps {
            for j in 0..=steps {
                let y = vec![
                    -w0 + 2.0 * w0 * i as f64 / steps as f64,
                    -w1 + 2.0 * w1 * j as f64 / steps as f64,
                ];
                let vol = geom.q_volume(&y);
                table.push((y, vol));
            }
        }
    }
    table
}

fn limits_json(rc: &ResolvedConfig) -> Result<String> {
    let spec = &rc.spec;
    let mut doc = serde_json::Map::new();
    doc.insert("config".into(), rc.hash.clone().into());
    doc.insert("alpha".into(), spec.alpha.into());
    doc.insert("cAlpha".into(), c_alpha(spec.alpha)?.into());
    match spec.regime() {
        stablefield::field::Regime::Dissipative => {
            let cf = c_f(spec)?;
            doc.insert("cF".into(), serde_json::to_value(cf)?);
            let passage = passage_limit_dissipative(spec, 1.0, 1.0, Side::Upper)?;
            doc.insert("maxCoeff".into(), serde_json::to_value(passage)?);
        }
        stablefield::field::Regime::Conservative => {
            let geom = ActionGeometry::new(&rc.structure)?;
            let leb = geom.leb_delta()?;
            doc.insert(
                "lebDelta".into(),
                serde_json::json!({"value": leb.value, "errorBound": leb.error_bound}),
            );
            let vint = geom.integral_v_alpha(spec.alpha)?;
            doc.insert(
                "integralVAlpha".into(),
                serde_json::json!({"value": vint.value, "errorBound": vint.error_bound}),
            );
            let c = c_lvh(spec, &geom)?;
            doc.insert("cLVh".into(), serde_json::to_value(c)?);
            let max = stablefield::limits::max_limit_conservative(spec, &geom, 1.0, Side::Upper)?;
            doc.insert("maxCoeff".into(), serde_json::to_value(max)?);
        }
    }
    Ok(serde_json::to_string_pretty(&serde_json::Value::Object(
        doc,
    ))?)
}
