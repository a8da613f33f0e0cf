//! `bai`: experiment runs, weight/bound calculators, decay-slope analysis,
//! and a fast self-test, all on top of the bai-core library.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use bai_core::allocation::gna_target_weights;
use bai_core::bounds::{bernoulli_closed_forms, kkt_verify, rate_v, small_gap_ratio, MeanModel};
use bai_core::engine::{run, AlgorithmSpec, GnaParams};
use bai_core::harness::{
    fit_decay, group_decay_points, read_config, read_results, results_csv, run_experiment,
    run_experiment_with_workers, write_cell_report, write_results, CellSummary,
    ExperimentSummary,
};
use bai_core::model::{make_gaussian_instance, RngStream};

#[derive(Parser)]
#[command(
    name = "bai",
    version,
    about = "Fixed-budget best-arm identification: simulator and bound calculator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment grid described by a JSON config.
    Run {
        /// Path to the experiment config (JSON).
        config: PathBuf,
        /// Worker threads for the trial loop (default: machine cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Also write a per-cell JSON report (allocations, decay fits).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Print the variance-balanced target weights for a sigma vector.
    Weights {
        /// Per-arm standard deviations, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        sigmas: Vec<f64>,
        /// Best arm, 1-based.
        #[arg(long)]
        best: usize,
    },
    /// Print worst-case rate constants for an outcome family.
    Bounds {
        #[arg(long, value_enum)]
        family: Family,
        /// Per-arm standard deviations (gaussian family only).
        #[arg(long, value_delimiter = ',')]
        sigmas: Option<Vec<f64>>,
        /// Number of arms (bernoulli family only).
        #[arg(long)]
        k: Option<usize>,
    },
    /// Fit log error-rate decay slopes from a results CSV.
    Decay {
        /// Path to a results CSV produced by `run`.
        results: PathBuf,
    },
    /// Run the fast invariant suite.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Gaussian,
    Bernoulli,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Run {
            config,
            workers,
            json,
        } => cmd_run(&config, workers, json.as_deref()),
        Command::Weights { sigmas, best } => cmd_weights(&sigmas, best),
        Command::Bounds { family, sigmas, k } => cmd_bounds(family, sigmas.as_deref(), k),
        Command::Decay { results } => cmd_decay(&results),
        Command::Selftest => cmd_selftest(),
    }
}

fn cmd_run(
    config_path: &std::path::Path,
    workers: Option<usize>,
    json: Option<&std::path::Path>,
) -> anyhow::Result<()> {
    let config = read_config(config_path)?;
    let summary = match workers {
        Some(n) => run_experiment_with_workers(&config, n)?,
        None => run_experiment(&config)?,
    };
    for cell in &summary.cells {
        println!(
            "{} T={} trials={} errors={} p_hat={:.6} se={:.6}",
            cell.algorithm, cell.t, cell.trials, cell.errors, cell.p_hat, cell.se
        );
    }
    write_results(&summary, &config.output)?;
    println!("wrote results to {}", config.output.display());
    if let Some(path) = json {
        write_cell_report(&summary, path)?;
        println!("wrote cell report to {}", path.display());
    }
    Ok(())
}

fn cmd_weights(sigmas: &[f64], best: usize) -> anyhow::Result<()> {
    if best == 0 || best > sigmas.len() {
        bail!(
            "--best must be a 1-based arm index in 1..={} (got {best})",
            sigmas.len()
        );
    }
    let w = gna_target_weights(best - 1, sigmas)?;
    let joined: Vec<String> = w.as_slice().iter().map(|x| format!("{x:.6}")).collect();
    println!("{}", joined.join(" "));
    Ok(())
}

fn cmd_bounds(family: Family, sigmas: Option<&[f64]>, k: Option<usize>) -> anyhow::Result<()> {
    match family {
        Family::Gaussian => {
            if k.is_some() {
                bail!("--k applies to the bernoulli family; use --sigmas for gaussian");
            }
            let sigmas = sigmas.context("--sigmas is required for the gaussian family")?;
            let mut best = f64::INFINITY;
            for a in 0..sigmas.len() {
                let v = rate_v(a, sigmas)?;
                println!("V({})={v:.6}", a + 1);
                best = best.min(v);
            }
            println!("V*={best:.6}");
        }
        Family::Bernoulli => {
            if sigmas.is_some() {
                bail!("--sigmas applies to the gaussian family; use --k for bernoulli");
            }
            let k = k.context("--k is required for the bernoulli family")?;
            let forms = bernoulli_closed_forms(k)?;
            println!("w_best={:.6}", forms.w_best);
            println!("w_other={:.6}", forms.w_other);
            println!("V*_printed={:.6}", forms.v_star_printed);
            println!("V*_derived={:.6}", forms.v_star_derived);
        }
    }
    Ok(())
}

fn cmd_decay(results_path: &std::path::Path) -> anyhow::Result<()> {
    let rows = read_results(results_path)?;
    if rows.is_empty() {
        bail!("no rows in {}", results_path.display());
    }
    for (algorithm, points) in group_decay_points(&rows) {
        match fit_decay(&points) {
            Ok(fit) => println!(
                "{algorithm}: slope={:.6} intercept={:.6} r_squared={:.6}",
                fit.slope, fit.intercept, fit.r_squared
            ),
            Err(e) => println!("{algorithm}: no fit ({e})"),
        }
    }
    Ok(())
}

fn cmd_selftest() -> anyhow::Result<()> {
    let mut passed = 0usize;
    let mut check = |name: &str, ok: bool| -> anyhow::Result<()> {
        if !ok {
            bail!("selftest failed: {name}");
        }
        println!("ok {name}");
        passed += 1;
        Ok(())
    };

    let w = gna_target_weights(0, &[2.0, 1.0, 1.0])?;
    check(
        "target weights match the closed form",
        (w[0] - 0.5857864376269049).abs() <= 1e-12
            && (w[1] - 0.20710678118654755).abs() <= 1e-12,
    )?;

    let report = kkt_verify(&[2.0, 1.0, 1.5], 0)?;
    check("optimality residuals vanish", report.max_residual() <= 1e-10)?;

    let ratio = small_gap_ratio(MeanModel::Gaussian { sigma2: 1.0 }, 0.0, 1e-3)?;
    check("gaussian small-gap ratio is exactly half the information", ratio == 0.5)?;

    let forms = bernoulli_closed_forms(3)?;
    check(
        "bernoulli closed forms",
        (forms.w_best - 0.41421356237309503).abs() <= 1e-12
            && (forms.v_star_printed - 2.0 / 9.0).abs() <= 1e-12
            && (forms.v_star_derived - (6.0 - 4.0 * 2.0_f64.sqrt())).abs() <= 1e-9,
    )?;

    let inst = make_gaussian_instance(&[1.0, 0.5], &[1.0, 1.0])?;
    let run_once = || -> bai_core::Result<Vec<f64>> {
        let mut rng = RngStream::new(12345, 0);
        Ok(run(&AlgorithmSpec::Gna(GnaParams::default()), &inst, 50, &mut rng)?.estimates)
    };
    check("engine runs are deterministic", run_once()? == run_once()?)?;

    let summary = ExperimentSummary {
        cells: vec![CellSummary {
            algorithm: "GNA".into(),
            t: 5000,
            trials: 3000,
            errors: 18,
            p_hat: 0.006,
            se: (0.006 * 0.994_f64 / 3000.0).sqrt(),
            allocation: vec![0.5, 0.5],
        }],
    };
    check(
        "results CSV format is stable",
        results_csv(&summary)
            == "algorithm,T,trials,errors,p_hat,se\nGNA,5000,3000,18,0.006000,0.001410\n",
    )?;

    let points: Vec<(f64, f64)> = (1..=4)
        .map(|i| {
            let t = 1000.0 * i as f64;
            (t, 0.5 * (-2e-3 * t).exp())
        })
        .collect();
    let fit = fit_decay(&points)?;
    check(
        "decay fit recovers an exact exponential",
        (fit.slope + 2e-3).abs() <= 1e-12 && fit.r_squared > 1.0 - 1e-12,
    )?;

    println!("selftest passed ({passed} checks)");
    Ok(())
}
