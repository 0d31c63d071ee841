//! Batch front door: parse scenario files, run transport experiments or the
//! identity suites, and write deterministic CSV/JSON outputs.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use tubelab_core::scenario::{parse_config, ExactScenario, ScenarioConfig};
use tubelab_core::surface::{
    check_identity_14, surface_integral_sliced, surface_integral_weighted, GraphCurves,
    GraphSampler, GridSampler, IdentityReport, Probe,
};
use tubelab_core::theorem::{divergence_flux_residual, run_noncollapse_experiment, TubeWindow};
use tubelab_core::{GridSpec, LevelSetState};

/// Residual tolerances the `verify-identities` exit status is judged
/// against. Relative unless stated otherwise.
mod tolerance {
    /// Per-slice area-derivative identity.
    pub const ID14: f64 = 1e-3;
    /// Sliced and speed-weighted surface-area formulas against the direct
    /// fine-mesh quadrature.
    pub const ID15_VS_DIRECT: f64 = 1e-2;
    pub const ID25_VS_DIRECT: f64 = 1e-2;
    /// The two slice formulas against each other on the closed-form path.
    pub const ID25_VS_15: f64 = 1e-10;
    /// Normal-speed relation on the closed-form path (absolute).
    pub const ID23: f64 = 1e-12;
    /// Divergence-theorem balance (absolute).
    pub const FLUX: f64 = 1e-3;
}

const FD_TIME_STEP: f64 = 1e-3;

#[derive(Parser)]
#[command(
    name = "tubelab",
    about = "Level-set tube transport experiments and slice-calculus identity checks",
    version
)]
struct Cli {
    /// Reserved; accepted for interface stability but unused (all
    /// computations are deterministic).
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Advance a scenario's tube and verify the window-volume monotonicity
    /// mechanism; writes timeseries.csv and summary.json
    Run {
        /// Scenario configuration files (TOML); each writes to its own
        /// output directory
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Override the output directory (per-config subdirectories when
        /// several configs are given)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run up to N scenarios concurrently
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Evaluate slice-calculus identity checks on an oracle-capable
    /// scenario; writes identities.csv
    #[command(name = "verify-identities")]
    VerifyIdentities {
        config: PathBuf,
        /// Comma-separated subset of {14, 15, 23, 25, flux}
        #[arg(long, value_delimiter = ',')]
        which: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { configs, out, jobs } => run_many(&configs, out.as_deref(), jobs),
        Command::VerifyIdentities { config, which, out } => {
            verify_identities(&config, &which, out.as_deref())
        }
    }
}

fn output_dir(
    config: &ScenarioConfig,
    config_path: &Path,
    out: Option<&Path>,
    multi: bool,
) -> PathBuf {
    match out {
        Some(dir) if multi => {
            let stem = config_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into());
            dir.join(stem)
        }
        Some(dir) => dir.to_path_buf(),
        None => config.outputs.directory.clone(),
    }
}

fn run_many(configs: &[PathBuf], out: Option<&Path>, jobs: usize) -> anyhow::Result<i32> {
    let jobs = jobs.max(1);
    let multi = configs.len() > 1;
    let mut worst = 0;
    for chunk in configs.chunks(jobs) {
        let results: Vec<anyhow::Result<i32>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|path| scope.spawn(move || run_one(path, out, multi)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("scenario thread panicked"))
                .collect()
        });
        for result in results {
            worst = worst.max(result?);
        }
    }
    Ok(worst)
}

fn run_one(config_path: &Path, out: Option<&Path>, multi: bool) -> anyhow::Result<i32> {
    let config = parse_config(config_path)
        .with_context(|| format!("loading scenario {}", config_path.display()))?;
    let outdir = output_dir(&config, config_path, out, multi);
    std::fs::create_dir_all(&outdir)
        .with_context(|| format!("creating output directory {}", outdir.display()))?;

    let cadence = config.outputs.snapshot_cadence;
    let vtk = config.outputs.vtk;
    let contour_slices = config.outputs.contour_slices.clone();
    let snapshot_dir = outdir.clone();
    let on_step = move |step: usize, state: &LevelSetState| {
        if cadence == 0 || !step.is_multiple_of(cadence) {
            return Ok(());
        }
        if vtk {
            state.write_vtk(&snapshot_dir.join(format!("theta_{step:05}.vtk")))?;
        }
        for (idx, &x3) in contour_slices.iter().enumerate() {
            let contour = tubelab_core::slice_contour(state, x3)?;
            let path = snapshot_dir.join(format!("contour_{step:05}_s{idx}.csv"));
            let mut out = BufWriter::new(File::create(path)?);
            contour.write_csv(&mut out)?;
        }
        Ok(())
    };

    let outcome = run_noncollapse_experiment(&config, on_step)
        .with_context(|| format!("running scenario {}", config_path.display()))?;

    let mut csv = BufWriter::new(File::create(outdir.join("timeseries.csv"))?);
    tubelab_core::write_timeseries_csv(&outcome.records, &mut csv)?;
    csv.flush()?;

    let timestamp = chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true);
    let summary = outcome.summary(timestamp);
    let mut json = BufWriter::new(File::create(outdir.join("summary.json"))?);
    tubelab_core::write_summary_json(&summary, &mut json)?;
    json.flush()?;

    for warning in &outcome.warnings {
        eprintln!("warning [{}]: {warning}", config_path.display());
    }
    println!(
        "run {}: {} ({} records, outputs in {})",
        config_path.display(),
        summary.verdict,
        outcome.records.len(),
        outdir.display()
    );
    Ok(outcome.exit_code())
}

struct IdentityRow {
    identity: String,
    resolution: String,
    lhs: f64,
    rhs: f64,
    rel_error: f64,
    measured_order: Option<f64>,
    within: bool,
}

fn push_pair(
    rows: &mut Vec<IdentityRow>,
    identity: &str,
    coarse: (String, IdentityReport),
    fine: (String, IdentityReport),
    tol: f64,
    absolute: bool,
) {
    let err = |r: &IdentityReport| if absolute { r.abs_error } else { r.rel_error };
    let order = if err(&coarse.1) > 1e-12 && err(&fine.1) > 0.0 {
        Some((err(&coarse.1) / err(&fine.1)).log2())
    } else {
        None
    };
    rows.push(IdentityRow {
        identity: identity.into(),
        resolution: coarse.0,
        lhs: coarse.1.lhs,
        rhs: coarse.1.rhs,
        rel_error: coarse.1.rel_error,
        measured_order: None,
        within: err(&coarse.1) <= tol,
    });
    rows.push(IdentityRow {
        identity: identity.into(),
        resolution: fine.0,
        lhs: fine.1.lhs,
        rhs: fine.1.rhs,
        rel_error: fine.1.rel_error,
        measured_order: order,
        within: err(&fine.1) <= tol,
    });
}

fn doubled(grid: GridSpec) -> GridSpec {
    GridSpec::new(2 * grid.n1 - 1, 2 * grid.n2 - 1, 2 * grid.n3 - 1).expect("doubled grid")
}

fn resolution_label(grid: GridSpec) -> String {
    format!("{}x{}x{}", grid.n1, grid.n2, grid.n3)
}

fn verify_identities(
    config_path: &Path,
    which: &[String],
    out: Option<&Path>,
) -> anyhow::Result<i32> {
    let config = parse_config(config_path)
        .with_context(|| format!("loading scenario {}", config_path.display()))?;
    for token in which {
        if !["14", "15", "23", "25", "flux"].contains(&token.as_str()) {
            bail!("unknown identity `{token}`; valid identities: 14, 15, 23, 25, flux");
        }
    }

    let mut rows: Vec<IdentityRow> = Vec::new();

    if which.iter().any(|w| w == "14") {
        rows.extend(identity_14_rows(&config)?);
    }
    let wants_15 = which.iter().any(|w| w == "15");
    let wants_25 = which.iter().any(|w| w == "25");
    if wants_15 || wants_25 {
        rows.extend(surface_formula_rows(&config, wants_15, wants_25)?);
    }
    if which.iter().any(|w| w == "23") {
        rows.push(identity_23_row(&config)?);
    }
    if which.iter().any(|w| w == "flux") {
        rows.extend(flux_rows(&config)?);
    }

    let outdir = output_dir(&config, config_path, out, false);
    std::fs::create_dir_all(&outdir)?;
    let mut table = BufWriter::new(File::create(outdir.join("identities.csv"))?);
    writeln!(
        table,
        "identity,resolution,lhs,rhs,rel_error,measured_order"
    )?;
    for row in &rows {
        let order = row
            .measured_order
            .map(|o| format!("{o:.3}"))
            .unwrap_or_default();
        writeln!(
            table,
            "{},{},{:.16e},{:.16e},{:.16e},{order}",
            row.identity, row.resolution, row.lhs, row.rhs, row.rel_error
        )?;
    }
    table.flush()?;

    let mut all_within = true;
    for row in &rows {
        let status = if row.within { "ok" } else { "EXCEEDED" };
        println!(
            "identity {:<22} {:<14} rel_error {:.3e} {status}",
            row.identity, row.resolution, row.rel_error
        );
        all_within &= row.within;
    }
    println!(
        "verify-identities {}: {} rows, table in {}",
        config_path.display(),
        rows.len(),
        outdir.join("identities.csv").display()
    );
    Ok(if all_within { 0 } else { 2 })
}

fn identity_14_rows(config: &ScenarioConfig) -> anyhow::Result<Vec<IdentityRow>> {
    let scenario = config.exact_scenario()?;
    if matches!(scenario, ExactScenario::Graph(_)) {
        bail!("identity 14 needs a cylinder-family oracle scenario");
    }
    let theta = |p, t| scenario.theta(p, t);
    let t = 0.5 * config.horizon;
    // off the midplane so no probe of the family degenerates to zero there
    let x3 = config.bx.i3.lo + 0.375 * config.bx.i3.len();
    let eps_grad = config.tolerances.eps_grad;

    let mut rows = Vec::new();
    for probe in Probe::FAMILY {
        let f = |p| probe.eval(p);
        let coarse = check_identity_14(
            theta,
            config.grid,
            config.bx,
            x3,
            t,
            f,
            FD_TIME_STEP,
            eps_grad,
        )?;
        let fine_grid = doubled(config.grid);
        let fine = check_identity_14(
            theta,
            fine_grid,
            config.bx,
            x3,
            t,
            f,
            FD_TIME_STEP,
            eps_grad,
        )?;
        push_pair(
            &mut rows,
            &format!("14(F={})", probe.label()),
            (resolution_label(config.grid), coarse),
            (resolution_label(fine_grid), fine),
            tolerance::ID14,
            false,
        );
    }
    Ok(rows)
}

fn surface_formula_rows(
    config: &ScenarioConfig,
    wants_15: bool,
    wants_25: bool,
) -> anyhow::Result<Vec<IdentityRow>> {
    let tube = config
        .graph_tube()
        .context("identities 15 and 25 need a graph scenario")?;
    let t = 0.5 * config.horizon;
    let lo = config.bx.i3.lo;
    let hi = config.bx.i3.hi;
    let sigma_floor = config.tolerances.eps_sigma * tube.params.drift.abs().max(1e-6);
    let eps_grad = config.tolerances.eps_grad;

    let direct = tube.direct_surface_integral(|_| 1.0, lo, hi, 1601, 1601, t);

    let mut rows = Vec::new();
    let mut grid_pair = |label: &str, weighted: bool| -> anyhow::Result<()> {
        let mut reports = Vec::new();
        for grid in [config.grid, doubled(config.grid)] {
            let prev = tube.to_levelset(grid, config.bx, t - FD_TIME_STEP)?;
            let state = tube.to_levelset(grid, config.bx, t)?;
            let next = tube.to_levelset(grid, config.bx, t + FD_TIME_STEP)?;
            let sampler = GridSampler::new(&state, &prev, &next, None, eps_grad)?;
            let curves = GraphCurves {
                tube: &tube,
                t,
                n2: grid.n2,
                n3: grid.n3,
            };
            let value = if weighted {
                surface_integral_weighted(&curves, &sampler, lo, hi, |_| 1.0, sigma_floor)?
            } else {
                surface_integral_sliced(&curves, &sampler, lo, hi, |_| 1.0)?
            };
            reports.push((
                resolution_label(grid),
                IdentityReport::new(value, direct, 0.0),
            ));
        }
        let fine = reports.pop().unwrap();
        let coarse = reports.pop().unwrap();
        push_pair(
            &mut rows,
            label,
            coarse,
            fine,
            if weighted {
                tolerance::ID25_VS_DIRECT
            } else {
                tolerance::ID15_VS_DIRECT
            },
            false,
        );
        Ok(())
    };

    if wants_15 {
        grid_pair("15-vs-direct", false)?;
    }
    if wants_25 {
        grid_pair("25-vs-direct", true)?;

        // closed-form path: both slice formulas from the oracle's own
        // normals and speeds must coincide to rounding
        let curves = GraphCurves {
            tube: &tube,
            t,
            n2: config.grid.n2,
            n3: config.grid.n3,
        };
        let sampler = GraphSampler { tube: &tube, t };
        let sliced = surface_integral_sliced(&curves, &sampler, lo, hi, |_| 1.0)?;
        let weighted = surface_integral_weighted(&curves, &sampler, lo, hi, |_| 1.0, sigma_floor)?;
        let report = IdentityReport::new(weighted, sliced, 0.0);
        rows.push(IdentityRow {
            identity: "25-vs-15-closed-form".into(),
            resolution: resolution_label(config.grid),
            lhs: report.lhs,
            rhs: report.rhs,
            rel_error: report.rel_error,
            measured_order: None,
            within: report.rel_error <= tolerance::ID25_VS_15,
        });
    }
    Ok(rows)
}

fn identity_23_row(config: &ScenarioConfig) -> anyhow::Result<IdentityRow> {
    let tube = config
        .graph_tube()
        .context("identity 23 needs a graph scenario")?;
    let residual = tube.speed_relation_residual(50, 50, 10);
    Ok(IdentityRow {
        identity: "23".into(),
        resolution: "50x50x10".into(),
        lhs: residual,
        rhs: 0.0,
        rel_error: residual,
        measured_order: None,
        within: residual <= tolerance::ID23,
    })
}

fn flux_rows(config: &ScenarioConfig) -> anyhow::Result<Vec<IdentityRow>> {
    let scenario = config.exact_scenario()?;
    if matches!(scenario, ExactScenario::Graph(_)) {
        bail!("the flux balance needs a cylinder-family oracle scenario");
    }
    let field = scenario.velocity();
    let t = 0.5 * config.horizon;
    let span = config.bx.i3.len();
    let window = TubeWindow {
        time: t,
        lo: config.bx.i3.lo + 0.125 * span,
        hi: config.bx.i3.hi - 0.125 * span,
    };
    let eps_grad = config.tolerances.eps_grad;

    let mut reports = Vec::new();
    for grid in [config.grid, doubled(config.grid)] {
        let prev = scenario.state(grid, config.bx, t - FD_TIME_STEP)?;
        let state = scenario.state(grid, config.bx, t)?;
        let next = scenario.state(grid, config.bx, t + FD_TIME_STEP)?;
        let fb = divergence_flux_residual(&prev, &state, &next, &field, &window, eps_grad)?;
        // identity form: lateral flux equals the difference of the cap fluxes
        reports.push((
            resolution_label(grid),
            IdentityReport::new(fb.lateral, fb.cap_lo - fb.cap_hi, 0.0),
        ));
    }
    let fine = reports.pop().unwrap();
    let coarse = reports.pop().unwrap();
    let mut rows = Vec::new();
    push_pair(&mut rows, "flux", coarse, fine, tolerance::FLUX, true);
    Ok(rows)
}
