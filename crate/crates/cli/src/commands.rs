//! The four subcommands. Each reads its configuration, writes its outputs
//! under the output directory and returns the process exit code.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use g2flow::flow::{run_with, DiagnosticsRecord, FlowState, HaltReason};
use g2flow::generators::{rng_from_seed, CoclosedGenerator};
use g2flow::grid::{write_snapshot, SnapshotFormat};
use g2flow::identities::{algebraic_suite, field_suite, IdentityGroup};
use g2flow::linear::standard_phi;
use g2flow::reduction::{
    ccc_metric_from_potential, lift_to_g2, potential, reduction_check, reduction_grid, reference_volume,
};
use g2flow::report::Residual;
use g2flow::symbol::sharpness_search;
use g2flow::{Field, GridSpec};
use serde::Serialize;

use crate::args::{Command, Common};
use crate::config::{load, FlowRunConfig, IdentitiesConfig, InitialData, ReduceConfig, SymbolConfig};
use crate::error::{CliError, ExitCode, Result};
use crate::table::{Table, SCHEMA_VERSION};

pub fn dispatch(command: Command, common: &Common) -> Result<ExitCode> {
    if !(common.tolerance_scale > 0.0 && common.tolerance_scale.is_finite()) {
        return Err(CliError::Config(format!(
            "tolerance scale must be positive, got {}",
            common.tolerance_scale
        )));
    }
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        g2flow::exec::init_threads(n);
    }
    std::fs::create_dir_all(&common.out).map_err(|e| CliError::io(&common.out, e))?;
    match command {
        Command::Identities => identities(common),
        Command::Flow => flow(common),
        Command::Symbol => symbol(common),
        Command::Reduce => reduce(common),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Config(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_table(path: &Path, t: &Table) -> Result<()> {
    let mut w = create(path)?;
    t.write(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct IdentitiesReport<'a> {
    schema_version: u32,
    seed: u64,
    tolerance_scale: f64,
    pass: bool,
    groups: &'a [IdentityGroup],
}

pub fn identities(common: &Common) -> Result<ExitCode> {
    let mut cfg: IdentitiesConfig = load(common.config.as_deref())?;
    cfg.validate()?;
    cfg.algebraic.tolerance *= common.tolerance_scale;
    cfg.field.tolerance *= common.tolerance_scale;
    let mut groups = algebraic_suite(&cfg.phi0_table, &cfg.algebraic, common.seed);
    groups.extend(field_suite(&cfg.field, common.seed.wrapping_add(1))?);
    let pass = groups.iter().all(|g| g.pass);
    write_json(
        &common.out.join("identities.json"),
        &IdentitiesReport {
            schema_version: SCHEMA_VERSION,
            seed: common.seed,
            tolerance_scale: common.tolerance_scale,
            pass,
            groups: &groups,
        },
    )?;
    for g in &groups {
        let tag = if g.pass { "pass" } else { "FAIL" };
        println!("{tag} {:<24} {:.3e} (tol {:.1e})", g.name, g.max_error, g.tolerance);
    }
    if pass {
        return Ok(ExitCode::Pass);
    }
    let failed: Vec<&str> = groups.iter().filter(|g| !g.pass).map(|g| g.name.as_str()).collect();
    eprintln!("identity failure: {}", failed.join(", "));
    Ok(ExitCode::IdentityFailure)
}

fn initial_state(init: &InitialData, seed: u64) -> Result<FlowState> {
    Ok(match init {
        InitialData::Flat { n, dims } => {
            let grid = GridSpec::new(*n, dims)?;
            FlowState::new(
                Field::constant_form(grid, &standard_phi()),
                Field::constant_scalar(grid, 1.0),
            )?
        }
        InitialData::Ccc {
            n,
            dims,
            beta_amp,
            f_amp,
        } => {
            let grid = GridSpec::new(*n, dims)?;
            let mut rng = rng_from_seed(seed);
            let s = CoclosedGenerator::random(&grid, *beta_amp, *f_amp, &mut rng).sample(grid)?;
            FlowState::new(s.phi, s.vol_r)?
        }
        InitialData::Lift { n, torus_dims, modes } => {
            let grid = reduction_grid(*n, torus_dims)?;
            let data = ccc_metric_from_potential(grid, &potential(modes))?;
            FlowState::new(lift_to_g2(&data), reference_volume(grid))?
        }
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunSummary {
    schema_version: u32,
    seed: u64,
    steps: usize,
    final_t: f64,
    records: usize,
    unsupported_by_theory: bool,
    halt: Option<HaltReason>,
}

pub fn flow(common: &Common) -> Result<ExitCode> {
    let cfg: FlowRunConfig = load(common.config.as_deref())?;
    cfg.validate()?;
    let initial = initial_state(&cfg.initial, common.seed)?;
    let snap_dir = common.out.join("snapshots");
    if cfg.snapshot_every.is_some() {
        std::fs::create_dir_all(&snap_dir).map_err(|e| CliError::io(&snap_dir, e))?;
    }
    let nsteps = cfg.flow.steps();
    let mut seen = 0usize;
    let mut snap_err = None;
    let out = run_with(&cfg.flow, initial, |s| {
        let k = seen;
        seen += 1;
        let Some(every) = cfg.snapshot_every else { return };
        if snap_err.is_some() || !(k.is_multiple_of(every) || k == nsteps) {
            return;
        }
        let path = snap_dir.join(format!("phi_{k:06}.json"));
        let res = create(&path).and_then(|mut w| {
            write_snapshot(&s.phi, SnapshotFormat::Json, &mut w)?;
            w.flush().map_err(|e| CliError::io(&path, e))
        });
        if let Err(e) = res {
            snap_err = Some(e);
        }
    })?;
    if let Some(e) = snap_err {
        return Err(e);
    }
    let mut table = Table::new("diagnostics", DiagnosticsRecord::csv_header());
    table.rows = out.records.iter().map(DiagnosticsRecord::csv_row).collect();
    write_table(&common.out.join("diagnostics.csv"), &table)?;
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        seed: common.seed,
        steps: out.steps,
        final_t: out.final_state.t,
        records: out.records.len(),
        unsupported_by_theory: g2flow::flow::unsupported_by_theory(cfg.flow.c),
        halt: out.halt.clone(),
    };
    write_json(&common.out.join("run.json"), &summary)?;
    println!(
        "steps {} t {:.6} records {}",
        out.steps,
        out.final_state.t,
        out.records.len()
    );
    if summary.unsupported_by_theory {
        println!(
            "note: C = {} is outside the range with known short-time existence",
            cfg.flow.c
        );
    }
    Ok(match out.halt {
        None => ExitCode::Pass,
        Some(h) => {
            eprintln!("run halted: {h:?}");
            match h.exit_code() {
                2 => ExitCode::PositivityLoss,
                _ => ExitCode::Blowup,
            }
        }
    })
}

pub const SYMBOL_HEADER: [&str; 5] = ["C", "ratio", "bound", "violated", "unsupportedByTheory"];

pub fn symbol(common: &Common) -> Result<ExitCode> {
    let cfg: SymbolConfig = load(common.config.as_deref())?;
    cfg.validate()?;
    let tol = cfg.tolerance * common.tolerance_scale;
    let mut rng = rng_from_seed(common.seed);
    let mut table = Table::new("symbol", SYMBOL_HEADER.iter().map(|s| s.to_string()).collect());
    let mut violations = Vec::new();
    for &c in &cfg.c_values {
        let res = sharpness_search(c, &cfg.search, &mut rng);
        let bound = 1.0 - c.max(0.0);
        let violated = !(res.ratio >= bound - tol);
        if violated {
            violations.push(c);
        }
        println!("C {c:<8} ratio {:.8} bound {bound:.8}", res.ratio);
        table.rows.push(vec![
            c.to_string(),
            res.ratio.to_string(),
            bound.to_string(),
            u8::from(violated).to_string(),
            u8::from(g2flow::flow::unsupported_by_theory(c)).to_string(),
        ]);
    }
    write_table(&common.out.join("symbol.csv"), &table)?;
    if violations.is_empty() {
        Ok(ExitCode::Pass)
    } else {
        eprintln!("symbol bound violated at C = {violations:?}");
        Ok(ExitCode::IdentityFailure)
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct ReduceReport<'a> {
    schema_version: u32,
    n: usize,
    torus_dims: &'a [usize],
    #[serde(rename = "cValues")]
    c_values: &'a [f64],
    tolerance: f64,
    pass: bool,
    failing: Vec<&'a str>,
    residuals: &'a [Residual],
}

pub fn reduce(common: &Common) -> Result<ExitCode> {
    let cfg: ReduceConfig = load(common.config.as_deref())?;
    cfg.validate()?;
    let tol = cfg.tolerance * common.tolerance_scale;
    let grid = reduction_grid(cfg.n, &cfg.torus_dims)?;
    let data = ccc_metric_from_potential(grid, &potential(&cfg.modes))?;
    let rep = reduction_check(&data, &cfg.c_values)?;
    let failing: Vec<&str> = rep
        .residuals
        .iter()
        .filter(|r| !(r.linf <= tol))
        .map(|r| r.name.as_str())
        .collect();
    for r in &rep.residuals {
        println!("{:<20} l2 {:.3e} linf {:.3e}", r.name, r.l2, r.linf);
    }
    let pass = failing.is_empty();
    if !pass {
        eprintln!("reduction residuals above {tol:e}: {}", failing.join(", "));
    }
    write_json(
        &common.out.join("reduce.json"),
        &ReduceReport {
            schema_version: SCHEMA_VERSION,
            n: cfg.n,
            torus_dims: &cfg.torus_dims,
            c_values: &cfg.c_values,
            tolerance: tol,
            pass,
            failing,
            residuals: &rep.residuals,
        },
    )?;
    Ok(if pass {
        ExitCode::Pass
    } else {
        ExitCode::IdentityFailure
    })
}
