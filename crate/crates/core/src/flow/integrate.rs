use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::curvature::soliton_residual;
use crate::error::{G2Error, Result};
use crate::exact4::fixed_point_direct;
use crate::geometry::Geometry;
use crate::grid::Field;
use crate::report::Residual;
use crate::torsion::{ccc_residual, kernels, weighted_psi};

use super::config::{DilatonMode, FlowConfig, FlowState, Stepper};
use super::flux::{hc_definition, rhs_with_geometry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "trT_L2")]
    pub tr_t_l2: f64,
    #[serde(rename = "tau0_L2")]
    pub tau0_l2: f64,
    #[serde(rename = "tau3_L2")]
    pub tau3_l2: f64,
    #[serde(rename = "gradf_L2")]
    pub gradf_l2: f64,
    pub ccc_residual: f64,
    pub scal_min: f64,
    pub scal_max: f64,
    #[serde(rename = "trS_L2")]
    pub tr_s_l2: f64,
    #[serde(rename = "s7_L2")]
    pub s7_l2: f64,
    #[serde(rename = "s27_L2")]
    pub s27_l2: f64,
    pub soliton_residual: f64,
    pub cohomology_periods: Vec<f64>,
    /// Set when C ≥ 1, where short-time existence is not known.
    pub unsupported_by_theory: bool,
}

/// Fixed CSV columns; the 35 periods follow as `period_00` … `period_34`.
pub const CSV_HEADER: [&str; 14] = [
    "t",
    "trT_L2",
    "tau0_L2",
    "tau3_L2",
    "gradf_L2",
    "cccResidual",
    "scalMin",
    "scalMax",
    "trS_L2",
    "s7_L2",
    "s27_L2",
    "solitonResidual",
    "unsupportedByTheory",
    "nPeriods",
];

impl DiagnosticsRecord {
    pub fn csv_header() -> Vec<String> {
        let mut h: Vec<String> = CSV_HEADER.iter().map(|s| s.to_string()).collect();
        h.extend((0..35).map(|i| format!("period_{i:02}")));
        h
    }

    pub fn csv_row(&self) -> Vec<String> {
        let mut r: Vec<String> = [
            self.t,
            self.tr_t_l2,
            self.tau0_l2,
            self.tau3_l2,
            self.gradf_l2,
            self.ccc_residual,
            self.scal_min,
            self.scal_max,
            self.tr_s_l2,
            self.s7_l2,
            self.s27_l2,
            self.soliton_residual,
        ]
        .iter()
        .map(|x| format!("{x:e}"))
        .collect();
        r.push(u8::from(self.unsupported_by_theory).to_string());
        r.push(self.cohomology_periods.len().to_string());
        r.extend(self.cohomology_periods.iter().map(|x| format!("{x:e}")));
        r
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.tr_t_l2,
            self.tau0_l2,
            self.tau3_l2,
            self.gradf_l2,
            self.ccc_residual,
            self.scal_min,
            self.scal_max,
            self.tr_s_l2,
            self.s7_l2,
            self.s27_l2,
            self.soliton_residual,
        ]
        .iter()
        .chain(&self.cohomology_periods)
        .all(|x| x.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum HaltReason {
    NonPositiveForm(String),
    NumericalBlowup(String),
}

impl HaltReason {
    pub fn exit_code(&self) -> i32 {
        match self {
            HaltReason::NonPositiveForm(_) => 2,
            HaltReason::NumericalBlowup(_) => 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub records: Vec<DiagnosticsRecord>,
    pub final_state: FlowState,
    pub steps: usize,
    pub halt: Option<HaltReason>,
}

pub fn unsupported_by_theory(c: f64) -> bool {
    c >= 1.0
}

/// (2π)⁴ times the grid mean of each component of e^{−2f}ψ.
pub fn cohomology_periods(frames: &[crate::linear::G2Frame], f: &Field) -> Vec<f64> {
    let w = weighted_psi(frames, f);
    let vol4 = (2.0 * PI).powi(4);
    (0..35).map(|c| vol4 * w.mean(c)).collect()
}

fn l2(grid: crate::grid::GridSpec, v: &[f64]) -> f64 {
    Residual::from_pointwise("", grid, v).l2
}

pub fn diagnostics(state: &FlowState, config: &FlowConfig) -> Result<DiagnosticsRecord> {
    let geo = Geometry::with_dilaton(&state.phi, &state.f)?;
    let grid = geo.grid;
    let n = geo.npts();
    let pts: Vec<[f64; 4]> = crate::exec::map_indices(n, |p| {
        let fp = geo.frame_point(p);
        [
            fp.t.trace(),
            kernels::tau0(&fp.t),
            kernels::tau3p(&fp.t).norm(),
            fp.df.norm(),
        ]
    });
    let col = |k: usize| -> Vec<f64> { pts.iter().map(|r| r[k]).collect() };
    let ricci = geo.curvature_fd()?.ricci();
    let scal: Vec<f64> = (0..n).map(|p| geo.frames[p].trace(&ricci.tensor2(p))).collect();
    let fixed = fixed_point_direct(&geo, config.c);
    let cmp = |a: &Field| -> f64 { Residual::from_field("", a).l2 };
    let s7: Vec<f64> = (0..n)
        .map(|p| geo.frames[p].to_frame_covector(&fixed.s7.vector(p)).norm())
        .collect();
    let s27: Vec<f64> = (0..n)
        .map(|p| geo.frames[p].t2_norm2(&fixed.s27.tensor2(p)).sqrt())
        .collect();
    let h = hc_definition(&geo, config.c)?;
    let sol = soliton_residual(&geo.g, &h, &geo.f)?;
    let einstein: Vec<f64> = (0..n)
        .map(|p| geo.frames[p].t2_norm2(&sol.einstein.tensor2(p)).sqrt())
        .collect();
    let rec = DiagnosticsRecord {
        t: state.t,
        tr_t_l2: l2(grid, &col(0)),
        tau0_l2: l2(grid, &col(1)),
        tau3_l2: l2(grid, &col(2)),
        gradf_l2: l2(grid, &col(3)),
        ccc_residual: ccc_residual(&state.phi, &state.f)?.linf,
        scal_min: scal.iter().cloned().fold(f64::INFINITY, f64::min),
        scal_max: scal.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        tr_s_l2: cmp(&fixed.tr_s),
        s7_l2: l2(grid, &s7),
        s27_l2: l2(grid, &s27),
        soliton_residual: l2(grid, &einstein),
        cohomology_periods: cohomology_periods(&geo.frames, &geo.f),
        unsupported_by_theory: unsupported_by_theory(config.c),
    };
    if !rec.is_finite() {
        return Err(G2Error::NumericalBlowup(format!(
            "non-finite diagnostics at t = {}",
            state.t
        )));
    }
    Ok(rec)
}

fn advance(base: &FlowState, k: &(Field, Field), h: f64, mode: DilatonMode) -> Result<FlowState> {
    let mut s = FlowState {
        phi: base.phi.axpy(h, &k.0),
        f: base.f.axpy(h, &k.1),
        t: base.t + h,
        vol_r: base.vol_r.clone(),
    };
    if mode == DilatonMode::Recompute {
        s.recompute_dilaton()?;
    }
    Ok(s)
}

fn rhs(state: &FlowState, config: &FlowConfig) -> Result<(Field, Field)> {
    let (a, b, _) = rhs_with_geometry(state, config)?;
    Ok((a, b))
}

/// One step of size `config.dt`.
pub fn step(state: &FlowState, config: &FlowConfig) -> Result<FlowState> {
    let dt = config.dt;
    let mode = config.dilaton_mode;
    let next = match config.stepper {
        Stepper::Euler => advance(state, &rhs(state, config)?, dt, mode)?,
        Stepper::Rk4 => {
            let k1 = rhs(state, config)?;
            let k2 = rhs(&advance(state, &k1, 0.5 * dt, mode)?, config)?;
            let k3 = rhs(&advance(state, &k2, 0.5 * dt, mode)?, config)?;
            let k4 = rhs(&advance(state, &k3, dt, mode)?, config)?;
            let comb = |a: &Field, b: &Field, c: &Field, d: &Field| a.axpy(2.0, b).axpy(2.0, c).add(d).scale(1.0 / 6.0);
            let k = (comb(&k1.0, &k2.0, &k3.0, &k4.0), comb(&k1.1, &k2.1, &k3.1, &k4.1));
            advance(state, &k, dt, mode)?
        }
    };
    if !next.phi.is_finite() || !next.f.is_finite() {
        return Err(G2Error::NumericalBlowup(format!("non-finite state at t = {}", next.t)));
    }
    Ok(next)
}

pub fn run(config: &FlowConfig, initial: FlowState) -> Result<RunOutput> {
    run_with(config, initial, |_| {})
}

/// Integrates to `t_end`, calling `observe` on the initial state and after
/// every step. NonPositiveForm and NumericalBlowup end the run early with a
/// halt reason; other errors are returned.
pub fn run_with(config: &FlowConfig, initial: FlowState, mut observe: impl FnMut(&FlowState)) -> Result<RunOutput> {
    config.validate()?;
    let nsteps = config.steps();
    let mut state = initial;
    let mut records = Vec::new();
    let mut halt = None;
    let mut taken = 0;
    observe(&state);
    let record = |s: &FlowState, records: &mut Vec<DiagnosticsRecord>| -> Result<Option<HaltReason>> {
        match diagnostics(s, config) {
            Ok(r) => {
                records.push(r);
                Ok(None)
            }
            Err(e) => classify(e),
        }
    };
    if let Some(h) = record(&state, &mut records)? {
        halt = Some(h);
    }
    while halt.is_none() && taken < nsteps {
        let mut cfg = config.clone();
        cfg.dt = config.dt.min(config.t_end - state.t).max(config.dt * 1e-9);
        match step(&state, &cfg) {
            Ok(s) => state = s,
            Err(e) => {
                halt = classify(e)?;
                break;
            }
        }
        taken += 1;
        observe(&state);
        if taken % config.diagnostics_every == 0 || taken == nsteps {
            halt = record(&state, &mut records)?;
        }
    }
    Ok(RunOutput {
        records,
        final_state: state,
        steps: taken,
        halt,
    })
}

fn classify(e: G2Error) -> Result<Option<HaltReason>> {
    match e {
        G2Error::NonPositiveForm(m) | G2Error::DegenerateMetric(m) => Ok(Some(HaltReason::NonPositiveForm(m))),
        G2Error::NumericalBlowup(m) => Ok(Some(HaltReason::NumericalBlowup(m))),
        other => Err(other),
    }
}
