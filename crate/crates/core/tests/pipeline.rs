use g2flow::flow::{flow_rhs, step, FlowConfig, FlowState};
use g2flow::grid::exterior_d;
use g2flow::linear::{form2_to_tensor, AltForm};
use g2flow::reduction::{
    ccc_metric_from_potential, complex_structure, dz123, lift_to_g2, potential, reduction_grid, reference_volume,
    PotentialMode,
};
use g2flow::torsion::ccc_residual;
use g2flow::{Field, Vector7};

fn lifted_state(n: usize) -> FlowState {
    let modes = [
        PotentialMode {
            k: [1, 0, 0, 0, 0, 0],
            cos: 0.0,
            sin: 0.05,
        },
        PotentialMode {
            k: [1, 0, 1, 0, 0, 0],
            cos: 0.03,
            sin: 0.0,
        },
    ];
    let grid = reduction_grid(n, &[1, 3]).unwrap();
    let data = ccc_metric_from_potential(grid, &potential(&modes)).unwrap();
    FlowState::new(lift_to_g2(&data), reference_volume(grid)).unwrap()
}

/// Largest departure of a 3-form field from the tangent space of the lift
/// ansatz: Re dz-proportional without dr, dr∧(1,1)-form with dr.
fn off_ansatz(dphi: &Field) -> f64 {
    let (re, _) = dz123();
    let j = complex_structure();
    let mut e0 = Vector7::zeros();
    e0[0] = 1.0;
    let mut dr = AltForm::zero(1);
    dr.coeffs_mut()[0] = 1.0;
    (0..dphi.npts())
        .map(|p| {
            let a = dphi.form(p);
            let beta = a.interior(&e0);
            let gamma = a - dr.wedge(&beta);
            let along = re * (gamma.dot(&re) / re.dot(&re));
            let b = form2_to_tensor(&beta);
            let off11 = (b - j.transpose() * b * j).abs().max();
            (gamma - along).max_abs().max(off11)
        })
        .fold(0.0, f64::max)
}

#[test]
fn flow_rhs_is_tangent_to_the_lift_ansatz() {
    let cfg = FlowConfig::default();
    let errs: Vec<(f64, f64)> = [16, 32]
        .iter()
        .map(|&n| {
            let (dphi, _) = flow_rhs(&lifted_state(n), &cfg).unwrap();
            (off_ansatz(&dphi), dphi.max_abs())
        })
        .collect();
    let (coarse, fine) = (errs[0].0, errs[1].0);
    assert!(errs[1].1 > 1e-3, "rhs vanishes: {errs:?}");
    assert!(fine < 1e-5 * errs[1].1 && coarse / fine > 8.0, "{errs:?}");
}

#[test]
fn rk4_step_keeps_the_state_coclosed_and_lifted() {
    let s0 = lifted_state(16);
    let cfg = FlowConfig {
        dt: 2e-3,
        ..FlowConfig::default()
    };
    let s1 = step(&s0, &cfg).unwrap();
    let moved = s1.phi.sub(&s0.phi);
    assert!(moved.max_abs() > 1e-6);
    assert!(off_ansatz(&moved) < 1e-2 * moved.max_abs());
    assert!(ccc_residual(&s1.phi, &s1.f).unwrap().linf < 1e-6);
}

#[test]
fn lifted_structure_has_closed_weighted_dual() {
    let s = lifted_state(16);
    let dphi = exterior_d(&s.phi).unwrap();
    assert!(dphi.max_abs() > 1e-3);
    assert!(ccc_residual(&s.phi, &s.f).unwrap().linf < 1e-4);
}
