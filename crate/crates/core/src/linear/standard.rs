//! The standard flat G2-structure.
//!
//! φ₀ = e123 − e167 − e527 − e563 − e415 − e426 − e437 (1-based indices).
//! With this table the induced metric is the identity, the orientation is
//! e1234567 and ψ₀ = ⋆φ₀ satisfies φ_ijk φ_abk = δ_ia δ_jb − δ_ib δ_ja − ψ_ijab.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::forms::AltForm;

/// One signed unit term of φ₀, written with 1-based indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phi0Table {
    pub indices: [usize; 3],
    pub sign: i8,
}

pub const PHI0_TERMS: [Phi0Table; 7] = [
    Phi0Table {
        indices: [1, 2, 3],
        sign: 1,
    },
    Phi0Table {
        indices: [1, 6, 7],
        sign: -1,
    },
    Phi0Table {
        indices: [5, 2, 7],
        sign: -1,
    },
    Phi0Table {
        indices: [5, 6, 3],
        sign: -1,
    },
    Phi0Table {
        indices: [4, 1, 5],
        sign: -1,
    },
    Phi0Table {
        indices: [4, 2, 6],
        sign: -1,
    },
    Phi0Table {
        indices: [4, 3, 7],
        sign: -1,
    },
];

pub fn standard_phi() -> AltForm {
    dense().phi_form
}

pub fn phi_from_table(terms: &[Phi0Table]) -> AltForm {
    let mut phi = AltForm::zero(3);
    for t in terms {
        let idx = [t.indices[0] - 1, t.indices[1] - 1, t.indices[2] - 1];
        phi.add_term(&idx, t.sign as f64);
    }
    phi
}

pub fn standard_psi() -> AltForm {
    dense().psi_form
}

struct Dense {
    phi_form: AltForm,
    psi_form: AltForm,
    phi: Vec<f64>,
    psi: Vec<f64>,
    phi_entries: Vec<([usize; 3], f64)>,
    psi_entries: Vec<([usize; 4], f64)>,
}

fn dense() -> &'static Dense {
    static D: OnceLock<Dense> = OnceLock::new();
    D.get_or_init(|| {
        let phi_form = phi_from_table(&PHI0_TERMS);
        let psi_form = phi_form.flat_star();
        let phi = phi_form.to_dense();
        let psi = psi_form.to_dense();
        let mut phi_entries = Vec::new();
        for (lin, &v) in phi.iter().enumerate() {
            if v != 0.0 {
                phi_entries.push(([lin / 49, (lin / 7) % 7, lin % 7], v));
            }
        }
        let mut psi_entries = Vec::new();
        for (lin, &v) in psi.iter().enumerate() {
            if v != 0.0 {
                psi_entries.push(([lin / 343, (lin / 49) % 7, (lin / 7) % 7, lin % 7], v));
            }
        }
        Dense {
            phi_form,
            psi_form,
            phi,
            psi,
            phi_entries,
            psi_entries,
        }
    })
}

/// Dense φ₀ indexed as `[i*49 + j*7 + k]`.
pub fn phi0() -> &'static [f64] {
    &dense().phi
}

/// Dense ψ₀ indexed as `[i*343 + j*49 + k*7 + l]`.
pub fn psi0() -> &'static [f64] {
    &dense().psi
}

/// All 42 nonzero ordered entries of φ₀.
pub fn phi0_entries() -> &'static [([usize; 3], f64)] {
    &dense().phi_entries
}

/// All 168 nonzero ordered entries of ψ₀.
pub fn psi0_entries() -> &'static [([usize; 4], f64)] {
    &dense().psi_entries
}
