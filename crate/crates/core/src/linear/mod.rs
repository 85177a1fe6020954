//! Pointwise multilinear algebra of a G2-structure on a 7-dimensional space.

pub mod diamond;
mod forms;
mod frame;
mod standard;

pub use diamond::{
    diamond_phi, diamond_psi, phi_contract, project2, project3, project4, skew7_vector, Decomp2, Decomp3, Decomp4,
};
pub use forms::{
    factorial, mask_indices, merge_sign, sort_sign, tables, AltForm, Compound, Tables, BINOM, DIM, MAX_COMPONENTS,
};
pub use frame::{hodge_star, hodge_star_metric, metric_from_phi, G2Frame};
pub use standard::{
    phi0, phi0_entries, phi_from_table, psi0, psi0_entries, standard_phi, standard_psi, Phi0Table, PHI0_TERMS,
};

pub type Tensor2 = nalgebra::SMatrix<f64, 7, 7>;
pub type Vector7 = nalgebra::SVector<f64, 7>;

/// 2-tensor from a degree-2 form, t_ij = α_ij.
pub fn form2_to_tensor(a: &AltForm) -> Tensor2 {
    assert_eq!(a.degree(), 2);
    let mut t = Tensor2::zeros();
    for (n, &m) in tables().combos[2].iter().enumerate() {
        let mut it = mask_indices(m);
        let (i, j) = (it.next().unwrap(), it.next().unwrap());
        t[(i, j)] = a[n];
        t[(j, i)] = -a[n];
    }
    t
}

/// Degree-2 form from the antisymmetric part of a 2-tensor.
pub fn tensor_to_form2(t: &Tensor2) -> AltForm {
    let mut a = AltForm::zero(2);
    for (n, &m) in tables().combos[2].iter().enumerate() {
        let mut it = mask_indices(m);
        let (i, j) = (it.next().unwrap(), it.next().unwrap());
        a[n] = 0.5 * (t[(i, j)] - t[(j, i)]);
    }
    a
}

/// Degree-1 form with the given components.
pub fn vector_to_form1(v: &Vector7) -> AltForm {
    AltForm::from_coeffs(1, v.as_slice())
}

pub fn form1_to_vector(a: &AltForm) -> Vector7 {
    assert_eq!(a.degree(), 1);
    Vector7::from_column_slice(a.coeffs())
}

pub fn sym(t: &Tensor2) -> Tensor2 {
    (t + t.transpose()) * 0.5
}

pub fn skew(t: &Tensor2) -> Tensor2 {
    (t - t.transpose()) * 0.5
}
