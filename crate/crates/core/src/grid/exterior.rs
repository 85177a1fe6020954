use super::{partial, Field, Shape};
use crate::error::{G2Error, Result};
use crate::linear::{hodge_star_metric, merge_sign, tables};

pub(crate) fn form_shape(k: usize) -> Shape {
    if k == 0 {
        Shape::Scalar
    } else {
        Shape::Form(k)
    }
}

fn form_degree(f: &Field) -> Result<usize> {
    match f.shape() {
        Shape::Form(k) => Ok(k),
        Shape::Scalar => Ok(0),
        s => Err(G2Error::Shape(format!("expected a form field, got {s:?}"))),
    }
}

/// Exterior derivative dα = Σ_a dx^a ∧ ∂_a α.
pub fn exterior_d(f: &Field) -> Result<Field> {
    let k = form_degree(f)?;
    if k >= 7 {
        return Err(G2Error::Shape("exterior derivative of a 7-form".into()));
    }
    let grid = *f.grid();
    let npts = grid.npts();
    let t = tables();
    let mut out = Field::zeros(grid, Shape::Form(k + 1));
    for a in grid.active_dims() {
        let da = partial(f, a);
        for (j, &mj) in t.combos[k + 1].iter().enumerate() {
            if mj & (1 << a) == 0 {
                continue;
            }
            let rest = mj & !(1 << a);
            let i = t.pos[rest as usize] as usize;
            let s = merge_sign(1 << a, rest);
            let src = &da.data()[i * npts..(i + 1) * npts];
            for (o, x) in out.comp_mut(j).iter_mut().zip(src) {
                *o += s * x;
            }
        }
    }
    Ok(out)
}

/// Pointwise Hodge star for a metric field (coordinate orientation).
pub fn hodge_star_field(f: &Field, metric: &Field) -> Result<Field> {
    let k = form_degree(f)?;
    if metric.shape() != Shape::Tensor(2) || metric.grid() != f.grid() {
        return Err(G2Error::Shape(
            "metric field must be a 2-tensor on the same grid".into(),
        ));
    }
    Field::try_from_fn(*f.grid(), form_shape(7 - k), |p, out| {
        let s = hodge_star_metric(&metric.tensor2(p), &f.form(p))?;
        out.copy_from_slice(s.coeffs());
        Ok(())
    })
}

/// d* = (−1)^k ⋆d⋆ on k-forms.
pub fn codifferential(f: &Field, metric: &Field) -> Result<Field> {
    let k = form_degree(f)?;
    if k == 0 {
        return Err(G2Error::Shape("codifferential of a function".into()));
    }
    let inner = exterior_d(&hodge_star_field(f, metric)?)?;
    let out = hodge_star_field(&inner, metric)?;
    Ok(if k % 2 == 0 { out } else { out.scale(-1.0) })
}

/// Pointwise wedge product.
pub fn wedge_fields(a: &Field, b: &Field) -> Result<Field> {
    let (ka, kb) = (form_degree(a)?, form_degree(b)?);
    if ka + kb > 7 || a.grid() != b.grid() {
        return Err(G2Error::Shape(format!("cannot wedge degrees {ka} and {kb}")));
    }
    let t = tables();
    let grid = *a.grid();
    let npts = grid.npts();
    let mut out = Field::zeros(grid, form_shape(ka + kb));
    for (i, &mi) in t.combos[ka].iter().enumerate() {
        for (j, &mj) in t.combos[kb].iter().enumerate() {
            if mi & mj != 0 {
                continue;
            }
            let s = merge_sign(mi, mj);
            let o = t.pos[(mi | mj) as usize] as usize;
            let (xa, xb) = (a.comp(i), b.comp(j));
            let dst = &mut out.data_mut()[o * npts..(o + 1) * npts];
            for p in 0..npts {
                dst[p] += s * xa[p] * xb[p];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::linear::{standard_phi, AltForm, Tensor2, BINOM};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn trig_form(g: GridSpec, k: usize, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nc = BINOM[k];
        let coef: Vec<[f64; 4]> = (0..nc)
            .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
            .collect();
        let dims = g.active_dims();
        Field::sample(g, Shape::Form(k), move |x, o| {
            for (c, v) in o.iter_mut().enumerate() {
                let a = &coef[c];
                let s: f64 = dims.iter().map(|&d| x[d]).sum();
                *v = a[0] * (x[dims[0]] + a[3]).sin() + a[1] * s.cos() + a[2];
            }
        })
    }

    fn flat_metric(g: GridSpec) -> Field {
        Field::sample(g, Shape::Tensor(2), |_, o| {
            for i in 0..7 {
                o[i * 7 + i] = 1.0;
            }
        })
    }

    #[test]
    fn d_squared_vanishes() {
        let g = GridSpec::new(16, &[0, 2, 5]).unwrap();
        for k in 0..5 {
            let f = trig_form(g, k, k as u64);
            let dd = exterior_d(&exterior_d(&f).unwrap()).unwrap();
            assert!(dd.max_abs() < 1e-11, "k = {k}: {}", dd.max_abs());
        }
    }

    #[test]
    fn d_of_constant_is_zero() {
        let g = GridSpec::new(8, &[0, 1]).unwrap();
        let f = Field::constant_form(g, &standard_phi());
        assert_eq!(exterior_d(&f).unwrap().max_abs(), 0.0);
        let s = codifferential(&f, &flat_metric(g)).unwrap();
        assert_eq!(s.max_abs(), 0.0);
    }

    #[test]
    fn d_of_one_form_component() {
        // d(u dx¹) = ∂₂u dx²∧dx¹ with u = sin(x₂)
        let g = GridSpec::new(32, &[1]).unwrap();
        let f = Field::sample(g, Shape::Form(1), |x, o| o[0] = x[1].sin());
        let d = exterior_d(&f).unwrap();
        let t = tables();
        let c01 = t.pos[0b11] as usize;
        for p in 0..g.npts() {
            let x = g.coords(p);
            assert!((d.at(p, c01) + x[1].cos()).abs() < 1e-4);
        }
    }

    #[test]
    fn flat_codifferential_of_one_form() {
        let g = GridSpec::new(32, &[0]).unwrap();
        let f = Field::sample(g, Shape::Form(1), |x, o| o[0] = x[0].sin());
        let s = codifferential(&f, &flat_metric(g)).unwrap();
        let e = Field::sample(g, Shape::Scalar, |x, o| o[0] = -x[0].cos());
        assert!(s.sub(&e).max_abs() < 1e-4);
    }

    #[test]
    fn adjointness_of_codifferential() {
        let g = GridSpec::new(32, &[0, 3]).unwrap();
        let metric = Field::sample(g, Shape::Tensor(2), |x, o| {
            let mut m = Tensor2::identity();
            m[(0, 0)] += 0.2 * x[3].sin();
            m[(0, 3)] = 0.1 * x[0].cos();
            m[(3, 0)] = 0.1 * x[0].cos();
            m[(5, 5)] = 1.0 + 0.1 * (x[0] + x[3]).sin();
            o.copy_from_slice(m.transpose().as_slice());
        });
        let a = trig_form(g, 2, 7);
        let b = trig_form(g, 3, 8);
        let da = exterior_d(&a).unwrap();
        let dsb = codifferential(&b, &metric).unwrap();
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for p in 0..g.npts() {
            let m = metric.tensor2(p);
            let star = |x: AltForm| hodge_star_metric(&m, &x).unwrap();
            lhs += da.form(p).wedge(&star(b.form(p)))[0];
            rhs += a.form(p).wedge(&star(dsb.form(p)))[0];
        }
        assert!((lhs - rhs).abs() < 1e-6 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}
