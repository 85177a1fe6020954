use super::{Field, GridSpec, Shape};
use crate::exec;

/// Periodic 5-point stencil along `dim`: w0·f(x) + w1·(f(x+h) ± f(x−h))
/// + w2·(f(x+2h) ± f(x−2h)), antisymmetric when `odd`.
#[derive(Clone, Copy)]
struct Stencil {
    w: [f64; 3],
    odd: bool,
}

fn apply_stencil(grid: &GridSpec, dim: usize, st: Stencil, src: &[f64], dst: &mut [f64]) {
    let s = grid.stride(dim).expect("active dimension");
    let n = grid.n;
    let block = n * s;
    let sg = if st.odd { -1.0 } else { 1.0 };
    let [w0, w1, w2] = st.w;
    for (src_b, dst_b) in src.chunks(block).zip(dst.chunks_mut(block)) {
        for i in 0..n {
            let im2 = ((i + n - 2) % n) * s;
            let im1 = ((i + n - 1) % n) * s;
            let ip1 = ((i + 1) % n) * s;
            let ip2 = ((i + 2) % n) * s;
            let row = &mut dst_b[i * s..(i + 1) * s];
            for (q, d) in row.iter_mut().enumerate() {
                *d = w0 * src_b[i * s + q]
                    + w1 * (src_b[ip1 + q] + sg * src_b[im1 + q])
                    + w2 * (src_b[ip2 + q] + sg * src_b[im2 + q]);
            }
        }
    }
}

fn stencil_field(f: &Field, dim: usize, st: Stencil) -> Field {
    let grid = *f.grid();
    let mut out = Field::zeros(grid, f.shape());
    if !grid.is_active(dim) {
        return out;
    }
    let npts = grid.npts();
    let src = f.data();
    exec::for_each_chunk(out.data_mut(), npts, |c, dst| {
        apply_stencil(&grid, dim, st, &src[c * npts..(c + 1) * npts], dst)
    });
    out
}

/// Fourth-order central difference along `dim`; zero along inactive
/// dimensions.
pub fn partial(f: &Field, dim: usize) -> Field {
    let h = f.grid().h();
    let a = 1.0 / (12.0 * h);
    stencil_field(
        f,
        dim,
        Stencil {
            w: [0.0, 8.0 * a, -a],
            odd: true,
        },
    )
}

/// ∂_a∂_b with the compact second-difference stencil on the diagonal.
pub fn second_partial(f: &Field, a: usize, b: usize) -> Field {
    if a == b {
        let h = f.grid().h();
        let c = 1.0 / (12.0 * h * h);
        stencil_field(
            f,
            a,
            Stencil {
                w: [-30.0 * c, 16.0 * c, -c],
                odd: false,
            },
        )
    } else {
        partial(&partial(f, a), b)
    }
}

/// Gradient of a scalar field as a 1-form field.
pub fn gradient(f: &Field) -> Field {
    assert_eq!(f.shape(), Shape::Scalar);
    let grid = *f.grid();
    let npts = grid.npts();
    let mut out = Field::zeros(grid, Shape::Form(1));
    for d in grid.active_dims() {
        let p = partial(f, d);
        out.comp_mut(d).copy_from_slice(&p.data()[..npts]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_err(n: usize) -> f64 {
        let g = GridSpec::new(n, &[0]).unwrap();
        let f = Field::sample(g, Shape::Scalar, |x, o| o[0] = x[0].sin());
        let d = partial(&f, 0);
        let exact = Field::sample(g, Shape::Scalar, |x, o| o[0] = x[0].cos());
        d.sub(&exact).max_abs()
    }

    #[test]
    fn derivative_of_sine() {
        let g = GridSpec::new(32, &[0]).unwrap();
        let h = g.h();
        assert!(sin_err(32) < h.powi(4));
    }

    #[test]
    fn fourth_order_convergence() {
        let r = sin_err(16) / sin_err(32);
        assert!((16.0 * 0.7..=16.0 * 1.3).contains(&r), "ratio {r}");
    }

    #[test]
    fn constants_and_inactive_dims() {
        let g = GridSpec::new(8, &[1, 2]).unwrap();
        let f = Field::constant_scalar(g, 3.5);
        assert_eq!(partial(&f, 1).max_abs(), 0.0);
        let s = Field::sample(g, Shape::Scalar, |x, o| o[0] = x[1].sin());
        assert_eq!(partial(&s, 0).max_abs(), 0.0);
        assert_eq!(partial(&s, 2).max_abs(), 0.0);
    }

    #[test]
    fn translation_equivariance() {
        let g = GridSpec::new(16, &[0, 3]).unwrap();
        let f = Field::sample(g, Shape::Scalar, |x, o| {
            o[0] = (x[0] + 2.0 * x[3]).sin() + (x[3]).cos().powi(3)
        });
        for d in [0, 3] {
            let a = partial(&f.shifted(d, 3), 3);
            let b = partial(&f, 3).shifted(d, 3);
            assert!(a.sub(&b).max_abs() < 1e-13);
        }
    }

    #[test]
    fn second_derivatives() {
        let g = GridSpec::new(32, &[0, 1]).unwrap();
        let f = Field::sample(g, Shape::Scalar, |x, o| o[0] = x[0].sin() * x[1].cos());
        let dxx = second_partial(&f, 0, 0);
        let dxy = second_partial(&f, 0, 1);
        let exx = Field::sample(g, Shape::Scalar, |x, o| o[0] = -x[0].sin() * x[1].cos());
        let exy = Field::sample(g, Shape::Scalar, |x, o| o[0] = -x[0].cos() * x[1].sin());
        assert!(dxx.sub(&exx).max_abs() < 1e-4);
        assert!(dxy.sub(&exy).max_abs() < 1e-4);
    }
}
