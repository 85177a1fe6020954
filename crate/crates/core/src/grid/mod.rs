//! Fields on flat periodic tori and their discrete calculus.
//!
//! Every active dimension has period 2π and `n` equally spaced points;
//! fields are constant along inactive dimensions. Values are stored as
//! structure-of-arrays: component `c` of point `p` lives at `c * npts + p`.

mod connection;
mod exterior;
mod snapshot;
mod stencil;

pub use connection::{
    christoffel, covariant_derivative, covariant_derivative_form, form_grad_at, hessian, ricci_fd, CurvatureFd,
};
pub use exterior::{codifferential, exterior_d, hodge_star_field, wedge_fields};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotFormat};
pub use stencil::{gradient, partial, second_partial};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{G2Error, Result};
use crate::exec;
use crate::linear::{AltForm, Tensor2, Vector7, BINOM};

pub const DEFAULT_POINT_BUDGET: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub active: [bool; 7],
}

impl GridSpec {
    /// Grid with `n` points along each of `dims` (0-based).
    pub fn new(n: usize, dims: &[usize]) -> Result<Self> {
        Self::with_budget(n, dims, DEFAULT_POINT_BUDGET)
    }

    pub fn with_budget(n: usize, dims: &[usize], budget: usize) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(G2Error::Config(format!(
                "points per dimension must be even and at least 8, got {n}"
            )));
        }
        let mut active = [false; 7];
        for &d in dims {
            if d >= 7 {
                return Err(G2Error::Config(format!("dimension {d} out of range")));
            }
            active[d] = true;
        }
        let g = Self { n, active };
        let total = (n as f64).powi(g.n_active() as i32);
        if total > budget as f64 {
            return Err(G2Error::Config(format!(
                "{total} grid points exceed the budget of {budget}"
            )));
        }
        Ok(g)
    }

    pub fn n_active(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn active_dims(&self) -> Vec<usize> {
        (0..7).filter(|&d| self.active[d]).collect()
    }

    pub fn is_active(&self, dim: usize) -> bool {
        self.active[dim]
    }

    pub fn h(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn npts(&self) -> usize {
        self.n.pow(self.n_active() as u32)
    }

    /// Point stride along an active dimension; the lowest active
    /// dimension varies fastest.
    pub fn stride(&self, dim: usize) -> Option<usize> {
        if !self.active[dim] {
            return None;
        }
        let below = (0..dim).filter(|&d| self.active[d]).count();
        Some(self.n.pow(below as u32))
    }

    pub fn coords(&self, p: usize) -> [f64; 7] {
        let mut x = [0.0; 7];
        let mut r = p;
        let h = self.h();
        for (d, xd) in x.iter_mut().enumerate() {
            if self.active[d] {
                *xd = (r % self.n) as f64 * h;
                r /= self.n;
            }
        }
        x
    }

    /// Same dimensions at a different resolution.
    pub fn refined(&self, n: usize) -> Result<Self> {
        Self::new(n, &self.active_dims())
    }

    /// Cell volume of the active dimensions.
    pub fn cell_volume(&self) -> f64 {
        self.h().powi(self.n_active() as i32)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Shape {
    Scalar,
    /// Packed k-form.
    Form(usize),
    /// Dense rank-r covariant tensor, row-major in its indices.
    Tensor(usize),
    /// Covariant derivative of a k-form: component `m * C(7,k) + c`.
    FormGrad(usize),
}

impl Shape {
    pub fn ncomp(&self) -> usize {
        match *self {
            Shape::Scalar => 1,
            Shape::Form(k) => BINOM[k],
            Shape::Tensor(r) => 7usize.pow(r as u32),
            Shape::FormGrad(k) => 7 * BINOM[k],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    shape: Shape,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: GridSpec, shape: Shape) -> Self {
        Self {
            grid,
            shape,
            data: vec![0.0; shape.ncomp() * grid.npts()],
        }
    }

    pub fn from_data(grid: GridSpec, shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.ncomp() * grid.npts() {
            return Err(G2Error::Shape(format!(
                "expected {} values for {:?}, got {}",
                shape.ncomp() * grid.npts(),
                shape,
                data.len()
            )));
        }
        Ok(Self { grid, shape, data })
    }

    /// Builds a field pointwise; `f(p, out)` fills the components of point p.
    pub fn from_fn<F>(grid: GridSpec, shape: Shape, f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        Self::try_from_fn(grid, shape, |p, out| {
            f(p, out);
            Ok(())
        })
        .expect("infallible")
    }

    pub fn try_from_fn<F>(grid: GridSpec, shape: Shape, f: F) -> Result<Self>
    where
        F: Fn(usize, &mut [f64]) -> Result<()> + Sync + Send,
    {
        let nc = shape.ncomp();
        let npts = grid.npts();
        let mut aos = vec![0.0; nc * npts];
        exec::try_for_each_chunk(&mut aos, nc, |p, out| f(p, out))?;
        let mut data = vec![0.0; nc * npts];
        for p in 0..npts {
            for c in 0..nc {
                data[c * npts + p] = aos[p * nc + c];
            }
        }
        Ok(Self { grid, shape, data })
    }

    /// Samples a function of the coordinates.
    pub fn sample<F>(grid: GridSpec, shape: Shape, f: F) -> Self
    where
        F: Fn(&[f64; 7], &mut [f64]) + Sync + Send,
    {
        Self::from_fn(grid, shape, |p, out| f(&grid.coords(p), out))
    }

    pub fn constant_form(grid: GridSpec, a: &AltForm) -> Self {
        let a = *a;
        Self::from_fn(grid, Shape::Form(a.degree()), move |_, out| {
            out.copy_from_slice(a.coeffs())
        })
    }

    pub fn constant_scalar(grid: GridSpec, v: f64) -> Self {
        Self {
            grid,
            shape: Shape::Scalar,
            data: vec![v; grid.npts()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn ncomp(&self) -> usize {
        self.shape.ncomp()
    }

    pub fn npts(&self) -> usize {
        self.grid.npts()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        let n = self.npts();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.npts();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn at(&self, p: usize, c: usize) -> f64 {
        self.data[c * self.grid.npts() + p]
    }

    #[inline]
    pub fn set(&mut self, p: usize, c: usize, v: f64) {
        let n = self.grid.npts();
        self.data[c * n + p] = v;
    }

    pub fn point(&self, p: usize, out: &mut [f64]) {
        let n = self.npts();
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.data[c * n + p];
        }
    }

    pub fn point_vec(&self, p: usize) -> Vec<f64> {
        let mut v = vec![0.0; self.ncomp()];
        self.point(p, &mut v);
        v
    }

    pub fn scalar(&self, p: usize) -> f64 {
        self.data[p]
    }

    pub fn form(&self, p: usize) -> AltForm {
        let k = match self.shape {
            Shape::Form(k) => k,
            Shape::Scalar => 0,
            s => panic!("form access on {s:?}"),
        };
        let mut a = AltForm::zero(k);
        self.point(p, a.coeffs_mut());
        a
    }

    pub fn tensor2(&self, p: usize) -> Tensor2 {
        assert_eq!(self.shape, Shape::Tensor(2));
        let n = self.npts();
        Tensor2::from_fn(|i, j| self.data[(i * 7 + j) * n + p])
    }

    /// Vector or 1-form components at a point.
    pub fn vector(&self, p: usize) -> Vector7 {
        assert!(matches!(self.shape, Shape::Tensor(1) | Shape::Form(1)));
        let n = self.npts();
        Vector7::from_fn(|i, _| self.data[i * n + p])
    }

    pub fn check_same(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.shape != other.shape {
            return Err(G2Error::Shape(format!(
                "{:?} on {:?} vs {:?} on {:?}",
                self.shape, self.grid, other.shape, other.grid
            )));
        }
        Ok(())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Field {
        self.check_same(other).expect("field shapes differ");
        Field {
            grid: self.grid,
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid,
            shape: self.shape,
            data: self.data.iter().map(|a| f(*a)).collect(),
        }
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Field {
        self.map(|a| a * s)
    }

    /// self + s·other
    pub fn axpy(&self, s: f64, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// Multiplies every component by a scalar field.
    pub fn mul_scalar_field(&self, s: &Field) -> Field {
        assert_eq!(s.shape, Shape::Scalar);
        assert_eq!(s.grid, self.grid);
        let n = self.npts();
        let mut out = self.clone();
        for c in 0..self.ncomp() {
            for (o, w) in out.data[c * n..(c + 1) * n].iter_mut().zip(&s.data) {
                *o *= w;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Root mean square over points of the component sum of squares.
    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|x| x * x).sum::<f64>() / self.npts() as f64).sqrt()
    }

    /// Mean of each component over the torus.
    pub fn mean(&self, c: usize) -> f64 {
        self.comp(c).iter().sum::<f64>() / self.npts() as f64
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Per-point component sum of squares, the flat-metric pointwise norm².
    pub fn pointwise_norm2(&self) -> Field {
        let n = self.npts();
        let mut out = vec![0.0; n];
        for c in 0..self.ncomp() {
            for (o, x) in out.iter_mut().zip(self.comp(c)) {
                *o += x * x;
            }
        }
        Field {
            grid: self.grid,
            shape: Shape::Scalar,
            data: out,
        }
    }

    /// Cyclic shift by `k` points along an active dimension.
    pub fn shifted(&self, dim: usize, k: isize) -> Field {
        let Some(s) = self.grid.stride(dim) else {
            return self.clone();
        };
        let n = self.grid.n;
        let npts = self.npts();
        let mut out = self.clone();
        for c in 0..self.ncomp() {
            let src = &self.data[c * npts..(c + 1) * npts];
            let dst = &mut out.data[c * npts..(c + 1) * npts];
            for (p, d) in dst.iter_mut().enumerate() {
                let i = (p / s) % n;
                let j = (i as isize - k).rem_euclid(n as isize) as usize;
                *d = src[p - i * s + j * s];
            }
        }
        out
    }

    /// Keeps every `factor`-th point along each active dimension.
    pub fn restrict(&self, factor: usize) -> Result<Field> {
        let coarse = self.grid.refined(self.grid.n / factor)?;
        let fine = self.grid;
        let dims = fine.active_dims();
        let nc = self.ncomp();
        Ok(Field::from_fn(coarse, self.shape, |p, out| {
            let mut r = p;
            let mut q = 0;
            for &d in &dims {
                let i = r % coarse.n;
                r /= coarse.n;
                q += i * factor * fine.stride(d).unwrap();
            }
            for (c, o) in out.iter_mut().enumerate().take(nc) {
                *o = self.at(q, c);
            }
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(7, &[0]).is_err());
        assert!(GridSpec::new(9, &[0]).is_err());
        assert!(GridSpec::new(16, &[0, 1, 2, 3, 4, 5]).is_err());
        let g = GridSpec::new(8, &[1, 4]).unwrap();
        assert_eq!(g.npts(), 64);
        assert_eq!(g.stride(1), Some(1));
        assert_eq!(g.stride(4), Some(8));
        assert_eq!(g.stride(0), None);
        let x = g.coords(9);
        assert!((x[1] - g.h()).abs() < 1e-15 && (x[4] - g.h()).abs() < 1e-15);
    }

    #[test]
    fn soa_layout_round_trip() {
        let g = GridSpec::new(8, &[0, 2]).unwrap();
        let f = Field::from_fn(g, Shape::Form(2), |p, out| {
            for (c, o) in out.iter_mut().enumerate() {
                *o = (p * 100 + c) as f64;
            }
        });
        assert_eq!(f.at(5, 3), 503.0);
        assert_eq!(f.comp(3)[5], 503.0);
        assert_eq!(f.form(5)[3], 503.0);
    }

    #[test]
    fn shift_and_restrict() {
        let g = GridSpec::new(16, &[3]).unwrap();
        let f = Field::sample(g, Shape::Scalar, |x, o| o[0] = x[3]);
        let s = f.shifted(3, 1);
        assert!((s.scalar(1) - f.scalar(0)).abs() < 1e-15);
        let r = f.restrict(2).unwrap();
        assert_eq!(r.npts(), 8);
        assert!((r.scalar(3) - f.scalar(6)).abs() < 1e-15);
    }
}
