//! Alternating forms on a 7-dimensional space in packed storage.
//!
//! A degree-k form stores its C(7,k) independent components in lexicographic
//! order of the increasing index tuples. Index sets are represented as 7-bit
//! masks; [`tables`] maps masks to packed positions.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Tensor2, Vector7};

/// Serialized shape of an [`AltForm`]: degree and packed components.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct FormRepr {
    degree: usize,
    coeffs: Vec<f64>,
}

impl From<AltForm> for FormRepr {
    fn from(a: AltForm) -> Self {
        Self {
            degree: a.deg,
            coeffs: a.coeffs().to_vec(),
        }
    }
}

impl TryFrom<FormRepr> for AltForm {
    type Error = String;

    fn try_from(r: FormRepr) -> Result<Self, String> {
        if r.degree > DIM || r.coeffs.len() != BINOM[r.degree] {
            return Err(format!("{} components for a degree-{} form", r.coeffs.len(), r.degree));
        }
        Ok(AltForm::from_coeffs(r.degree, &r.coeffs))
    }
}

pub const DIM: usize = 7;
pub const BINOM: [usize; 8] = [1, 7, 21, 35, 35, 21, 7, 1];
pub const MAX_COMPONENTS: usize = 35;

pub struct Tables {
    /// Masks of each degree in lexicographic order of their index tuples.
    pub combos: [Vec<u8>; 8],
    /// Packed position of a mask within its degree.
    pub pos: [u8; 128],
    /// Sign of the shuffle (I, I^c) for every mask I.
    pub star_sign: [f64; 128],
    /// For every mask: (index i, position of the mask without i, (−1)^slot),
    /// valid for the first popcount entries.
    pub drops: [[(u8, u8, f64); DIM]; 128],
}

pub fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut combos: [Vec<u8>; 8] = Default::default();
        for (k, list) in combos.iter_mut().enumerate() {
            let mut idx = Vec::with_capacity(k);
            lex_combos(0, k, &mut idx, list);
        }
        let mut pos = [0u8; 128];
        for list in &combos {
            for (i, &m) in list.iter().enumerate() {
                pos[m as usize] = i as u8;
            }
        }
        let mut star_sign = [0.0; 128];
        for (m, s) in star_sign.iter_mut().enumerate() {
            *s = merge_sign(m as u8, !(m as u8) & 0x7f);
        }
        let mut drops = [[(0u8, 0u8, 0.0); DIM]; 128];
        for (m, row) in drops.iter_mut().enumerate() {
            for (s, i) in mask_indices(m as u8).enumerate() {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                row[s] = (i as u8, pos[m & !(1 << i)], sign);
            }
        }
        Tables {
            combos,
            pos,
            star_sign,
            drops,
        }
    })
}

fn lex_combos(start: usize, k: usize, idx: &mut Vec<usize>, out: &mut Vec<u8>) {
    if k == 0 {
        out.push(idx.iter().fold(0u8, |m, &i| m | (1 << i)));
        return;
    }
    for i in start..=(DIM - k) {
        idx.push(i);
        lex_combos(i + 1, k - 1, idx, out);
        idx.pop();
    }
}

/// Sign of the permutation that sorts the concatenation (A, B) of two
/// disjoint increasing index sets.
#[inline]
pub fn merge_sign(a: u8, b: u8) -> f64 {
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inv += ((a as u32) >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Indices of a mask in increasing order.
#[inline]
pub fn mask_indices(m: u8) -> impl Iterator<Item = usize> {
    (0..DIM).filter(move |&i| m & (1 << i) != 0)
}

/// Mask and permutation sign of an index tuple; `None` if an index repeats.
#[inline]
pub fn sort_sign(idx: &[usize]) -> Option<(u8, f64)> {
    let mut mask = 0u8;
    let mut inv = 0u32;
    for &i in idx {
        let bit = 1u8 << i;
        if mask & bit != 0 {
            return None;
        }
        inv += ((mask as u32) >> (i + 1)).count_ones();
        mask |= bit;
    }
    Some((mask, if inv.is_multiple_of(2) { 1.0 } else { -1.0 }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FormRepr", try_from = "FormRepr")]
pub struct AltForm {
    deg: usize,
    c: [f64; MAX_COMPONENTS],
}

impl AltForm {
    pub fn zero(deg: usize) -> Self {
        assert!(deg <= DIM, "degree {deg} exceeds 7");
        Self {
            deg,
            c: [0.0; MAX_COMPONENTS],
        }
    }

    pub fn from_coeffs(deg: usize, coeffs: &[f64]) -> Self {
        let mut f = Self::zero(deg);
        assert_eq!(coeffs.len(), BINOM[deg], "wrong component count");
        f.c[..coeffs.len()].copy_from_slice(coeffs);
        f
    }

    /// The basis form e^{i1} ∧ ... ∧ e^{ik}.
    pub fn basis(idx: &[usize]) -> Self {
        let mut f = Self::zero(idx.len());
        f.add_term(idx, 1.0);
        f
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn len(&self) -> usize {
        BINOM[self.deg]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..BINOM[self.deg]]
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        let n = BINOM[self.deg];
        &mut self.c[..n]
    }

    #[inline]
    pub fn at_mask(&self, mask: u8) -> f64 {
        self.c[tables().pos[mask as usize] as usize]
    }

    /// Signed component for an arbitrary index tuple.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.deg);
        match sort_sign(idx) {
            Some((m, s)) => s * self.at_mask(m),
            None => 0.0,
        }
    }

    /// Adds `v·e^{idx}`; repeated indices contribute nothing.
    pub fn add_term(&mut self, idx: &[usize], v: f64) {
        assert_eq!(idx.len(), self.deg);
        if let Some((m, s)) = sort_sign(idx) {
            self.c[tables().pos[m as usize] as usize] += s * v;
        }
    }

    pub fn wedge(&self, other: &AltForm) -> AltForm {
        let t = tables();
        let k = self.deg + other.deg;
        let mut out = AltForm::zero(k.min(DIM));
        if k > DIM {
            return out;
        }
        for (i, &a) in t.combos[self.deg].iter().enumerate() {
            let x = self.c[i];
            if x == 0.0 {
                continue;
            }
            for (j, &b) in t.combos[other.deg].iter().enumerate() {
                if a & b != 0 {
                    continue;
                }
                let y = other.c[j];
                if y != 0.0 {
                    out.c[t.pos[(a | b) as usize] as usize] += merge_sign(a, b) * x * y;
                }
            }
        }
        out
    }

    /// Interior product v ⌟ α, contracting the first slot.
    pub fn interior(&self, v: &Vector7) -> AltForm {
        assert!(self.deg > 0);
        let t = tables();
        let mut out = AltForm::zero(self.deg - 1);
        for (i, &m) in t.combos[self.deg].iter().enumerate() {
            let x = self.c[i];
            if x == 0.0 {
                continue;
            }
            // e^{i1..ik}(v, ...) = Σ_s (-1)^s v_{i_s} e^{..omit s..}
            for (s, a) in mask_indices(m).enumerate() {
                let sign = if s % 2 == 0 { 1.0 } else { -1.0 };
                let rest = m & !(1 << a);
                out.c[t.pos[rest as usize] as usize] += sign * v[a] * x;
            }
        }
        out
    }

    /// Hodge star of the flat metric with orientation e^{1..7}.
    pub fn flat_star(&self) -> AltForm {
        let t = tables();
        let mut out = AltForm::zero(DIM - self.deg);
        for (i, &m) in t.combos[self.deg].iter().enumerate() {
            let comp = !m & 0x7f;
            out.c[t.pos[comp as usize] as usize] = t.star_sign[m as usize] * self.c[i];
        }
        out
    }

    /// Sum of products of packed components.
    pub fn dot(&self, other: &AltForm) -> f64 {
        assert_eq!(self.deg, other.deg);
        self.coeffs().iter().zip(other.coeffs()).map(|(a, b)| a * b).sum()
    }

    /// Full tensor norm squared Σ α_{i1..ik}² over all index tuples (flat).
    pub fn tensor_norm2(&self) -> f64 {
        factorial(self.deg) * self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs().iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// Pullback P^*α, (P^*α)_J = Σ_I α_I det P[I, J].
    pub fn pullback(&self, p: &Tensor2) -> AltForm {
        let nz = self.c[..BINOM[self.deg]].iter().filter(|x| **x != 0.0).count();
        if self.deg >= 3 && nz <= 8 {
            return self.sparse_pullback(p);
        }
        Compound::new(p, self.deg).apply(self)
    }

    /// P^*e^I is the wedge of the rows of P indexed by I.
    fn sparse_pullback(&self, p: &Tensor2) -> AltForm {
        let t = tables();
        let mut out = AltForm::zero(self.deg);
        for (n, &m) in t.combos[self.deg].iter().enumerate() {
            let a = self.c[n];
            if a == 0.0 {
                continue;
            }
            let mut w = AltForm::from_coeffs(0, &[a]);
            for i in mask_indices(m) {
                let row: [f64; DIM] = std::array::from_fn(|j| p[(i, j)]);
                w = w.wedge(&AltForm::from_coeffs(1, &row));
            }
            out += w;
        }
        out
    }

    /// Derivation action of a matrix: Σ_s D_{i_s m} α_{i1..m..ik}.
    pub fn derivation(&self, d: &Tensor2) -> AltForm {
        let t = tables();
        let mut out = AltForm::zero(self.deg);
        for (j, &mj) in t.combos[self.deg].iter().enumerate() {
            let mut acc = 0.0;
            for (s, a) in mask_indices(mj).enumerate() {
                let rest = mj & !(1 << a);
                for m in 0..DIM {
                    if rest & (1 << m) != 0 {
                        continue;
                    }
                    let dv = d[(a, m)];
                    if dv == 0.0 {
                        continue;
                    }
                    // replace slot s (index a) by m
                    let nm = rest | (1 << m);
                    let below_a = s as i32;
                    let below_m = (rest & ((1u8 << m) - 1)).count_ones() as i32;
                    let sign = if (below_a - below_m) % 2 == 0 { 1.0 } else { -1.0 };
                    acc += dv * sign * self.c[t.pos[nm as usize] as usize];
                }
            }
            out.c[j] = acc;
        }
        out
    }

    /// Dense array of all 7^k signed components, row-major in the indices.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = 7usize.pow(self.deg as u32);
        let mut out = vec![0.0; n];
        let mut idx = vec![0usize; self.deg];
        for (lin, o) in out.iter_mut().enumerate() {
            let mut r = lin;
            for s in (0..self.deg).rev() {
                idx[s] = r % 7;
                r /= 7;
            }
            *o = self.get(&idx);
        }
        out
    }

    /// Packs the canonical components of a dense antisymmetric array.
    pub fn from_dense(deg: usize, dense: &[f64]) -> AltForm {
        let t = tables();
        let mut out = AltForm::zero(deg);
        for (i, &m) in t.combos[deg].iter().enumerate() {
            let lin = mask_indices(m).fold(0, |acc, a| acc * 7 + a);
            out.c[i] = dense[lin];
        }
        out
    }
}

impl Index<usize> for AltForm {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.c[..BINOM[self.deg]][i]
    }
}

impl IndexMut<usize> for AltForm {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        let n = BINOM[self.deg];
        &mut self.c[..n][i]
    }
}

impl Add for AltForm {
    type Output = AltForm;
    fn add(mut self, rhs: AltForm) -> AltForm {
        self += rhs;
        self
    }
}

impl AddAssign for AltForm {
    fn add_assign(&mut self, rhs: AltForm) {
        assert_eq!(self.deg, rhs.deg);
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += b;
        }
    }
}

impl Sub for AltForm {
    type Output = AltForm;
    fn sub(mut self, rhs: AltForm) -> AltForm {
        self -= rhs;
        self
    }
}

impl SubAssign for AltForm {
    fn sub_assign(&mut self, rhs: AltForm) {
        assert_eq!(self.deg, rhs.deg);
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= b;
        }
    }
}

impl Mul<f64> for AltForm {
    type Output = AltForm;
    fn mul(mut self, s: f64) -> AltForm {
        for a in self.c.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl Mul<AltForm> for f64 {
    type Output = AltForm;
    fn mul(self, f: AltForm) -> AltForm {
        f * self
    }
}

impl Neg for AltForm {
    type Output = AltForm;
    fn neg(self) -> AltForm {
        self * -1.0
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Minors of a 7×7 matrix up to a given size, indexed by row and column
/// masks; the degree-k block is the k-th compound matrix.
pub struct Compound {
    deg: usize,
    /// minors[k][pos(I) * C(7,k) + pos(J)] = det P[I, J]
    minors: Vec<Vec<f64>>,
}

impl Compound {
    pub fn new(p: &Tensor2, deg: usize) -> Self {
        let t = tables();
        let mut minors: Vec<Vec<f64>> = Vec::with_capacity(deg + 1);
        minors.push(vec![1.0]);
        for k in 1..=deg {
            let nk = BINOM[k];
            let nk1 = BINOM[k - 1];
            let mut cur = vec![0.0; nk * nk];
            let prev = &minors[k - 1];
            for (ii, &mi) in t.combos[k].iter().enumerate() {
                // expand along the first row index of I
                let r0 = mi.trailing_zeros() as usize;
                let irest = t.pos[(mi & !(1 << r0)) as usize] as usize;
                let prow = &prev[irest * nk1..(irest + 1) * nk1];
                let pr: [f64; DIM] = std::array::from_fn(|c| p[(r0, c)]);
                for (jj, &mj) in t.combos[k].iter().enumerate() {
                    let mut acc = 0.0;
                    for &(c, jrest, s) in &t.drops[mj as usize][..k] {
                        acc += s * pr[c as usize] * prow[jrest as usize];
                    }
                    cur[ii * nk + jj] = acc;
                }
            }
            minors.push(cur);
        }
        Self { deg, minors }
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn minor(&self, k: usize, i: usize, j: usize) -> f64 {
        self.minors[k][i * BINOM[k] + j]
    }

    /// Pullback of a form of degree ≤ the compound degree.
    pub fn apply(&self, a: &AltForm) -> AltForm {
        let k = a.degree();
        assert!(k <= self.deg, "compound built for degree {}", self.deg);
        let n = BINOM[k];
        let m = &self.minors[k];
        let mut out = AltForm::zero(k);
        for i in 0..n {
            let x = a.c[i];
            if x == 0.0 {
                continue;
            }
            let row = &m[i * n..(i + 1) * n];
            for (o, r) in out.c[..n].iter_mut().zip(row) {
                *o += x * r;
            }
        }
        out
    }
}
