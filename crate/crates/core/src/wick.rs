//! Chaos coefficient fields and Wick calculus on them.
//!
//! Spatial coefficients live in a grid-function algebra with the
//! componentwise product, so `(F◊G)_α = Σ_{β≤α} f_β ⊙ g_{α−β}`. Products are
//! projected onto the truncation of the operands.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::multiindex::{IndexSet, MultiIndex};

/// One time slice of a truncated chaos expansion.
///
/// Coefficients are stored densely in the graded order of the index set,
/// `m` values per index.
#[derive(Clone, Debug)]
pub struct ChaosField {
    basis: Arc<IndexSet>,
    m: usize,
    data: Vec<f64>,
}

impl PartialEq for ChaosField {
    fn eq(&self, other: &Self) -> bool {
        self.basis.truncation() == other.basis.truncation()
            && self.m == other.m
            && self.data == other.data
    }
}

impl ChaosField {
    pub fn zeros(basis: Arc<IndexSet>, m: usize) -> Self {
        let data = vec![0.0; basis.len() * m];
        Self { basis, m, data }
    }

    /// `v·H_𝟎`.
    pub fn deterministic(basis: Arc<IndexSet>, v: &[f64]) -> Self {
        let mut out = Self::zeros(basis, v.len());
        out.coeff_mut(0).copy_from_slice(v);
        out
    }

    /// Field with the listed coefficients and zeros elsewhere.
    pub fn from_modes<'a, I>(basis: Arc<IndexSet>, m: usize, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a MultiIndex, &'a [f64])>,
    {
        let mut out = Self::zeros(basis, m);
        for (alpha, v) in modes {
            out.set(alpha, v)?;
        }
        Ok(out)
    }

    pub fn basis(&self) -> &Arc<IndexSet> {
        &self.basis
    }

    /// Spatial degrees of freedom.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn coeff(&self, i: usize) -> &[f64] {
        &self.data[i * self.m..(i + 1) * self.m]
    }

    pub fn coeff_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.m..(i + 1) * self.m]
    }

    /// Coefficient of `α`, `None` when `α` lies outside the truncation.
    pub fn get(&self, alpha: &MultiIndex) -> Option<&[f64]> {
        self.basis.position(alpha).map(|i| self.coeff(i))
    }

    pub fn set(&mut self, alpha: &MultiIndex, v: &[f64]) -> Result<()> {
        if v.len() != self.m {
            return Err(Error::Dimension(format!(
                "coefficient for {alpha} has length {}, field has M = {}",
                v.len(),
                self.m
            )));
        }
        let i = self.basis.position(alpha).ok_or_else(|| {
            Error::Dimension(format!(
                "{alpha} is outside truncation {:?}",
                self.basis.truncation()
            ))
        })?;
        self.coeff_mut(i).copy_from_slice(v);
        Ok(())
    }

    /// Re-expresses the field on another index set: shared indices are
    /// copied, indices missing from `basis` are dropped.
    pub fn project(&self, basis: Arc<IndexSet>) -> ChaosField {
        let mut out = ChaosField::zeros(basis, self.m);
        for (i, alpha) in self.basis.indices().iter().enumerate() {
            if let Some(j) = out.basis.position(alpha) {
                out.coeff_mut(j).copy_from_slice(self.coeff(i));
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> ChaosField {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= s);
        out
    }

    pub fn add(&self, other: &ChaosField) -> Result<ChaosField> {
        check_compatible(self, other)?;
        let mut out = self.clone();
        out.data
            .iter_mut()
            .zip(&other.data)
            .for_each(|(a, b)| *a += b);
        Ok(out)
    }

    pub fn sub(&self, other: &ChaosField) -> Result<ChaosField> {
        self.add(&other.scaled(-1.0))
    }

    /// Sup-norm over the grid of each coefficient, in index order.
    pub fn sup_norms(&self) -> Vec<f64> {
        (0..self.basis.len())
            .map(|i| sup_norm(self.coeff(i)))
            .collect()
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

fn check_compatible(f: &ChaosField, g: &ChaosField) -> Result<()> {
    if f.basis.truncation() != g.basis.truncation() {
        return Err(Error::Dimension(format!(
            "truncations differ: {:?} vs {:?}",
            f.basis.truncation(),
            g.basis.truncation()
        )));
    }
    if f.m != g.m {
        return Err(Error::Dimension(format!(
            "spatial sizes differ: {} vs {}",
            f.m, g.m
        )));
    }
    Ok(())
}

/// `F ◊ G`, projected onto the common truncation.
pub fn wick_product(f: &ChaosField, g: &ChaosField) -> Result<ChaosField> {
    check_compatible(f, g)?;
    let basis = &f.basis;
    let m = f.m;
    let mut out = ChaosField::zeros(basis.clone(), m);
    for i in 0..basis.len() {
        let dst = &mut out.data[i * m..(i + 1) * m];
        for &(b, r) in basis.pairs(i) {
            let fb = f.coeff(b);
            let gr = g.coeff(r);
            for x in 0..m {
                dst[x] += fb[x] * gr[x];
            }
        }
    }
    Ok(out)
}

/// `F^{◊n}`; `n = 0` gives the all-ones vector on `H_𝟎`.
pub fn wick_power(f: &ChaosField, n: u32) -> ChaosField {
    let mut acc = ChaosField::deterministic(f.basis.clone(), &vec![1.0; f.m]);
    for _ in 0..n {
        acc = wick_product(&acc, f).expect("operands share a basis");
    }
    acc
}

/// Constant-coefficient polynomial `p(x) = Σ a_k x^k`.
///
/// Trailing zero coefficients are dropped. The zero polynomial is allowed
/// and has degree 0.
#[derive(Clone, Debug, PartialEq)]
pub struct WickPolynomial {
    a: Vec<f64>,
}

impl WickPolynomial {
    pub fn new(coeffs: &[f64]) -> Result<Self> {
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::Input(format!("non-finite polynomial coefficient {bad}")));
        }
        let mut a = coeffs.to_vec();
        while a.len() > 1 && *a.last().unwrap() == 0.0 {
            a.pop();
        }
        if a.is_empty() {
            a.push(0.0);
        }
        Ok(Self { a })
    }

    /// `p(x) = x^n`.
    pub fn monomial(n: usize) -> Self {
        let mut a = vec![0.0; n + 1];
        a[n] = 1.0;
        Self { a }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn degree(&self) -> usize {
        self.a.len() - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.a.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> WickPolynomial {
        if self.a.len() == 1 {
            return WickPolynomial { a: vec![0.0] };
        }
        let a = self.a[1..]
            .iter()
            .enumerate()
            .map(|(k, &c)| c * (k + 1) as f64)
            .collect();
        WickPolynomial { a }
    }

    /// `p^{(j)}(x) / j!  = Σ_{k≥j} a_k·C(k,j)·x^{k−j}`.
    pub fn taylor_coeff(&self, j: usize, x: f64) -> f64 {
        if j > self.degree() {
            return 0.0;
        }
        let mut acc = 0.0;
        for k in (j..self.a.len()).rev() {
            acc = acc * x + self.a[k] * binomial(k, j);
        }
        acc
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ a_k·u^{◊k}` by explicit Wick powers.
pub fn wick_polynomial_direct(p: &WickPolynomial, u: &ChaosField) -> ChaosField {
    let mut out = ChaosField::zeros(u.basis.clone(), u.m);
    let mut power = ChaosField::deterministic(u.basis.clone(), &vec![1.0; u.m]);
    for (k, &a) in p.coeffs().iter().enumerate() {
        if k > 0 {
            power = wick_product(&power, u).expect("operands share a basis");
        }
        out.data
            .iter_mut()
            .zip(&power.data)
            .for_each(|(o, x)| *o += a * x);
    }
    out
}

/// Fluctuation chain sums `S_j = (u − u_𝟎H_𝟎)^{◊j}` for one time slice.
///
/// `S_1(α) = u_α` for `α > 𝟎`; for `j ≥ 2`,
/// `S_j(α) = Σ_{𝟎<γ<α} u_{α−γ} ⊙ S_{j−1}(γ)`, which involves only
/// coefficients strictly below `α`. Entries at `𝟎` are zero.
#[derive(Clone, Debug)]
pub struct ChainSums {
    basis: Arc<IndexSet>,
    m: usize,
    depth: usize,
    data: Vec<f64>,
    linear_ready: Vec<bool>,
    composed: Vec<bool>,
}

impl ChainSums {
    pub fn new(basis: Arc<IndexSet>, m: usize, depth: usize) -> Self {
        let len = basis.len();
        let mut linear_ready = vec![false; len];
        let mut composed = vec![false; len];
        if len > 0 {
            linear_ready[0] = true;
            composed[0] = true;
        }
        Self {
            data: vec![0.0; depth.max(1) * len * m],
            basis,
            m,
            depth: depth.max(1),
            linear_ready,
            composed,
        }
    }

    /// All chain sums of a complete field, level by level.
    pub fn from_field(u: &ChaosField, depth: usize) -> Self {
        let mut s = Self::new(u.basis.clone(), u.m, depth);
        for i in 1..u.basis.len() {
            s.compose(i).expect("lower indices are set first in graded order");
            s.set_linear(i, u.coeff(i));
        }
        s
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    fn offset(&self, j: usize, i: usize) -> usize {
        ((j - 1) * self.basis.len() + i) * self.m
    }

    /// `S_j(α)` at position `i`, for `1 ≤ j ≤ depth`.
    pub fn get(&self, j: usize, i: usize) -> &[f64] {
        let o = self.offset(j, i);
        &self.data[o..o + self.m]
    }

    /// Records `u_α` (which is `S_1(α)`) at position `i > 0`.
    pub fn set_linear(&mut self, i: usize, v: &[f64]) {
        assert!(i > 0, "S_1 at the zero index is fixed to zero");
        let o = self.offset(1, i);
        self.data[o..o + self.m].copy_from_slice(v);
        self.linear_ready[i] = true;
    }

    /// `S_2(α) … S_depth(α)` at position `i`, concatenated, from the
    /// stored lower data. Does not modify the table.
    pub fn chain_terms(&self, i: usize) -> Result<Vec<f64>> {
        let basis = &self.basis;
        for (b, r) in basis.interior_pairs(i) {
            if !self.linear_ready[r] || !self.linear_ready[b] || !self.composed[b] {
                return Err(Error::Sequencing(format!(
                    "chain sum for {} needs {} and {} first",
                    basis.get(i),
                    basis.get(b),
                    basis.get(r)
                )));
            }
        }
        let m = self.m;
        let mut out = vec![0.0; (self.depth - 1) * m];
        for j in 2..=self.depth {
            let acc = &mut out[(j - 2) * m..(j - 1) * m];
            for (b, r) in basis.interior_pairs(i) {
                let u = self.get(1, r);
                let s = self.get(j - 1, b);
                for x in 0..m {
                    acc[x] += u[x] * s[x];
                }
            }
        }
        Ok(out)
    }

    /// Stores the output of [`chain_terms`](Self::chain_terms) at position `i`.
    pub fn store_terms(&mut self, i: usize, terms: &[f64]) {
        let m = self.m;
        assert_eq!(terms.len(), (self.depth - 1) * m, "chain term length");
        for j in 2..=self.depth {
            let o = self.offset(j, i);
            self.data[o..o + m].copy_from_slice(&terms[(j - 2) * m..(j - 1) * m]);
        }
        self.composed[i] = true;
    }

    /// Computes and stores `S_j(α)` for `2 ≤ j ≤ depth` at position `i`.
    pub fn compose(&mut self, i: usize) -> Result<()> {
        let terms = self.chain_terms(i)?;
        self.store_terms(i, &terms);
        Ok(())
    }

    /// `Σ_{j=from..deg} p^{(j)}(u_𝟎)/j! ⊙ S_j(α)` at position `i`.
    pub fn taylor_sum(&self, p: &WickPolynomial, u0: &[f64], i: usize, from: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for j in from.max(1)..=p.degree().min(self.depth) {
            let s = self.get(j, i);
            for x in 0..self.m {
                out[x] += p.taylor_coeff(j, u0[x]) * s[x];
            }
        }
        out
    }
}

/// `p(u)` in derivative form:
/// `p(u_𝟎)H_𝟎 + Σ_{j=1..n} p^{(j)}(u_𝟎)/j! ⊙ (u − u_𝟎H_𝟎)^{◊j}`.
pub fn wick_taylor(p: &WickPolynomial, u: &ChaosField) -> ChaosField {
    let chains = ChainSums::from_field(u, p.degree());
    let mut out = ChaosField::zeros(u.basis.clone(), u.m);
    let u0 = u.coeff(0).to_vec();
    for (o, &x) in out.coeff_mut(0).iter_mut().zip(&u0) {
        *o = p.eval(x);
    }
    for i in 1..u.basis.len() {
        let v = chains.taylor_sum(p, &u0, i, 1);
        out.coeff_mut(i).copy_from_slice(&v);
    }
    out
}

/// Splits `(u^{◊n})_α` into `n·u_𝟎^{n−1}⊙u_α` and the remainder `r_{α,n}`.
///
/// The remainder is accumulated from chain sums only, so it never reads
/// `u_α` or any coefficient above it.
pub fn power_coeff_split(u: &ChaosField, n: u32, alpha: &MultiIndex) -> Result<(Vec<f64>, Vec<f64>)> {
    if alpha.is_zero() {
        return Err(Error::Input("power_coeff_split needs alpha > 0".into()));
    }
    let i = u.basis.position(alpha).ok_or_else(|| {
        Error::Dimension(format!("{alpha} is outside the field's truncation"))
    })?;
    if n == 0 {
        return Ok((vec![0.0; u.m], vec![0.0; u.m]));
    }
    let u0 = u.coeff(0);
    let ua = u.coeff(i);
    let p = WickPolynomial::monomial(n as usize);
    let leading = (0..u.m)
        .map(|x| p.taylor_coeff(1, u0[x]) * ua[x])
        .collect();

    let mut chains = ChainSums::new(u.basis.clone(), u.m, n as usize);
    let below: Vec<usize> = alpha
        .sub_indices()
        .iter()
        .filter(|b| !b.is_zero() && *b != alpha)
        .map(|b| u.basis.position(b).expect("sub-index of a kept index"))
        .collect();
    for &b in &below {
        chains.compose(b)?;
        chains.set_linear(b, u.coeff(b));
    }
    chains.compose(i)?;
    let remainder = chains.taylor_sum(&p, u0, i, 2);
    Ok((leading, remainder))
}

/// Finite Hermite transform `Σ_α f_α Π z_k^{α_k}`.
pub fn hermite_transform(f: &ChaosField, z: &[f64]) -> Result<Vec<f64>> {
    let k = f.basis.truncation().dimension() as usize;
    if z.len() < k {
        return Err(Error::Dimension(format!(
            "hermite transform needs {k} arguments, got {}",
            z.len()
        )));
    }
    let mut out = vec![0.0; f.m];
    for (i, alpha) in f.basis.indices().iter().enumerate() {
        let w: f64 = alpha
            .entries()
            .iter()
            .map(|&(pos, e)| z[pos as usize - 1].powi(e as i32))
            .product();
        for (o, c) in out.iter_mut().zip(f.coeff(i)) {
            *o += w * c;
        }
    }
    Ok(out)
}
