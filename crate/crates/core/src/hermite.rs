//! Hermite polynomials, Hermite functions and pathwise evaluation of
//! chaos expansions.

use crate::error::{Error, Result};
use crate::quadrature::adaptive_simpson;
use crate::wick::ChaosField;

/// Probabilists' Hermite polynomial `h_n(x)`.
pub fn hermite_poly(n: u32, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// All `h_0(x) … h_n(x)`.
pub fn hermite_table(n: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n as usize {
        out.push(x * out[k] - k as f64 * out[k - 1]);
    }
    out
}

/// Orthonormal Hermite function `ξ_k(t)`, `k ≥ 1`.
pub fn hermite_function(k: u32, t: f64) -> f64 {
    assert!(k >= 1, "Hermite functions are indexed from 1");
    let mut prev = 0.0;
    let mut cur = std::f64::consts::PI.powf(-0.25) * (-0.5 * t * t).exp();
    for j in 1..k {
        let j = j as f64;
        let next = (2.0 / j).sqrt() * t * cur - ((j - 1.0) / j).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// `∫_0^t ξ_k(s) ds`.
pub fn brownian_hermite(k: u32, t: f64) -> f64 {
    adaptive_simpson(&|s| hermite_function(k, s), 0.0, t, 1e-13)
}

/// `Σ_α f_α Π_k h_{α_k}(g_k)` for one sample `g` of `(⟨ω,ξ_k⟩)_k`.
pub fn evaluate_realization(f: &ChaosField, g: &[f64]) -> Result<Vec<f64>> {
    let t = f.basis().truncation();
    let k = t.dimension() as usize;
    if g.len() < k {
        return Err(Error::Dimension(format!(
            "realization needs {k} gaussian values, got {}",
            g.len()
        )));
    }
    let tables: Vec<Vec<f64>> = g[..k].iter().map(|&x| hermite_table(t.max_order(), x)).collect();
    let mut out = vec![0.0; f.m()];
    evaluate_with_tables(f, &tables, &mut out);
    Ok(out)
}

pub(crate) fn evaluate_with_tables(f: &ChaosField, tables: &[Vec<f64>], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (i, alpha) in f.basis().indices().iter().enumerate() {
        let h: f64 = alpha
            .entries()
            .iter()
            .map(|&(pos, e)| tables[pos as usize - 1][e as usize])
            .product();
        for (o, c) in out.iter_mut().zip(f.coeff(i)) {
            *o += h * c;
        }
    }
}
