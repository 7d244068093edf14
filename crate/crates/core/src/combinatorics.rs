//! Catalan numbers, the multi-index Catalan recursion and the factorial and
//! weighted-series bounds that feed the coefficient envelope.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::multiindex::{factorial, MultiIndex, Truncation};

fn binomial_exact(n: u32, k: u32) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// `c_n = binomial(2n, n)/(n+1)`, exactly.
pub fn catalan(n: u32) -> BigUint {
    binomial_exact(2 * n, n) / (n + 1)
}

/// Catalan numbers `c_0 … c_N` from the convolution recurrence.
#[derive(Clone, Debug)]
pub struct CatalanTable {
    values: Vec<BigUint>,
}

impl CatalanTable {
    pub fn new(max: u32) -> Self {
        let mut values: Vec<BigUint> = vec![BigUint::one()];
        for n in 1..=max as usize {
            let next = (0..n).fold(BigUint::zero(), |acc, k| acc + &values[k] * &values[n - 1 - k]);
            values.push(next);
        }
        Self { values }
    }

    pub fn get(&self, n: u32) -> &BigUint {
        &self.values[n as usize]
    }

    pub fn values(&self) -> &[BigUint] {
        &self.values
    }
}

/// `|α|!/α!` as an exact integer.
pub fn multinomial(alpha: &MultiIndex) -> BigUint {
    factorial(alpha.order()) / alpha.factorial()
}

fn eps_power_product(alpha: &MultiIndex, r_eps: &BTreeMap<u32, f64>) -> Result<f64> {
    alpha.entries().iter().try_fold(1.0, |acc, &(k, e)| {
        let r = r_eps
            .get(&k)
            .ok_or_else(|| Error::Input(format!("R_eps missing for position {k}")))?;
        Ok(acc * r.powi(e as i32))
    })
}

/// Closed form `R_α = c_{|α|−1}·(|α|!/α!)·Π R_{ε_k}^{α_k}`.
pub fn multi_catalan_closed(alpha: &MultiIndex, r_eps: &BTreeMap<u32, f64>) -> Result<f64> {
    let n = alpha.order();
    if n == 0 {
        return Err(Error::Input("multi-index Catalan numbers need |alpha| >= 1".into()));
    }
    let count = catalan(n - 1) * multinomial(alpha);
    let count = count
        .to_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Overflow(format!("Catalan count for {alpha}")))?;
    Ok(count * eps_power_product(alpha, r_eps)?)
}

/// `R_α = Σ_{𝟎<γ<α} R_γ R_{α−γ}` with `R_{ε_k}` given, memoized per call.
pub fn multi_catalan_recursive(alpha: &MultiIndex, r_eps: &BTreeMap<u32, f64>) -> Result<f64> {
    if alpha.is_zero() {
        return Err(Error::Input("multi-index Catalan numbers need |alpha| >= 1".into()));
    }
    let mut memo = HashMap::new();
    recurse(alpha, r_eps, &mut memo)
}

fn recurse(
    alpha: &MultiIndex,
    r_eps: &BTreeMap<u32, f64>,
    memo: &mut HashMap<MultiIndex, f64>,
) -> Result<f64> {
    if let Some(&v) = memo.get(alpha) {
        return Ok(v);
    }
    let v = if alpha.order() == 1 {
        eps_power_product(alpha, r_eps)?
    } else {
        let mut acc = 0.0;
        for (g, rest) in alpha.interior_splits() {
            acc += recurse(&g, r_eps, memo)? * recurse(&rest, r_eps, memo)?;
        }
        acc
    };
    memo.insert(alpha.clone(), v);
    Ok(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FactorialBound {
    pub ratio: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `|α|!/α!` against `(2ℕ)^{2α}`; the comparison is done in exact integers.
pub fn factorial_ratio_bound(alpha: &MultiIndex) -> FactorialBound {
    let ratio = multinomial(alpha);
    let bound = alpha
        .entries()
        .iter()
        .fold(BigUint::one(), |acc, &(k, e)| acc * BigUint::from(2 * k).pow(2 * e));
    FactorialBound {
        holds: ratio <= bound,
        ratio: ratio.to_f64().unwrap_or(f64::INFINITY),
        bound: bound.to_f64().unwrap_or(f64::INFINITY),
    }
}

/// `Σ_{α ∈ t} c^{|α|}(2ℕ)^{−qα}`.
///
/// The sum over a `(K,P)` truncation equals `Σ_{d≤P} h_d(x_1,…,x_K)` with
/// `x_k = c(2k)^{−q}` and `h_d` the complete homogeneous symmetric
/// polynomials, which are built one variable at a time.
pub fn weighted_tail(c: f64, q: f64, t: Truncation) -> f64 {
    let p = t.max_order() as usize;
    let mut h = vec![0.0; p + 1];
    h[0] = 1.0;
    for k in 1..=t.dimension() {
        let x = c * (2.0 * k as f64).powf(-q);
        for d in 1..=p {
            h[d] += x * h[d - 1];
        }
    }
    h.iter().sum()
}

#[derive(Clone, Debug, PartialEq)]
pub enum TailBehavior {
    /// Partial sums increase and the last increment is below the tolerance.
    Converging { limit_estimate: f64, last_increment: f64 },
    /// Increments fail to shrink across the sweep.
    DivergenceWitness { last_sum: f64, last_increment: f64 },
    Undecided { last_sum: f64, last_increment: f64 },
}

/// Partial sums on the nested truncations `K = P = n` for each `n` in `sizes`.
pub fn tail_sweep(c: f64, q: f64, sizes: &[u32]) -> Vec<(u32, f64)> {
    sizes
        .iter()
        .map(|&n| (n, weighted_tail(c, q, Truncation::new(n.max(1), n).expect("K >= 1"))))
        .collect()
}

/// Classifies a sweep produced by [`tail_sweep`].
///
/// Divergence is reported when the increments between consecutive nested
/// truncations stop shrinking over the second half of the sweep.
pub fn classify_tail(sweep: &[(u32, f64)], tol: f64) -> TailBehavior {
    let increments: Vec<f64> = sweep.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let last_sum = sweep.last().map(|s| s.1).unwrap_or(0.0);
    let last_increment = increments.last().copied().unwrap_or(0.0);
    let monotone = increments.iter().all(|&d| d >= 0.0);
    if monotone && last_increment.abs() < tol {
        return TailBehavior::Converging {
            limit_estimate: last_sum,
            last_increment,
        };
    }
    let half = &increments[increments.len() / 2..];
    if half.len() >= 2 && half.windows(2).all(|w| w[1] >= w[0]) {
        return TailBehavior::DivergenceWitness {
            last_sum,
            last_increment,
        };
    }
    TailBehavior::Undecided {
        last_sum,
        last_increment,
    }
}

/// Smallest integer `s ≥ 0` with `c ≤ 2^s`; the series converges for `q > s + 1`.
pub fn series_exponent(c: f64) -> u32 {
    let mut s = 0;
    while 2f64.powi(s as i32) < c {
        s += 1;
    }
    s
}
