//! Weighted chaos norms, tail diagnostics, Monte-Carlo moments and
//! closed-form reference solutions.

use num_traits::ToPrimitive;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hermite::{evaluate_with_tables, hermite_table};
use crate::multiindex::IndexSet;
use crate::operators::TimeProfile;
use crate::quadrature::adaptive_simpson;
use crate::wick::{sup_norm, ChaosField};

/// `Σ_α (α!)^{1−ρ} ‖u_α‖² (2ℕ)^{−qα}` with per-level partial sums.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub rho: f64,
    pub q: f64,
    pub value: f64,
    pub level_sums: Vec<f64>,
}

fn check_exponents(rho: f64, q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::Input(format!("rho = {rho} outside [0, 1]")));
    }
    if q.is_nan() || q < 0.0 {
        return Err(Error::Input(format!("q = {q} must be nonnegative")));
    }
    Ok(())
}

/// Weighted norm from a table of coefficient norms in index order.
pub fn kondratiev_norm_table(basis: &IndexSet, norms: &[f64], rho: f64, q: f64) -> Result<NormReport> {
    check_exponents(rho, q)?;
    if norms.len() != basis.len() {
        return Err(Error::Dimension("norm table does not match the index set".into()));
    }
    let mut level_sums = vec![0.0; basis.truncation().max_order() as usize + 1];
    for (alpha, &norm) in basis.indices().iter().zip(norms) {
        if norm == 0.0 {
            continue;
        }
        let fact = alpha.factorial().to_f64().unwrap_or(f64::INFINITY);
        let log = (1.0 - rho) * fact.ln() + 2.0 * norm.ln() - alpha.log_weight(q);
        level_sums[alpha.order() as usize] += log.exp();
    }
    // Sequential summation keeps the value reproducible.
    let value = level_sums.iter().sum();
    Ok(NormReport {
        rho,
        q,
        value,
        level_sums,
    })
}

/// Weighted norm of one field, with the sup-norm over the grid.
pub fn kondratiev_norm(field: &ChaosField, rho: f64, q: f64) -> Result<NormReport> {
    kondratiev_norm_table(field.basis(), &field.sup_norms(), rho, q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TailDecay {
    pub level_sums: Vec<f64>,
    /// `S_ℓ / S_{ℓ−1}` for `ℓ ≥ 1`, `None` when `S_{ℓ−1} = 0`.
    pub ratios: Vec<Option<f64>>,
    /// Level sums are nonincreasing from level 1 on.
    pub decaying: bool,
}

pub fn tail_decay(report: &NormReport) -> TailDecay {
    let s = &report.level_sums;
    let ratios = s
        .windows(2)
        .map(|w| (w[0] > 0.0).then(|| w[1] / w[0]))
        .collect();
    let decaying = s.iter().skip(1).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0]);
    TailDecay {
        level_sums: s.clone(),
        ratios,
        decaying,
    }
}

/// Sample moments of `evaluate_realization` against the chaos moments.
#[derive(Clone, Debug, PartialEq)]
pub struct McReport {
    pub draws: usize,
    pub seed: u64,
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub se_mean: Vec<f64>,
    pub se_variance: Vec<f64>,
    /// `f_𝟎`.
    pub reference_mean: Vec<f64>,
    /// `Σ_{α>𝟎} α!·f_α²`, componentwise.
    pub reference_variance: Vec<f64>,
}

impl McReport {
    /// Largest `|estimate − reference| / se` over components; `se = 0`
    /// counts as a pass only for an exact match.
    pub fn max_z(&self) -> (f64, f64) {
        let z = |est: &[f64], reference: &[f64], se: &[f64]| {
            est.iter()
                .zip(reference)
                .zip(se)
                .map(|((e, r), s)| {
                    let d = (e - r).abs();
                    if *s > 0.0 {
                        d / s
                    } else if d <= 1e-12 * r.abs().max(1.0) {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(0.0, f64::max)
        };
        (
            z(&self.mean, &self.reference_mean, &self.se_mean),
            z(&self.variance, &self.reference_variance, &self.se_variance),
        )
    }

    pub fn within(&self, sigmas: f64) -> bool {
        let (zm, zv) = self.max_z();
        zm <= sigmas && zv <= sigmas
    }
}

/// Reference variance `Σ_{α>𝟎} α!·f_α²` per spatial point.
pub fn chaos_variance(field: &ChaosField) -> Vec<f64> {
    let mut out = vec![0.0; field.m()];
    for (i, alpha) in field.basis().indices().iter().enumerate().skip(1) {
        let fact = alpha.factorial().to_f64().unwrap_or(f64::INFINITY);
        for (o, c) in out.iter_mut().zip(field.coeff(i)) {
            *o += fact * c * c;
        }
    }
    out
}

/// Seeded Monte-Carlo estimate of mean and variance.
///
/// Draw `i` uses the ChaCha20 stream `i` of `seed`, so results do not
/// depend on how draws are scheduled.
pub fn mc_moments(field: &ChaosField, draws: usize, seed: u64) -> Result<McReport> {
    if draws < 2 {
        return Err(Error::Input("Monte-Carlo needs at least 2 draws".into()));
    }
    let t = field.basis().truncation();
    let k = t.dimension() as usize;
    let samples: Vec<Vec<f64>> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let tables: Vec<Vec<f64>> = (0..k)
                .map(|_| {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    hermite_table(t.max_order(), g)
                })
                .collect();
            let mut out = vec![0.0; field.m()];
            evaluate_with_tables(field, &tables, &mut out);
            out
        })
        .collect();

    let m = field.m();
    let n = draws as f64;
    let mut mean = vec![0.0; m];
    for s in &samples {
        mean.iter_mut().zip(s).for_each(|(a, x)| *a += x);
    }
    mean.iter_mut().for_each(|a| *a /= n);
    let mut m2 = vec![0.0; m];
    let mut m4 = vec![0.0; m];
    for s in &samples {
        for x in 0..m {
            let d = s[x] - mean[x];
            m2[x] += d * d;
            m4[x] += d * d * d * d;
        }
    }
    let variance: Vec<f64> = m2.iter().map(|v| v / (n - 1.0)).collect();
    let se_mean = variance.iter().map(|v| (v / n).sqrt()).collect();
    let se_variance = variance
        .iter()
        .zip(&m4)
        .map(|(v, m4)| ((m4 / n - v * v).max(0.0) / n).sqrt())
        .collect();
    Ok(McReport {
        draws,
        seed,
        mean,
        variance,
        se_mean,
        se_variance,
        reference_mean: field.coeff(0).to_vec(),
        reference_variance: chaos_variance(field),
    })
}

/// `u(t) = e^{P(t)}u₀ + ∫_0^t e^{P(t)−P(s)} f(s) ds` with `P' = a`.
pub fn linear_oracle<F: Fn(f64) -> f64>(a: &TimeProfile, f: F, u0: f64, t: f64) -> f64 {
    let big_p = |s: f64| a.integral(0.0, s);
    let pt = big_p(t);
    let integrand = |s: f64| (pt - big_p(s)).exp() * f(s);
    pt.exp() * u0 + adaptive_simpson(&integrand, 0.0, t, 1e-13)
}

/// `(u_𝟎, u_ε, u_{2ε})` of `u' = u^{◊2}` with `u_𝟎(0) = c`.
pub fn riccati_oracle(c: f64, u_eps0: f64, u_2eps0: f64, t: f64) -> Result<(f64, f64, f64)> {
    let d = 1.0 - c * t;
    if d <= 0.0 {
        return Err(Error::Domain(format!("c·t = {} reaches the pole at 1", c * t)));
    }
    let u0 = c / d;
    let ue = u_eps0 / (d * d);
    let u2e = (u_2eps0 + u_eps0 * u_eps0 * t / d) / (d * d);
    Ok((u0, ue, u2e))
}

/// `max_x |a − b| / max_x |b|`.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(a, b)| a - b).collect();
    let scale = sup_norm(b);
    if scale == 0.0 {
        sup_norm(&diff)
    } else {
        sup_norm(&diff) / scale
    }
}
