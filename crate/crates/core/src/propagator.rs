//! The triangular propagator system.
//!
//! Level 0 is the deterministic nonlinear problem
//! `u₀' = A u₀ + p(u₀) + f₀`, integrated with RK4. Every `α > 𝟎` then solves
//! the linear problem `u_α' = (A + p′(u₀))u_α + g_α` with
//! `g_α = Σ_{j≥2} p^{(j)}(u₀)/j! ⊙ S_j(α) + f_α`, where the chain sums `S_j`
//! only involve coefficients strictly below `α`. Levels are solved in order;
//! the indices of one level are independent and run in parallel.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::multiindex::{IndexSet, MultiIndex};
use crate::operators::{duhamel_step, GridFunction, Propagator};
use crate::problem::Problem;
use crate::wick::{sup_norm, ChainSums, ChaosField};

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Minimum RK4 substeps per output step at level 0.
    pub min_substeps: usize,
    /// Largest admissible `h·ρ(A)` for an RK4 substep.
    pub stiffness_limit: f64,
    /// Level-0 sup-norm beyond which the run is declared blown up.
    pub blowup_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            min_substeps: 4,
            stiffness_limit: 2.5,
            blowup_cap: 1e8,
        }
    }
}

/// Level-0 trajectory on the output grid.
#[derive(Clone, Debug)]
pub struct Level0 {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// `M_n = sup_t ‖u₀(t)‖`.
    pub sup_norm: f64,
    pub substeps: usize,
}

fn rk4_substeps(problem: &Problem, opts: &SolverOptions) -> usize {
    let rho = problem.operator.spectral_bound(problem.horizon);
    let needed = (problem.dt() * rho / opts.stiffness_limit).ceil() as usize;
    opts.min_substeps.max(needed)
}

/// RK4 for the deterministic level-0 equation.
pub fn solve_level0(problem: &Problem, opts: &SolverOptions) -> Result<Level0> {
    let m = problem.m();
    let dt = problem.dt();
    let substeps = rk4_substeps(problem, opts);
    let h = dt / substeps as f64;
    let zero = MultiIndex::zero();
    let op = &problem.operator;
    let poly = &problem.poly;
    let rhs = |t: f64, u: &[f64]| -> Vec<f64> {
        let mut out = op.apply(t, u);
        for (o, &x) in out.iter_mut().zip(u) {
            *o += poly.eval(x);
        }
        if let Some(f) = problem.forcing.eval(&zero, t) {
            out.iter_mut().zip(f).for_each(|(o, f)| *o += f);
        }
        out
    };
    let axpy = |u: &[f64], a: f64, k: &[f64]| -> Vec<f64> {
        u.iter().zip(k).map(|(u, k)| u + a * k).collect()
    };

    let mut u = problem
        .initial
        .iter()
        .find(|(a, _)| a.is_zero())
        .map(|(_, v)| v.clone())
        .unwrap_or_else(|| vec![0.0; m]);
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut sup = sup_norm(&u);
    for n in 0..problem.steps {
        let t0 = n as f64 * dt;
        for s in 0..substeps {
            let t = t0 + s as f64 * h;
            let k1 = rhs(t, &u);
            let k2 = rhs(t + 0.5 * h, &axpy(&u, 0.5 * h, &k1));
            let k3 = rhs(t + 0.5 * h, &axpy(&u, 0.5 * h, &k2));
            let k4 = rhs(t + h, &axpy(&u, h, &k3));
            for i in 0..m {
                u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let norm = sup_norm(&u);
            if !norm.is_finite() || norm > opts.blowup_cap {
                return Err(Error::BlowUp {
                    time: t + h,
                    norm,
                    cap: opts.blowup_cap,
                });
            }
        }
        sup = sup.max(sup_norm(&u));
        times.push((n + 1) as f64 * dt);
        values.push(u.clone());
    }
    Ok(Level0 {
        times,
        values,
        sup_norm: sup,
        substeps,
    })
}

/// Chaos fields on the uniform output grid.
#[derive(Clone, Debug)]
pub struct ChaosTrajectory {
    pub times: Vec<f64>,
    pub fields: Vec<ChaosField>,
}

impl ChaosTrajectory {
    pub fn last(&self) -> &ChaosField {
        self.fields.last().expect("trajectory has at least one node")
    }
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub trajectory: ChaosTrajectory,
    /// `L_α = sup_t ‖u_α(t)‖`, in index order.
    pub sup_norms: Vec<f64>,
    pub level0: Level0,
    /// `sup_t ‖f_α(t)‖` on the output grid, in index order.
    pub forcing_sup: Vec<f64>,
}

impl SolveReport {
    pub fn basis(&self) -> &Arc<IndexSet> {
        self.trajectory.fields[0].basis()
    }
}

/// Everything an `α`-solve reads; immutable while a level runs.
struct LevelContext<'a> {
    problem: &'a Problem,
    u0: &'a [Vec<f64>],
    steps: &'a [Propagator],
    chains: &'a [ChainSums],
    forcing: &'a [Option<Vec<Vec<f64>>>],
    initial: &'a ChaosField,
}

struct AlphaSolution {
    values: Vec<Vec<f64>>,
    terms: Vec<Vec<f64>>,
}

/// Right-hand side `g_α` at one node from precomputed chain terms.
pub fn assemble_g(problem: &Problem, u0: &[f64], terms: &[f64], forcing: Option<&[f64]>) -> Vec<f64> {
    let m = u0.len();
    let mut g = match forcing {
        Some(f) => f.to_vec(),
        None => vec![0.0; m],
    };
    let degree = problem.poly.degree();
    for j in 2..=degree {
        let s = &terms[(j - 2) * m..(j - 1) * m];
        for x in 0..m {
            g[x] += problem.poly.taylor_coeff(j, u0[x]) * s[x];
        }
    }
    g
}

fn solve_alpha(ctx: &LevelContext<'_>, i: usize) -> Result<AlphaSolution> {
    let nodes = ctx.u0.len();
    let dt = ctx.problem.dt();
    let mut terms = Vec::with_capacity(nodes);
    let mut g = Vec::with_capacity(nodes);
    for n in 0..nodes {
        let t = ctx.chains[n].chain_terms(i)?;
        let f = ctx.forcing[i].as_ref().map(|f| f[n].as_slice());
        g.push(assemble_g(ctx.problem, &ctx.u0[n], &t, f));
        terms.push(t);
    }
    let mut values = Vec::with_capacity(nodes);
    values.push(ctx.initial.coeff(i).to_vec());
    for n in 0..nodes - 1 {
        let next = duhamel_step(&ctx.steps[n], &values[n], &g[n], &g[n + 1], dt);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!(
                "coefficient {} became non-finite at t = {}",
                ctx.initial.basis().get(i),
                (n + 1) as f64 * dt
            )));
        }
        values.push(next);
    }
    Ok(AlphaSolution { values, terms })
}

/// Per-step propagators `S(t_{n+1}, t_n)` for `A + p′(u₀(t))`.
pub fn build_steps(problem: &Problem, level0: &Level0) -> Result<Vec<Propagator>> {
    let dt = problem.dt();
    let derivative = problem.poly.derivative();
    let lambda_nodes = level0
        .values
        .iter()
        .map(|u| u.iter().map(|&x| derivative.eval(x)).collect())
        .collect();
    let lambda = GridFunction::new(0.0, dt, lambda_nodes)?;
    let op = &problem.operator;
    if op.is_autonomous() {
        let semigroup = Arc::new(op.exp(dt)?);
        (0..problem.steps)
            .map(|n| Propagator::with_semigroup(semigroup.clone(), &lambda, n as f64 * dt, dt))
            .collect()
    } else {
        (0..problem.steps)
            .into_par_iter()
            .map(|n| Propagator::for_step(op, &lambda, n as f64 * dt, dt))
            .collect()
    }
}

fn sample_forcing(problem: &Problem, basis: &IndexSet, times: &[f64]) -> Vec<Option<Vec<Vec<f64>>>> {
    let mut out = vec![None; basis.len()];
    for alpha in problem.forcing.support(problem.trunc) {
        if let Some(i) = basis.position(&alpha) {
            if i == 0 {
                continue;
            }
            let samples: Option<Vec<Vec<f64>>> = times
                .par_iter()
                .map(|&t| problem.forcing.eval(&alpha, t))
                .collect();
            out[i] = samples;
        }
    }
    out
}

/// Solves all levels `|α| = 0 … P`.
pub fn solve_system(problem: &Problem, opts: &SolverOptions) -> Result<SolveReport> {
    let basis = problem.basis();
    let m = problem.m();
    let level0 = solve_level0(problem, opts)?;
    let nodes = level0.times.len();
    let steps = build_steps(problem, &level0)?;
    let forcing = sample_forcing(problem, &basis, &level0.times);
    let initial = problem.initial_field(basis.clone());
    let depth = problem.poly.degree().max(1);

    let mut chains: Vec<ChainSums> = (0..nodes)
        .map(|_| ChainSums::new(basis.clone(), m, depth))
        .collect();
    let mut coeffs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); basis.len()];
    coeffs[0] = level0.values.clone();

    for level in 1..=problem.trunc.max_order() {
        let range = basis.level(level);
        let solved: Vec<AlphaSolution> = {
            let ctx = LevelContext {
                problem,
                u0: &level0.values,
                steps: &steps,
                chains: &chains,
                forcing: &forcing,
                initial: &initial,
            };
            range
                .clone()
                .into_par_iter()
                .map(|i| solve_alpha(&ctx, i))
                .collect::<Result<Vec<_>>>()?
        };
        for (i, sol) in range.zip(solved) {
            for ((chain, terms), values) in chains.iter_mut().zip(&sol.terms).zip(&sol.values) {
                chain.store_terms(i, terms);
                chain.set_linear(i, values);
            }
            coeffs[i] = sol.values;
        }
    }

    let sup_norms = coeffs
        .iter()
        .map(|traj| traj.iter().map(|v| sup_norm(v)).fold(0.0, f64::max))
        .collect();
    let forcing_sup = forcing
        .iter()
        .map(|f| match f {
            Some(f) => f.iter().map(|v| sup_norm(v)).fold(0.0, f64::max),
            None => 0.0,
        })
        .collect::<Vec<f64>>();
    let mut forcing_sup = forcing_sup;
    if let Some(f0) = sample_level0_forcing(problem, &level0.times) {
        forcing_sup[0] = f0;
    }
    let fields = (0..nodes)
        .map(|n| {
            let mut f = ChaosField::zeros(basis.clone(), m);
            for (i, traj) in coeffs.iter().enumerate() {
                f.coeff_mut(i).copy_from_slice(&traj[n]);
            }
            f
        })
        .collect();
    Ok(SolveReport {
        trajectory: ChaosTrajectory {
            times: level0.times.clone(),
            fields,
        },
        sup_norms,
        level0,
        forcing_sup,
    })
}

fn sample_level0_forcing(problem: &Problem, times: &[f64]) -> Option<f64> {
    let zero = MultiIndex::zero();
    let mut any = false;
    let mut sup: f64 = 0.0;
    for &t in times {
        if let Some(f) = problem.forcing.eval(&zero, t) {
            any = true;
            sup = sup.max(sup_norm(&f));
        }
    }
    any.then_some(sup)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundStatus {
    Holds,
    Violated,
    NotCertified,
}

impl BoundStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundStatus::Holds => "true",
            BoundStatus::Violated => "false",
            BoundStatus::NotCertified => "not-certified",
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoundEntry {
    pub alpha: MultiIndex,
    /// Computed `L_α`, scaled by `κ` when the quadratic coefficient exceeds 1.
    pub l_alpha: f64,
    pub envelope: Option<f64>,
    pub status: BoundStatus,
}

/// Constants of the coefficient envelope.
#[derive(Clone, Debug)]
pub struct CertificateConstants {
    pub degree: usize,
    pub m: f64,
    pub w: f64,
    /// `max(w, 1e−8)`.
    pub w_shifted: f64,
    /// `M_n = sup_t ‖u₀(t)‖`.
    pub level0_sup: f64,
    /// `sup_t ‖p′(u₀(t))‖`.
    pub lambda_sup: f64,
    /// `sup_t ‖p″(u₀(t))/2‖`.
    pub quadratic_sup: f64,
    pub w_n: f64,
    pub m_n: f64,
    /// Data rescaling `v = κu` that brings the quadratic coefficient into `[−1, 1]`.
    pub kappa: f64,
    pub k: f64,
    pub p: f64,
    pub c: f64,
    pub s: u32,
    /// Norm exponent `2p + s + 5.5`.
    pub q: f64,
    pub a1: f64,
    pub a2: f64,
}

#[derive(Clone, Debug)]
pub struct BoundCertificate {
    pub constants: Option<CertificateConstants>,
    /// Reason the data normalization failed, when it did.
    pub fit_failure: Option<String>,
    pub entries: Vec<BoundEntry>,
}

impl BoundCertificate {
    /// No certified entry is violated and the fit succeeded.
    pub fn holds(&self) -> bool {
        self.constants.is_some() && self.entries.iter().all(|e| e.status != BoundStatus::Violated)
    }
}

struct EnvelopeShape {
    degree: usize,
    horizon: f64,
    m: f64,
    w_n: f64,
    growth: f64,
    k: f64,
    p: f64,
    c: f64,
    a1: f64,
    a2: f64,
}

impl EnvelopeShape {
    fn envelope(&self, alpha: &MultiIndex) -> Option<f64> {
        let order = alpha.order();
        let weight = |r: f64| alpha.weight(r).ok();
        match (self.degree, order) {
            (0 | 1, _) => Some((1.0 + self.horizon) * self.m * (self.w_n * self.horizon).exp() * self.k * weight(self.p)?),
            (_, 0) => None,
            (_, 1) => Some(self.growth * self.k * weight(self.p)?),
            (2, _) => {
                let log = (self.k.sqrt() / (8.0 * self.growth)).ln()
                    + order as f64 * (4.0 * self.c).ln()
                    + alpha.log_weight(self.p + 2.0);
                Some(log.exp())
            }
            (3, 2) => {
                let a = if alpha.entries().len() == 1 { self.a1 } else { self.a2 };
                Some(a * (self.w_n * self.horizon).exp() * self.k * weight(self.p)?)
            }
            _ => None,
        }
    }
}

const P_LATTICE_STEP: f64 = 0.5;
const P_LATTICE_MAX: f64 = 8.0;
const W_FLOOR: f64 = 1e-8;

/// Smallest `p` on `{0, 0.5, …, 8}` with `sup_α d_α (2ℕ)^{−pα} < 1`.
pub fn fit_normalization(data: &[(MultiIndex, f64)]) -> Option<(f64, f64)> {
    let steps = (P_LATTICE_MAX / P_LATTICE_STEP).round() as usize;
    (0..=steps).map(|i| i as f64 * P_LATTICE_STEP).find_map(|p| {
        let k = data
            .iter()
            .map(|(a, d)| d * (-a.log_weight(p)).exp())
            .fold(0.0, f64::max);
        (k < 1.0).then_some((k, p))
    })
}

/// Compares the computed `L_α` with the a-priori coefficient envelope.
pub fn certificate(problem: &Problem, report: &SolveReport) -> BoundCertificate {
    let basis = report.basis().clone();
    let horizon = problem.horizon;
    let degree = problem.poly.degree();
    let (m, w) = problem.operator.stability(horizon);
    let w_shifted = w.max(W_FLOOR);
    let d1 = problem.poly.derivative();
    let lambda_sup = report
        .level0
        .values
        .iter()
        .flat_map(|u| u.iter().map(|&x| d1.eval(x).abs()))
        .fold(0.0, f64::max);
    let quadratic_sup = report
        .level0
        .values
        .iter()
        .flat_map(|u| u.iter().map(|&x| problem.poly.taylor_coeff(2, x).abs()))
        .fold(0.0, f64::max);
    let w_n = w_shifted + m * lambda_sup;
    let m_n = m + m / w_n;
    let kappa = if degree == 2 {
        problem.poly.coeffs()[2].abs().max(1.0)
    } else {
        1.0
    };

    let initial = problem.initial_field(basis.clone());
    let mut data = Vec::new();
    for (i, alpha) in basis.indices().iter().enumerate() {
        if alpha.is_zero() && degree >= 2 {
            continue;
        }
        let mut forcing = report.forcing_sup[i];
        if alpha.is_zero() {
            forcing += problem.poly.coeffs()[0].abs();
        }
        let d = sup_norm(initial.coeff(i)).max(forcing);
        data.push((alpha.clone(), kappa * d));
    }

    let Some((k, p)) = fit_normalization(&data) else {
        let entries = basis
            .indices()
            .iter()
            .zip(&report.sup_norms)
            .map(|(a, &l)| BoundEntry {
                alpha: a.clone(),
                l_alpha: kappa * l,
                envelope: None,
                status: BoundStatus::NotCertified,
            })
            .collect();
        return BoundCertificate {
            constants: None,
            fit_failure: Some(
                "no p in {0, 0.5, ..., 8} gives K < 1: the data normalization is unattainable".into(),
            ),
            entries,
        };
    };

    let growth = m_n * (w_n * horizon).exp();
    let c = 2.0 * growth * (growth * k.sqrt() + 1.0);
    let s = crate::combinatorics::series_exponent(16.0 * c * c);
    let q = 2.0 * p + s as f64 + 5.0 + 0.5;
    let square = m_n * m_n * (2.0 * w_n * horizon).exp() * k;
    let a1 = m + m / w_n * (quadratic_sup * square + 1.0);
    let a2 = m + m / w_n * (2.0 * quadratic_sup * square + 1.0);
    let shape = EnvelopeShape {
        degree,
        horizon,
        m,
        w_n,
        growth,
        k,
        p,
        c,
        a1,
        a2,
    };

    let entries = basis
        .indices()
        .iter()
        .zip(&report.sup_norms)
        .map(|(alpha, &l)| {
            let l = kappa * l;
            let envelope = shape.envelope(alpha);
            let status = match envelope {
                Some(e) if l <= e => BoundStatus::Holds,
                Some(_) => BoundStatus::Violated,
                None => BoundStatus::NotCertified,
            };
            BoundEntry {
                alpha: alpha.clone(),
                l_alpha: l,
                envelope,
                status,
            }
        })
        .collect();

    BoundCertificate {
        constants: Some(CertificateConstants {
            degree,
            m,
            w,
            w_shifted,
            level0_sup: report.level0.sup_norm,
            lambda_sup,
            quadratic_sup,
            w_n,
            m_n,
            kappa,
            k,
            p,
            c,
            s,
            q,
            a1,
            a2,
        }),
        fit_failure: None,
        entries,
    }
}
