//! Built-in verification checks.
//!
//! Each check compares the library against a closed form, an independent
//! algorithm or an algebraic identity and reports one pass/fail line.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::analysis::{kondratiev_norm_table, linear_oracle, mc_moments, riccati_oracle};
use crate::combinatorics::{
    catalan, factorial_ratio_bound, multi_catalan_closed, multi_catalan_recursive, CatalanTable,
};
use crate::error::Result;
use crate::hermite::hermite_function;
use crate::multiindex::{enumerate, IndexSet, Truncation};
use crate::operators::{
    duhamel_step, matrix_exponential, nonautonomous_step, GridFunction, Propagator, SpatialOperator,
    TimeProfile,
};
use crate::problem::Problem;
use crate::propagator::{certificate, solve_system, BoundStatus, SolveReport, SolverOptions};
use crate::report::{bounds_table, trajectory_table};
use crate::wick::{
    hermite_transform, power_coeff_split, wick_polynomial_direct, wick_product, wick_taylor, ChaosField,
    WickPolynomial,
};

pub const FUJITA_SPEC: &str = include_str!("../../../specs/fujita_small.json");
pub const RICCATI_SPEC: &str = include_str!("../../../specs/riccati.json");
pub const HEAT_SPEC: &str = include_str!("../../../specs/heat.json");

/// Seed used by every randomized check.
pub const CHECK_SEED: u64 = 42;
pub const MC_DRAWS: usize = 20000;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

/// Check names in id order; a suite is selected by one of these names or `all`.
pub const CHECKS: [&str; 10] = [
    "combinatorics",
    "wick",
    "stepping",
    "riccati",
    "linear",
    "heat",
    "certificate",
    "truncation",
    "monte-carlo",
    "determinism",
];

/// Resolves a suite name to check ids.
pub fn suite_ids(name: &str) -> Option<Vec<u32>> {
    match name {
        "all" => Some((1..=CHECKS.len() as u32).collect()),
        "bounds" => Some(vec![1, 7]),
        _ => CHECKS
            .iter()
            .position(|&c| c == name)
            .map(|i| vec![i as u32 + 1]),
    }
}

pub fn run_check(id: u32) -> CheckResult {
    let outcome = match id {
        1 => check_combinatorics(),
        2 => check_wick_with(wick_product),
        3 => check_stepping(),
        4 => check_riccati(),
        5 => check_linear(),
        6 => check_heat(),
        7 => check_certificate(),
        8 => check_truncation(),
        9 => check_monte_carlo(),
        10 => check_determinism(),
        _ => panic!("unknown check id {id}"),
    };
    finish(id, outcome)
}

fn finish(id: u32, outcome: Result<(bool, String)>) -> CheckResult {
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckResult {
        id,
        name: CHECKS[id as usize - 1],
        passed,
        detail,
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

/// Catalan closed form against the recurrence, the `4ⁿ` bound, the
/// factorial-ratio bound and multi-index Catalan closed form against recursion.
pub fn check_combinatorics() -> Result<(bool, String)> {
    let table = CatalanTable::new(30);
    let catalan_ok = (0..=30u32).all(|n| {
        let c = catalan(n);
        &c == table.get(n) && c <= num_bigint::BigUint::from(4u32).pow(n)
    });

    let fact_set = enumerate(Truncation::new(6, 8)?);
    let fact_ok = fact_set.iter().all(|a| factorial_ratio_bound(a).holds);

    let r_eps: BTreeMap<u32, f64> = [(1, 0.3), (2, 1.7), (3, 0.9), (4, 1.1)].into();
    let mut worst: f64 = 0.0;
    for a in enumerate(Truncation::new(4, 6)?).iter().filter(|a| !a.is_zero()) {
        let closed = multi_catalan_closed(a, &r_eps)?;
        let rec = multi_catalan_recursive(a, &r_eps)?;
        worst = worst.max((closed - rec).abs() / closed.abs());
    }
    let multi_ok = worst <= 1e-10;
    Ok((
        catalan_ok && fact_ok && multi_ok,
        format!(
            "catalan n<=30 {catalan_ok}; factorial bound on {} indices {fact_ok}; multi-catalan max rel {}",
            fact_set.len(),
            sci(worst)
        ),
    ))
}

fn random_sparse(basis: &Arc<IndexSet>, m: usize, max_order: u32, terms: usize, rng: &mut ChaCha20Rng) -> ChaosField {
    let candidates = basis.level(0).start..basis.level(max_order).end;
    let mut f = ChaosField::zeros(basis.clone(), m);
    for _ in 0..terms {
        let i = rng.random_range(candidates.clone());
        for v in f.coeff_mut(i) {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    f
}

/// Wick algebra identities with the product under test passed in.
pub fn check_wick_with<F>(product: F) -> Result<(bool, String)>
where
    F: Fn(&ChaosField, &ChaosField) -> Result<ChaosField>,
{
    let mut rng = ChaCha20Rng::seed_from_u64(CHECK_SEED);
    let basis = Arc::new(IndexSet::new(Truncation::new(3, 4)?));
    let m = 2;

    let mut hom_err: f64 = 0.0;
    for _ in 0..50 {
        let f = random_sparse(&basis, m, 2, 3, &mut rng);
        let g = random_sparse(&basis, m, 2, 3, &mut rng);
        let fg = product(&f, &g)?;
        for _ in 0..20 {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lhs = hermite_transform(&fg, &z)?;
            let hf = hermite_transform(&f, &z)?;
            let hg = hermite_transform(&g, &z)?;
            for x in 0..m {
                hom_err = hom_err.max((lhs[x] - hf[x] * hg[x]).abs());
            }
        }
    }

    let mut taylor_err: f64 = 0.0;
    for n in 0..=4usize {
        let mut u = ChaosField::zeros(basis.clone(), m);
        for i in 0..basis.len() {
            for v in u.coeff_mut(i) {
                *v = rng.random_range(-0.5..0.5);
            }
        }
        let coeffs: Vec<f64> = (0..=n)
            .map(|j| if j == n { 1.0 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let p = WickPolynomial::new(&coeffs)?;
        let direct = wick_polynomial_direct(&p, &u);
        let taylor = wick_taylor(&p, &u);
        let scale = direct.data().iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let diff = direct
            .data()
            .iter()
            .zip(taylor.data())
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        taylor_err = taylor_err.max(diff / scale);
    }

    let mut split_ok = true;
    let small = Arc::new(IndexSet::new(Truncation::new(2, 4)?));
    let mut u = ChaosField::zeros(small.clone(), 1);
    for i in 0..small.len() {
        u.coeff_mut(i)[0] = rng.random_range(-1.0..1.0);
    }
    for alpha in small.indices().iter().filter(|a| !a.is_zero()) {
        for n in 2..=4 {
            let (_, before) = power_coeff_split(&u, n, alpha)?;
            let mut perturbed = u.clone();
            for (j, beta) in small.indices().iter().enumerate() {
                let strictly_below = beta.is_below(alpha) && beta != alpha;
                if !strictly_below {
                    perturbed.coeff_mut(j)[0] += 1.0 + j as f64;
                }
            }
            let (_, after) = power_coeff_split(&perturbed, n, alpha)?;
            split_ok &= before == after;
        }
    }

    let passed = hom_err <= 1e-10 && taylor_err <= 1e-12 && split_ok;
    Ok((
        passed,
        format!(
            "homomorphism max err {}; taylor vs direct max rel {}; split remainder invariant {split_ok}",
            sci(hom_err),
            sci(taylor_err)
        ),
    ))
}

fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn duhamel_error(steps: usize) -> Result<f64> {
    let (a, lambda, horizon) = (-1.0, 0.3, 1.0);
    let dt = horizon / steps as f64;
    let op = SpatialOperator::scalar(a);
    let semigroup = Arc::new(op.exp(dt)?);
    let grid = GridFunction::constant(vec![lambda]);
    let mut u = vec![1.0];
    for n in 0..steps {
        let t = n as f64 * dt;
        let prop = Propagator::with_semigroup(semigroup.clone(), &grid, t, dt)?;
        u = duhamel_step(&prop, &u, &[t.cos()], &[(t + dt).cos()], dt);
    }
    let exact = linear_oracle(&TimeProfile::Constant { value: a + lambda }, f64::cos, 1.0, horizon);
    Ok((u[0] - exact).abs())
}

fn nonautonomous_error(steps: usize) -> Result<f64> {
    let horizon = 2.0;
    let dt = horizon / steps as f64;
    let profile = TimeProfile::Sin { freq: 1.0 };
    let op = SpatialOperator::scaled(SpatialOperator::scalar(1.0), profile.clone());
    let mut u = vec![1.0];
    for n in 0..steps {
        let t = n as f64 * dt;
        u = nonautonomous_step(&op, t, &u, &[t.cos()], &[(t + dt).cos()], dt)?;
    }
    let exact = linear_oracle(&profile, f64::cos, 1.0, horizon);
    Ok((u[0] - exact).abs())
}

fn rel_max_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax()
}

/// Convergence orders of both steppers, the semigroup law and the matrix
/// exponential against an eigendecomposition.
pub fn check_stepping() -> Result<(bool, String)> {
    let sizes = [40, 80, 160];
    let d_err = sizes.iter().map(|&n| duhamel_error(n)).collect::<Result<Vec<_>>>()?;
    let n_err = sizes.iter().map(|&n| nonautonomous_error(n)).collect::<Result<Vec<_>>>()?;
    let d_order = observed_orders(&d_err).into_iter().fold(f64::INFINITY, f64::min);
    let n_order = observed_orders(&n_err).into_iter().fold(f64::INFINITY, f64::min);

    let lap = SpatialOperator::laplacian_1d(32, 1.0)?;
    let (s, t) = (2e-4, 3e-4);
    let law = rel_max_diff(&(lap.exp(s)? * lap.exp(t)?), &lap.exp(s + t)?);

    let big = SpatialOperator::laplacian_1d(64, 1.0)?;
    let eig = SymmetricEigen::new(big.matrix().clone());
    let mut eig_err: f64 = 0.0;
    for s in [1e-5, 1e-4, 1e-3] {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (s * l).exp()));
        let reference = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        eig_err = eig_err.max(rel_max_diff(&matrix_exponential(big.matrix(), s)?, &reference));
    }

    let passed = d_order >= 1.9 && n_order >= 1.9 && law <= 1e-9 && eig_err <= 1e-10;
    Ok((
        passed,
        format!(
            "duhamel order {d_order:.3}; nonautonomous order {n_order:.3}; semigroup law rel {}; expm vs eigen rel {}",
            sci(law),
            sci(eig_err)
        ),
    ))
}

fn riccati_errors(steps: usize) -> Result<[f64; 3]> {
    let problem = Problem::from_json_str(RICCATI_SPEC)?.with_steps(steps)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let last = report.trajectory.last();
    let (u0, ue, u2e) = riccati_oracle(1.0, 1.0, 0.0, problem.horizon)?;
    let rel = |got: f64, want: f64| (got - want).abs() / want.abs();
    Ok([
        rel(last.coeff(0)[0], u0),
        rel(last.coeff(1)[0], ue),
        rel(last.coeff(2)[0], u2e),
    ])
}

/// Riccati closed forms at `N = 1000` and the error reduction from halving `Δt`.
pub fn check_riccati() -> Result<(bool, String)> {
    let coarse = riccati_errors(500)?;
    let base = riccati_errors(1000)?;
    let fine = riccati_errors(2000)?;
    let tol = [1e-8, 1e-6, 1e-5];
    let accurate = (0..3).all(|i| base[i] <= tol[i]);
    let ratios: Vec<f64> = (0..3).map(|i| base[i] / fine[i]).collect();
    let coarse_ratios: Vec<f64> = (0..3).map(|i| coarse[i] / base[i]).collect();
    let converging = ratios.iter().all(|&r| r >= 3.5);
    Ok((
        accurate && converging,
        format!(
            "rel errors at N=1000 [{}, {}, {}]; reduction 1000->2000 [{:.2}, {:.2}, {:.2}]; 500->1000 [{:.2}, {:.2}, {:.2}]",
            sci(base[0]),
            sci(base[1]),
            sci(base[2]),
            ratios[0],
            ratios[1],
            ratios[2],
            coarse_ratios[0],
            coarse_ratios[1],
            coarse_ratios[2]
        ),
    ))
}

/// `u' = sin(t)·u + f` with white-noise forcing on eight first-order modes.
pub fn linear_problem() -> Result<Problem> {
    let modes: Vec<String> = std::iter::once(r#"{"alpha": "0", "shape": {"constant": 1.0}}"#.to_string())
        .chain((1..=8).map(|k| {
            format!(r#"{{"alpha": "{k}^1", "shape": {{"constant": {}}}}}"#, 1.0 / k as f64)
        }))
        .collect();
    let text = format!(
        r#"{{"operator": {{"preset": "scaled:sin", "params": {{"base": "scalar", "a": 1.0, "freq": 1.0}}}},
            "poly": {{"coeffs": []}}, "trunc": {{"K": 8, "P": 1}}, "time": {{"T": 2.0, "steps": 2000}},
            "initial": {{"mode_table": [{}]}}, "forcing": {{"preset": "white-noise"}}}}"#,
        modes.join(", ")
    );
    Problem::from_json_str(&text)
}

pub fn check_linear() -> Result<(bool, String)> {
    let problem = linear_problem()?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let profile = TimeProfile::Sin { freq: 1.0 };
    let basis = report.basis().clone();
    let mut worst: f64 = 0.0;
    for n in (0..report.trajectory.times.len()).step_by(100) {
        let t = report.trajectory.times[n];
        let field = &report.trajectory.fields[n];
        for (i, alpha) in basis.indices().iter().enumerate() {
            let exact = if alpha.is_zero() {
                linear_oracle(&profile, |_| 0.0, 1.0, t)
            } else {
                let k = alpha.entries()[0].0;
                linear_oracle(&profile, |s| hermite_function(k, s), 1.0 / k as f64, t)
            };
            worst = worst.max((field.coeff(i)[0] - exact).abs());
        }
    }
    Ok((worst <= 1e-6, format!("max abs error over {} indices {}", basis.len(), sci(worst))))
}

pub fn check_heat() -> Result<(bool, String)> {
    let problem = Problem::from_json_str(HEAT_SPEC)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    let values = &report.level0.values;
    let norm = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let rate = (norm(values.last().expect("nodes")) / norm(&values[0])).ln() / problem.horizon;
    let h = problem.length / (problem.m() as f64 + 1.0);
    let eigen = -4.0 / (h * h) * (std::f64::consts::PI * h / (2.0 * problem.length)).sin().powi(2);
    let rel = (rate - eigen).abs() / eigen.abs();
    Ok((rel <= 1e-4, format!("rate {rate:.10} vs eigenvalue {eigen:.10}, rel {}", sci(rel))))
}

pub fn fujita_report() -> Result<(Problem, SolveReport)> {
    let problem = Problem::from_json_str(FUJITA_SPEC)?;
    let report = solve_system(&problem, &SolverOptions::default())?;
    Ok((problem, report))
}

pub fn check_certificate() -> Result<(bool, String)> {
    let (problem, report) = fujita_report()?;
    let cert = certificate(&problem, &report);
    let Some(c) = &cert.constants else {
        return Ok((false, cert.fit_failure.unwrap_or_default()));
    };
    let relevant: Vec<_> = cert.entries.iter().filter(|e| e.alpha.order() >= 1).collect();
    let holds = relevant.iter().all(|e| e.status == BoundStatus::Holds);
    let slack = relevant
        .iter()
        .filter_map(|e| e.envelope.map(|env| e.l_alpha / env))
        .fold(0.0f64, f64::max);
    Ok((
        c.k < 1.0 && holds,
        format!(
            "K = {}, p = {}, c = {:.4}, {} indices checked, max L/envelope {}",
            sci(c.k),
            c.p,
            c.c,
            relevant.len(),
            sci(slack)
        ),
    ))
}

/// Weighted norms of `u^{(P)} − u^{(P−1)}` for `P = 1 … 4` on the Fujita run.
pub fn truncation_differences() -> Result<Vec<(u32, f64)>> {
    let base = Problem::from_json_str(FUJITA_SPEC)?;
    let t = base.trunc;
    let full = solve_system(&base, &SolverOptions::default())?;
    let q = certificate(&base, &full)
        .constants
        .map(|c| c.q)
        .ok_or_else(|| crate::Error::Input("certificate fit failed".into()))?;
    let mut runs = Vec::new();
    for p in 0..=t.max_order() {
        let problem = base.clone().with_truncation(Truncation::new(t.dimension(), p)?);
        runs.push(solve_system(&problem, &SolverOptions::default())?);
    }
    let mut out = Vec::new();
    for p in 1..=t.max_order() as usize {
        let (hi, lo) = (&runs[p], &runs[p - 1]);
        let basis = hi.basis().clone();
        let lo_basis = lo.basis().clone();
        let mut table = vec![0.0; basis.len()];
        for (n, field) in hi.trajectory.fields.iter().enumerate() {
            for (i, alpha) in basis.indices().iter().enumerate() {
                let below = lo_basis.position(alpha).map(|j| lo.trajectory.fields[n].coeff(j));
                let diff = match below {
                    Some(v) => field.coeff(i).iter().zip(v).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())),
                    None => field.coeff(i).iter().fold(0.0f64, |a, x| a.max(x.abs())),
                };
                table[i] = f64::max(table[i], diff);
            }
        }
        out.push((p as u32, kondratiev_norm_table(&basis, &table, 1.0, q)?.value));
    }
    Ok(out)
}

pub fn check_truncation() -> Result<(bool, String)> {
    let diffs = truncation_differences()?;
    let tail: Vec<f64> = diffs.iter().filter(|(p, _)| *p >= 2).map(|d| d.1).collect();
    let monotone = tail.windows(2).all(|w| w[1] < w[0]);
    let listing: Vec<String> = diffs.iter().map(|(p, v)| format!("P={p}: {}", sci(*v))).collect();
    Ok((monotone, listing.join(", ")))
}

pub fn check_monte_carlo() -> Result<(bool, String)> {
    let (_, report) = fujita_report()?;
    let field = report.trajectory.last();
    let first = mc_moments(field, MC_DRAWS, CHECK_SEED)?;
    let second = mc_moments(field, MC_DRAWS, CHECK_SEED)?;
    let (zm, zv) = first.max_z();
    let repeatable = crate::report::mc_table(&first)?.bytes == crate::report::mc_table(&second)?.bytes;
    Ok((
        first.within(4.0) && repeatable,
        format!("max z mean {zm:.3}, max z variance {zv:.3}, repeatable {repeatable}"),
    ))
}

pub fn check_determinism() -> Result<(bool, String)> {
    let render = || -> Result<Vec<Vec<u8>>> {
        let (problem, report) = fujita_report()?;
        let cert = certificate(&problem, &report);
        Ok(vec![
            trajectory_table(&report, 1)?.bytes,
            bounds_table("sup_norms.csv", &cert)?.bytes,
        ])
    };
    let identical = render()? == render()?;

    let mut zero_ok = true;
    for spec in [FUJITA_SPEC, HEAT_SPEC, RICCATI_SPEC] {
        let mut problem = Problem::from_json_str(spec)?;
        problem.initial.retain(|(a, _)| a.is_zero());
        let report = solve_system(&problem, &SolverOptions::default())?;
        zero_ok &= report
            .trajectory
            .fields
            .iter()
            .all(|f| f.data()[f.m()..].iter().all(|&x| x == 0.0));
    }
    Ok((
        identical && zero_ok,
        format!("repeat outputs identical {identical}; deterministic data gives zero higher coefficients {zero_ok}"),
    ))
}
