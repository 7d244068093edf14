//! Acceptance criteria 1–10.
//!
//! Each criterion is recomputed here against oracles written in this file
//! (integer arithmetic, naive convolutions, closed forms, fine reference
//! integrations) and printed as one PASS/FAIL line. The verdict is also
//! compared with the built-in `verify` check of the same number.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use wickflow::analysis::mc_moments;
use wickflow::combinatorics::{catalan, factorial_ratio_bound, multi_catalan_closed, multi_catalan_recursive};
use wickflow::operators::{
    duhamel_step, matrix_exponential, nonautonomous_step, GridFunction, Propagator, SpatialOperator, TimeProfile,
};
use wickflow::problem::Problem;
use wickflow::propagator::{certificate, solve_system, BoundStatus, SolveReport, SolverOptions};
use wickflow::verify::run_check;
use wickflow::wick::{power_coeff_split, wick_product, wick_taylor};
use wickflow::{ChaosField, IndexSet, MultiIndex, Truncation, WickPolynomial};

/// Criteria that cannot be met as stated; the line still prints FAIL and the
/// attainable parts are asserted instead.
const UNATTAINABLE: &[u32] = &[4];

struct Outcome {
    passed: bool,
    detail: String,
    /// Parts that must hold even when the criterion as a whole cannot.
    attainable: bool,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Self {
            passed,
            detail,
            attainable: passed,
        }
    }
}

fn spec_path(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../specs").join(name)
}

fn load(name: &str) -> Problem {
    Problem::from_path(&spec_path(name)).unwrap()
}

fn solve(p: &Problem) -> SolveReport {
    solve_system(p, &SolverOptions::default()).unwrap()
}

// ---------------------------------------------------------------- oracles

fn binomial_u128(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial_u128(n: u32) -> u128 {
    (1..=n as u128).product()
}

/// All exponent vectors of length `k` with total order at most `p`.
fn dense_indices(k: usize, p: u32) -> Vec<Vec<u32>> {
    fn rec(prefix: &mut Vec<u32>, k: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == k {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=left {
            prefix.push(e);
            rec(prefix, k, left - e, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), k, p, &mut out);
    out
}

/// Truncated Wick product by direct double loop over index pairs.
fn naive_product(f: &ChaosField, g: &ChaosField) -> ChaosField {
    let basis = f.basis().clone();
    let mut out = ChaosField::zeros(basis.clone(), f.m());
    for (i, a) in basis.indices().iter().enumerate() {
        for (j, b) in basis.indices().iter().enumerate() {
            if let Some(pos) = basis.position(&(a + b)) {
                let (fi, gj) = (f.coeff(i).to_vec(), g.coeff(j).to_vec());
                for (x, o) in out.coeff_mut(pos).iter_mut().enumerate() {
                    *o += fi[x] * gj[x];
                }
            }
        }
    }
    out
}

fn naive_power(u: &ChaosField, n: usize) -> ChaosField {
    let mut acc = ChaosField::zeros(u.basis().clone(), u.m());
    acc.coeff_mut(0).iter_mut().for_each(|x| *x = 1.0);
    for _ in 0..n {
        acc = naive_product(&acc, u);
    }
    acc
}

/// `Σ_α f_α z^α` evaluated monomial by monomial.
fn transform(f: &ChaosField, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; f.m()];
    for (i, a) in f.basis().indices().iter().enumerate() {
        let dense = a.to_dense(z.len());
        let w: f64 = dense.iter().zip(z).map(|(&e, &zk)| zk.powi(e as i32)).product();
        for (o, c) in out.iter_mut().zip(f.coeff(i)) {
            *o += w * c;
        }
    }
    out
}

/// Classical RK4 on a scalar ODE with a very fine step.
fn reference_ode(rhs: impl Fn(f64, f64) -> f64, u0: f64, t: f64) -> f64 {
    let steps = 200_000;
    let h = t / steps as f64;
    let mut u = u0;
    for n in 0..steps {
        let s = n as f64 * h;
        let k1 = rhs(s, u);
        let k2 = rhs(s + h / 2.0, u + h / 2.0 * k1);
        let k3 = rhs(s + h / 2.0, u + h / 2.0 * k2);
        let k4 = rhs(s + h, u + h * k3);
        u += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    u
}

/// Orthonormal Hermite function via physicists' polynomials.
fn xi(k: u32, t: f64) -> f64 {
    let n = k - 1;
    let (mut h0, mut h1) = (1.0, 2.0 * t);
    let hn = if n == 0 {
        h0
    } else {
        for j in 1..n {
            let next = 2.0 * t * h1 - 2.0 * j as f64 * h0;
            h0 = h1;
            h1 = next;
        }
        h1
    };
    let norm = (2f64.powi(n as i32) * factorial_u128(n) as f64 * std::f64::consts::PI.sqrt()).sqrt();
    hn * (-t * t / 2.0).exp() / norm
}

// -------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let mut recurrence = vec![1u128];
    for n in 1..=30usize {
        recurrence.push((0..n).map(|k| recurrence[k] * recurrence[n - 1 - k]).sum());
    }
    let catalan_ok = (0..=30u32).all(|n| {
        let closed = binomial_u128(2 * n as u128, n as u128) / (n as u128 + 1);
        closed == recurrence[n as usize]
            && catalan(n).to_string() == closed.to_string()
            && closed <= 4u128.pow(n)
    });

    let mut lemma_ok = true;
    let mut count = 0;
    for dense in dense_indices(6, 8) {
        let order: u32 = dense.iter().sum();
        let ratio = factorial_u128(order) / dense.iter().map(|&e| factorial_u128(e)).product::<u128>();
        let bound: u128 = dense
            .iter()
            .enumerate()
            .map(|(k, &e)| (2 * (k as u128 + 1)).pow(2 * e))
            .product();
        let alpha = MultiIndex::from_dense(&dense);
        lemma_ok &= ratio <= bound && factorial_ratio_bound(&alpha).holds;
        count += 1;
    }

    let r_eps: BTreeMap<u32, f64> = [(1, 0.7), (2, 1.3), (3, 0.45), (4, 2.1)].into();
    let mut worst: f64 = 0.0;
    for dense in dense_indices(4, 6).into_iter().filter(|d| d.iter().sum::<u32>() > 0) {
        let alpha = MultiIndex::from_dense(&dense);
        let order: u32 = dense.iter().sum();
        let c = binomial_u128(2 * (order as u128 - 1), order as u128 - 1) / order as u128;
        let multinomial = factorial_u128(order) / dense.iter().map(|&e| factorial_u128(e)).product::<u128>();
        let weight: f64 = dense
            .iter()
            .enumerate()
            .map(|(k, &e)| r_eps[&(k as u32 + 1)].powi(e as i32))
            .product();
        let oracle = (c * multinomial) as f64 * weight;
        for v in [
            multi_catalan_closed(&alpha, &r_eps).unwrap(),
            multi_catalan_recursive(&alpha, &r_eps).unwrap(),
        ] {
            worst = worst.max((v - oracle).abs() / oracle);
        }
    }
    Outcome::new(
        catalan_ok && lemma_ok && worst <= 1e-10,
        format!("catalan n<=30 {catalan_ok}; factorial bound on {count} indices {lemma_ok}; multi-catalan rel {worst:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let basis = Arc::new(IndexSet::new(Truncation::new(3, 4).unwrap()));
    let low = basis.level(2).end;
    let random_small = |rng: &mut ChaCha20Rng| {
        let mut f = ChaosField::zeros(basis.clone(), 2);
        for _ in 0..3 {
            let i = rng.random_range(0..low);
            f.coeff_mut(i).iter_mut().for_each(|x| *x = rng.random_range(-2.0..2.0));
        }
        f
    };
    let mut hom: f64 = 0.0;
    let mut naive_gap: f64 = 0.0;
    for _ in 0..50 {
        let f = random_small(&mut rng);
        let g = random_small(&mut rng);
        let fg = wick_product(&f, &g).unwrap();
        let reference = naive_product(&f, &g);
        naive_gap = naive_gap.max(fg.data().iter().zip(reference.data()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())));
        for _ in 0..20 {
            let z: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (l, a, b) = (transform(&fg, &z), transform(&f, &z), transform(&g, &z));
            for x in 0..2 {
                hom = hom.max((l[x] - a[x] * b[x]).abs());
            }
        }
    }

    let mut taylor: f64 = 0.0;
    for n in 0..=4usize {
        let mut u = ChaosField::zeros(basis.clone(), 2);
        for i in 0..basis.len() {
            u.coeff_mut(i).iter_mut().for_each(|x| *x = rng.random_range(-0.5..0.5));
        }
        let coeffs: Vec<f64> = (0..=n).map(|j| if j == n { 1.5 } else { rng.random_range(-1.0..1.0) }).collect();
        let mut direct = ChaosField::zeros(basis.clone(), 2);
        for (j, a) in coeffs.iter().enumerate() {
            direct = direct.add(&naive_power(&u, j).scaled(*a)).unwrap();
        }
        let t = wick_taylor(&WickPolynomial::new(&coeffs).unwrap(), &u);
        let scale = direct.data().iter().fold(1.0f64, |a, x| a.max(x.abs()));
        taylor = taylor.max(direct.data().iter().zip(t.data()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())) / scale);
    }

    let small = Arc::new(IndexSet::new(Truncation::new(2, 4).unwrap()));
    let mut u = ChaosField::zeros(small.clone(), 1);
    for i in 0..small.len() {
        u.coeff_mut(i)[0] = rng.random_range(-1.0..1.0);
    }
    let mut split_ok = true;
    let mut split_sum: f64 = 0.0;
    for (ai, alpha) in small.indices().iter().enumerate().skip(1) {
        for n in 2..=4u32 {
            let (lead, rem) = power_coeff_split(&u, n, alpha).unwrap();
            let full = naive_power(&u, n as usize);
            split_sum = split_sum.max((lead[0] + rem[0] - full.coeff(ai)[0]).abs());
            let mut v = u.clone();
            for (j, beta) in small.indices().iter().enumerate() {
                if !(beta.is_below(alpha) && beta != alpha) {
                    v.coeff_mut(j)[0] = 100.0 * rng.random_range(-1.0..1.0);
                }
            }
            split_ok &= power_coeff_split(&v, n, alpha).unwrap().1 == rem;
        }
    }
    Outcome::new(
        hom <= 1e-10 && taylor <= 1e-12 && split_ok && naive_gap <= 1e-13 && split_sum <= 1e-12,
        format!(
            "homomorphism {hom:.2e}; product vs naive {naive_gap:.2e}; taylor vs direct {taylor:.2e}; split sum {split_sum:.2e}, remainder invariant {split_ok}"
        ),
    )
}

fn order_of(errors: &[f64]) -> f64 {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min)
}

fn criterion_3() -> Outcome {
    // u' = (a + λ)u + cos t has the closed form u_p + (u₀ − u_p(0))e^{bt}.
    let (a, lambda, horizon) = (-1.2, 0.4, 1.5);
    let b = a + lambda;
    let up = |t: f64| (-b * t.cos() + t.sin()) / (b * b + 1.0);
    let exact = up(horizon) + (1.0 - up(0.0)) * (b * horizon).exp();
    let duhamel: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| {
            let dt = horizon / n as f64;
            let op = SpatialOperator::scalar(a);
            let s = Arc::new(op.exp(dt).unwrap());
            let grid = GridFunction::constant(vec![lambda]);
            let mut u = vec![1.0];
            for k in 0..n {
                let t = k as f64 * dt;
                let prop = Propagator::with_semigroup(s.clone(), &grid, t, dt).unwrap();
                u = duhamel_step(&prop, &u, &[t.cos()], &[(t + dt).cos()], dt);
            }
            (u[0] - exact).abs()
        })
        .collect();

    let horizon = 2.0;
    let reference = reference_ode(|t, u| t.sin() * u + (2.0 * t).cos(), 0.5, horizon);
    let op = SpatialOperator::scaled(SpatialOperator::scalar(1.0), TimeProfile::Sin { freq: 1.0 });
    let nonauto: Vec<f64> = [50usize, 100, 200]
        .iter()
        .map(|&n| {
            let dt = horizon / n as f64;
            let mut u = vec![0.5];
            for k in 0..n {
                let t = k as f64 * dt;
                u = nonautonomous_step(&op, t, &u, &[(2.0 * t).cos()], &[(2.0 * (t + dt)).cos()], dt).unwrap();
            }
            (u[0] - reference).abs()
        })
        .collect();

    let lap = SpatialOperator::laplacian_1d(48, 2.0).unwrap();
    let law_lhs = matrix_exponential(lap.matrix(), 1e-4).unwrap() * matrix_exponential(lap.matrix(), 2.5e-4).unwrap();
    let law_rhs = matrix_exponential(lap.matrix(), 3.5e-4).unwrap();
    let law = (&law_lhs - &law_rhs).amax() / law_rhs.amax();

    let big = SpatialOperator::laplacian_1d(64, 1.0).unwrap();
    let h = 1.0 / 65.0;
    // Dirichlet second difference built independently of the library.
    let mut a_mat = DMatrix::zeros(64, 64);
    for i in 0..64 {
        a_mat[(i, i)] = -2.0 / (h * h);
        if i > 0 {
            a_mat[(i, i - 1)] = 1.0 / (h * h);
            a_mat[(i - 1, i)] = 1.0 / (h * h);
        }
    }
    let same_matrix = (&a_mat - big.matrix()).amax() <= 1e-9 * a_mat.amax();
    let eig = SymmetricEigen::new(a_mat);
    let mut eig_err: f64 = 0.0;
    for s in [2e-5, 3e-4, 2e-3] {
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| (s * l).exp()));
        let reference = &eig.eigenvectors * d * eig.eigenvectors.transpose();
        let got = big.exp(s).unwrap();
        eig_err = eig_err.max((&got - &reference).amax() / reference.amax());
    }
    let (od, on) = (order_of(&duhamel), order_of(&nonauto));
    Outcome::new(
        od >= 1.9 && on >= 1.9 && law <= 1e-9 && eig_err <= 1e-10 && same_matrix,
        format!("duhamel order {od:.3}; nonautonomous order {on:.3}; semigroup law {law:.2e}; expm vs eigen {eig_err:.2e}"),
    )
}

fn riccati_errors(steps: usize) -> [f64; 3] {
    let text = format!(
        r#"{{"operator": {{"preset": "scalar"}}, "poly": {{"coeffs": [0, 0, 1]}},
            "trunc": {{"K": 1, "P": 2}}, "time": {{"T": 0.5, "steps": {steps}}},
            "initial": {{"mode_table": [{{"alpha": "0", "shape": {{"constant": 1}}}},
                                        {{"alpha": "1^1", "shape": {{"constant": 1}}}}]}}}}"#
    );
    let r = solve(&Problem::from_json_str(&text).unwrap());
    let last = r.trajectory.last();
    let t: f64 = 0.5;
    let d = 1.0 - t;
    let exact = [1.0 / d, 1.0 / (d * d), (t / d) / (d * d)];
    [0, 1, 2].map(|i| (last.coeff(i)[0] - exact[i]).abs() / exact[i])
}

fn criterion_4() -> Outcome {
    let base = riccati_errors(1000);
    let fine = riccati_errors(2000);
    let tol = [1e-8, 1e-6, 1e-5];
    let accurate = (0..3).all(|i| base[i] <= tol[i]);
    let ratios = [0, 1, 2].map(|i| base[i] / fine[i]);
    let converging = ratios.iter().all(|&r| r >= 3.5);
    // Errors within a few hundred ulps cannot shrink further.
    let roundoff = [0, 1].iter().all(|&i| base[i] <= 1e-12);
    Outcome {
        passed: accurate && converging,
        attainable: accurate && ratios[2] >= 3.5 && roundoff,
        detail: format!(
            "rel errors [{:.2e}, {:.2e}, {:.2e}]; halving ratios [{:.2}, {:.2}, {:.2}]",
            base[0], base[1], base[2], ratios[0], ratios[1], ratios[2]
        ),
    }
}

fn criterion_5() -> Outcome {
    let modes: Vec<String> = std::iter::once(r#"{"alpha": "0", "shape": {"constant": 1.0}}"#.to_string())
        .chain((1..=8).map(|k| format!(r#"{{"alpha": "{k}^1", "shape": {{"constant": {}}}}}"#, 1.0 / k as f64)))
        .collect();
    let text = format!(
        r#"{{"operator": {{"preset": "scaled:sin", "params": {{"a": 1.0}}}},
            "poly": {{"coeffs": []}}, "trunc": {{"K": 8, "P": 1}}, "time": {{"T": 2.0, "steps": 2000}},
            "initial": {{"mode_table": [{}]}}, "forcing": {{"preset": "white-noise"}}}}"#,
        modes.join(",")
    );
    let r = solve(&Problem::from_json_str(&text).unwrap());
    let last = r.trajectory.last();
    let horizon: f64 = 2.0;
    let mut worst: f64 = 0.0;
    worst = worst.max((last.coeff(0)[0] - (1.0 - horizon.cos()).exp()).abs());
    for k in 1..=8u32 {
        let i = r.basis().position(&MultiIndex::unit(k)).unwrap();
        let reference = reference_ode(|t, u| t.sin() * u + xi(k, t), 1.0 / k as f64, horizon);
        worst = worst.max((last.coeff(i)[0] - reference).abs());
    }
    Outcome::new(worst <= 1e-6, format!("max abs error over 9 coefficients {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let p = load("heat.json");
    let r = solve(&p);
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let rate = (sup(r.trajectory.last().coeff(0)) / sup(r.trajectory.fields[0].coeff(0))).ln() / 0.1;
    let h = 1.0 / 65.0;
    let eigen = -4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let rel = ((rate - eigen) / eigen).abs();
    Outcome::new(rel <= 1e-4, format!("rate {rate:.8} vs {eigen:.8}, rel {rel:.2e}"))
}

fn sup_over_time(r: &SolveReport, i: usize) -> f64 {
    r.trajectory
        .fields
        .iter()
        .flat_map(|f| f.coeff(i).iter().map(|x| x.abs()))
        .fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    let p = load("fujita_small.json");
    let r = solve(&p);
    let cert = certificate(&p, &r);
    let Some(c) = cert.constants.clone() else {
        return Outcome::new(false, "no K < 1 normalization".into());
    };
    let growth = c.m_n * (c.w_n * p.horizon).exp();
    let c_oracle = 2.0 * growth * (growth * c.k.sqrt() + 1.0);
    let mut ok = c.k < 1.0 && ((c.c - c_oracle) / c_oracle).abs() < 1e-12;
    let mut checked = 0;
    for (i, alpha) in r.basis().indices().iter().enumerate().skip(1) {
        let l = sup_over_time(&r, i);
        let weight = |q: f64| -> f64 {
            alpha
                .entries()
                .iter()
                .map(|&(k, e)| (2.0 * k as f64).powf(q * e as f64))
                .product()
        };
        let envelope = if alpha.order() == 1 {
            growth * c.k * weight(c.p)
        } else {
            c.k.sqrt() / (8.0 * growth) * (4.0 * c.c).powi(alpha.order() as i32) * weight(c.p + 2.0)
        };
        ok &= l <= envelope && cert.entries[i].status == BoundStatus::Holds;
        checked += 1;
    }
    Outcome::new(ok, format!("K = {:.4}, p = {}, c = {:.3}, {checked} coefficients within the envelope", c.k, c.p, c.c))
}

fn criterion_8() -> Outcome {
    let base = load("fujita_small.json");
    let q = certificate(&base, &solve(&base)).constants.unwrap().q;
    let runs: Vec<SolveReport> = (0..=4)
        .map(|p| solve(&base.clone().with_truncation(Truncation::new(3, p).unwrap())))
        .collect();
    let mut norms = Vec::new();
    for p in 1..=4usize {
        let (hi, lo) = (&runs[p], &runs[p - 1]);
        let mut value = 0.0;
        for (i, alpha) in hi.basis().indices().iter().enumerate() {
            let j = lo.basis().position(alpha);
            let mut sup: f64 = 0.0;
            for (n, f) in hi.trajectory.fields.iter().enumerate() {
                for (x, v) in f.coeff(i).iter().enumerate() {
                    let w = j.map(|j| lo.trajectory.fields[n].coeff(j)[x]).unwrap_or(0.0);
                    sup = sup.max((v - w).abs());
                }
            }
            let weight: f64 = alpha.entries().iter().map(|&(k, e)| (2.0 * k as f64).powf(-q * e as f64)).product();
            value += sup * sup * weight;
        }
        norms.push(value);
    }
    let ok = norms[1] > norms[2] && norms[2] > norms[3];
    Outcome::new(ok, format!("P=2..4 difference norms {:.3e}, {:.3e}, {:.3e} (q = {q})", norms[1], norms[2], norms[3]))
}

fn criterion_9() -> Outcome {
    let r = solve(&load("fujita_small.json"));
    let field = r.trajectory.last();
    let mc = mc_moments(field, 20000, 42).unwrap();
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for x in 0..field.m() {
        let reference_var: f64 = field
            .basis()
            .indices()
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, a)| {
                let fact: f64 = a.entries().iter().map(|&(_, e)| factorial_u128(e) as f64).product();
                fact * field.coeff(i)[x].powi(2)
            })
            .sum();
        let zm = (mc.mean[x] - field.coeff(0)[x]).abs() / mc.se_mean[x];
        let zv = (mc.variance[x] - reference_var).abs() / mc.se_variance[x];
        worst = worst.max(zm).max(zv);
        ok &= zm <= 4.0 && zv <= 4.0;
    }
    let dir = tempfile::tempdir().unwrap();
    let spec = spec_path("fujita_small.json");
    let mut outputs = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_wickflow"))
            .args(["sample", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(&out)
            .args(["--seed", "42", "--draws", "20000"])
            .output()
            .unwrap()
            .status;
        ok &= status.success();
        outputs.push(std::fs::read(out.join("monte_carlo.csv")).unwrap());
    }
    let identical = outputs[0] == outputs[1];
    Outcome::new(ok && identical, format!("max z {worst:.3}; repeat reports identical {identical}"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let run = |spec: &str, name: &str| -> Vec<(String, Vec<u8>)> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_wickflow"))
            .args(["run", "--full-trajectory", "--spec"])
            .arg(spec_path(spec))
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap()
            .status;
        assert!(status.success());
        let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(&out)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let identical = run("fujita_small.json", "a") == run("fujita_small.json", "b");

    let mut zero = true;
    for spec in ["heat.json", "fhn.json"] {
        let mut p = load(spec);
        p.initial.retain(|(a, _)| a.is_zero());
        let r = solve(&p);
        zero &= r.trajectory.fields.iter().all(|f| f.data()[f.m()..].iter().all(|&x| x == 0.0));
    }
    let heat = run("heat.json", "heat");
    let traj = &heat.iter().find(|(n, _)| n == "trajectory.csv").unwrap().1;
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(traj.as_slice());
    for rec in reader.records() {
        let rec = rec.unwrap();
        if &rec[0] != "0" {
            zero &= rec[4].parse::<f64>().unwrap() == 0.0;
        }
    }
    Outcome::new(identical && zero, format!("repeat runs byte-identical {identical}; higher coefficients exactly zero {zero}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut problems = Vec::new();
    for (n, criterion) in criteria.iter().enumerate() {
        let id = n as u32 + 1;
        let o = criterion();
        println!("criterion {id:>2}: {} | {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        let builtin = run_check(id);
        if builtin.passed != o.passed {
            problems.push(format!("criterion {id}: built-in check disagrees ({})", builtin.detail));
        }
        let expected = !UNATTAINABLE.contains(&id);
        if expected && !o.passed {
            problems.push(format!("criterion {id} failed: {}", o.detail));
        }
        if !expected && !o.attainable {
            problems.push(format!("criterion {id}: attainable parts failed: {}", o.detail));
        }
    }
    assert!(problems.is_empty(), "{problems:#?}");
}
