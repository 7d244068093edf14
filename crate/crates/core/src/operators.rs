//! Spatial operators, matrix exponentials and exponential time stepping.
//!
//! The linear part of every propagator equation is `B(t) = a(t)·A + λ(t)`,
//! where `A` is a fixed matrix, `a` an optional scalar time profile and `λ`
//! a grid function acting by pointwise multiplication. One step of the
//! evolution system is realized as `D₂·exp(∫a·A)·D₁` with
//! `D_i = diag(exp ∫λ)` over the two half steps. When `λ` is spatially
//! constant the factors commute and the step is exact.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Scalar time profile `a(t)` multiplying an operator.
#[derive(Clone, Debug, PartialEq)]
pub enum TimeProfile {
    Constant { value: f64 },
    Sin { freq: f64 },
    Cos { freq: f64 },
    Linear { slope: f64, intercept: f64 },
    Exp { rate: f64 },
}

impl TimeProfile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant { value } => value,
            TimeProfile::Sin { freq } => (freq * t).sin(),
            TimeProfile::Cos { freq } => (freq * t).cos(),
            TimeProfile::Linear { slope, intercept } => slope * t + intercept,
            TimeProfile::Exp { rate } => (rate * t).exp(),
        }
    }

    /// `∫_s^t a(r) dr` in closed form.
    pub fn integral(&self, s: f64, t: f64) -> f64 {
        match *self {
            TimeProfile::Constant { value } => value * (t - s),
            TimeProfile::Sin { freq } if freq != 0.0 => ((freq * s).cos() - (freq * t).cos()) / freq,
            TimeProfile::Sin { .. } => 0.0,
            TimeProfile::Cos { freq } if freq != 0.0 => ((freq * t).sin() - (freq * s).sin()) / freq,
            TimeProfile::Cos { .. } => t - s,
            TimeProfile::Linear { slope, intercept } => {
                0.5 * slope * (t * t - s * s) + intercept * (t - s)
            }
            TimeProfile::Exp { rate } if rate != 0.0 => ((rate * t).exp() - (rate * s).exp()) / rate,
            TimeProfile::Exp { .. } => t - s,
        }
    }

    /// Parses `"sin"`, `"cos"`, `"linear"`, `"exp"` or `"constant"` with
    /// numeric parameters looked up by name.
    pub fn parse(name: &str, param: impl Fn(&str) -> Option<f64>) -> Result<Self> {
        let get = |k: &str, default: f64| param(k).unwrap_or(default);
        Ok(match name {
            "sin" => TimeProfile::Sin { freq: get("freq", 1.0) },
            "cos" => TimeProfile::Cos { freq: get("freq", 1.0) },
            "linear" => TimeProfile::Linear {
                slope: get("slope", 1.0),
                intercept: get("intercept", 0.0),
            },
            "exp" => TimeProfile::Exp { rate: get("rate", 1.0) },
            "constant" => TimeProfile::Constant { value: get("value", 1.0) },
            other => return Err(Error::Parse(format!("unknown time profile {other:?}"))),
        })
    }

    fn sup_abs(&self, horizon: f64) -> f64 {
        (0..=1000)
            .map(|i| self.value(horizon * i as f64 / 1000.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug)]
enum Dependence {
    Autonomous,
    Scaled(TimeProfile),
    /// General family given by samples, linearly interpolated.
    Sampled(Vec<(f64, DMatrix<f64>)>),
}

/// Discretized generator with its stability constants `‖exp(sA)‖ ≤ m·e^{ws}`.
#[derive(Clone, Debug)]
pub struct SpatialOperator {
    matrix: DMatrix<f64>,
    m: f64,
    w: f64,
    dependence: Dependence,
}

impl SpatialOperator {
    /// Second-difference Dirichlet Laplacian on `M` interior nodes of `(0, L)`.
    pub fn laplacian_1d(size: usize, length: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::Input("laplacian_1d needs M >= 2".into()));
        }
        if length.is_nan() || length <= 0.0 {
            return Err(Error::Input("laplacian_1d needs L > 0".into()));
        }
        let h = length / (size as f64 + 1.0);
        let inv = 1.0 / (h * h);
        let mut a = DMatrix::zeros(size, size);
        for i in 0..size {
            a[(i, i)] = -2.0 * inv;
            if i > 0 {
                a[(i, i - 1)] = inv;
            }
            if i + 1 < size {
                a[(i, i + 1)] = inv;
            }
        }
        let w = -4.0 * inv * (std::f64::consts::PI * h / (2.0 * length)).sin().powi(2);
        Ok(Self {
            matrix: a,
            m: 1.0,
            w,
            dependence: Dependence::Autonomous,
        })
    }

    /// `A = a` on a single degree of freedom.
    pub fn scalar(a: f64) -> Self {
        Self {
            matrix: DMatrix::from_element(1, 1, a),
            m: 1.0,
            w: a,
            dependence: Dependence::Autonomous,
        }
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        if d.is_empty() {
            return Err(Error::Input("diagonal operator needs at least one entry".into()));
        }
        Ok(Self {
            matrix: DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            m: 1.0,
            w: d.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            dependence: Dependence::Autonomous,
        })
    }

    /// Arbitrary square matrix; `m = 1` and `w` is its logarithmic 2-norm.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::Input("operator matrix must be square and nonempty".into()));
        }
        let w = log_norm(&matrix);
        Ok(Self {
            matrix,
            m: 1.0,
            w,
            dependence: Dependence::Autonomous,
        })
    }

    /// `a(t)·A` for a fixed base operator.
    pub fn scaled(base: SpatialOperator, profile: TimeProfile) -> Self {
        Self {
            dependence: Dependence::Scaled(profile),
            ..base
        }
    }

    /// General time-dependent family `A(t)`, linear between samples.
    pub fn sampled(samples: Vec<(f64, DMatrix<f64>)>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Input("sampled operator needs samples".into()))?;
        let n = first.1.nrows();
        if samples.iter().any(|(_, a)| a.nrows() != n || a.ncols() != n) {
            return Err(Error::Dimension("sampled operator matrices differ in size".into()));
        }
        if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Input("sample times must increase".into()));
        }
        let w = samples.iter().map(|(_, a)| log_norm(a)).fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            matrix: first.1.clone(),
            m: 1.0,
            w,
            dependence: Dependence::Sampled(samples),
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// The fixed matrix `A` (without any time profile).
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn profile(&self) -> Option<&TimeProfile> {
        match &self.dependence {
            Dependence::Scaled(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_autonomous(&self) -> bool {
        matches!(self.dependence, Dependence::Autonomous)
    }

    fn is_commuting_family(&self) -> bool {
        !matches!(self.dependence, Dependence::Sampled(_))
    }

    /// Matrix of the generator at time `t`.
    pub fn at(&self, t: f64) -> DMatrix<f64> {
        match &self.dependence {
            Dependence::Autonomous => self.matrix.clone(),
            Dependence::Scaled(p) => &self.matrix * p.value(t),
            Dependence::Sampled(samples) => {
                let j = samples.partition_point(|(s, _)| *s <= t);
                if j == 0 {
                    return samples[0].1.clone();
                }
                if j == samples.len() {
                    return samples[j - 1].1.clone();
                }
                let (t0, a0) = &samples[j - 1];
                let (t1, a1) = &samples[j];
                let x = (t - t0) / (t1 - t0);
                a0 * (1.0 - x) + a1 * x
            }
        }
    }

    /// `y = A(t)·x`.
    pub fn apply(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let scale = match &self.dependence {
            Dependence::Autonomous => 1.0,
            Dependence::Scaled(p) => p.value(t),
            Dependence::Sampled(_) => {
                let a = self.at(t);
                return (&a * DVector::from_column_slice(x)).as_slice().to_vec();
            }
        };
        let y = &self.matrix * DVector::from_column_slice(x);
        y.iter().map(|v| v * scale).collect()
    }

    /// Stability constants `(m, w)` valid on `[0, horizon]`.
    ///
    /// For a scaled operator the rate uses the log-norm of `±A` weighted by
    /// the sup of the profile on the horizon.
    pub fn stability(&self, horizon: f64) -> (f64, f64) {
        match &self.dependence {
            Dependence::Scaled(p) => {
                let sup = p.sup_abs(horizon);
                let up = log_norm(&self.matrix).max(0.0);
                let down = log_norm(&(-&self.matrix)).max(0.0);
                (self.m, sup * up.max(down))
            }
            _ => (self.m, self.w),
        }
    }

    /// Upper bound on the spectral radius of `A(t)` over `[0, horizon]`.
    pub fn spectral_bound(&self, horizon: f64) -> f64 {
        match &self.dependence {
            Dependence::Autonomous => inf_norm(&self.matrix),
            Dependence::Scaled(p) => inf_norm(&self.matrix) * p.sup_abs(horizon),
            Dependence::Sampled(s) => s.iter().map(|(_, a)| inf_norm(a)).fold(0.0, f64::max),
        }
    }

    /// `exp(sA)` for the fixed matrix.
    pub fn exp(&self, s: f64) -> Result<DMatrix<f64>> {
        matrix_exponential(&self.matrix, s)
    }

    /// `exp(∫_s^t a(r) dr · A)`, the exact evolution of a commuting family.
    pub fn evolution(&self, s: f64, t: f64) -> Result<DMatrix<f64>> {
        match &self.dependence {
            Dependence::Autonomous => self.exp(t - s),
            Dependence::Scaled(p) => self.exp(p.integral(s, t)),
            Dependence::Sampled(_) => Err(Error::Unsupported(
                "exact evolution of a non-commuting operator family".into(),
            )),
        }
    }
}

/// Largest eigenvalue of the symmetric part, `μ₂(A)`.
pub fn log_norm(a: &DMatrix<f64>) -> f64 {
    let sym = (a + a.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

const PADE_ORDER: usize = 6;

/// `exp(sA)` by scaling and squaring with the diagonal Padé(6,6) approximant.
pub fn matrix_exponential(a: &DMatrix<f64>, s: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension("matrix exponential of a non-square matrix".into()));
    }
    let n = a.nrows();
    let x = a * s;
    let norm = inf_norm(&x);
    if !norm.is_finite() {
        return Err(Error::Numeric("non-finite entries in matrix exponential".into()));
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = x * 2f64.powi(-squarings);

    let q = PADE_ORDER as f64;
    let mut c = 1.0;
    let mut num = DMatrix::identity(n, n);
    let mut den = DMatrix::identity(n, n);
    let mut power = DMatrix::identity(n, n);
    for k in 1..=PADE_ORDER {
        let kf = k as f64;
        c *= (q - kf + 1.0) / (kf * (2.0 * q - kf + 1.0));
        power = &power * &x;
        num += &power * c;
        if k % 2 == 0 {
            den += &power * c;
        } else {
            den -= &power * c;
        }
    }
    let mut e = den
        .lu()
        .solve(&num)
        .ok_or_else(|| Error::Numeric("singular Padé denominator".into()))?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("matrix exponential overflowed".into()));
    }
    Ok(e)
}

/// `exp(∫_s^t λ(r) dr)` for a scalar `λ`, by composite Simpson.
pub fn evolution_factor<F: Fn(f64) -> f64>(lambda: F, s: f64, t: f64, panels: usize) -> f64 {
    simpson(lambda, s, t, panels).exp()
}

/// Vector samples on a uniform grid `t_i = t0 + i·dt`, evaluated between
/// nodes by 4-point Lagrange (cubic) interpolation.
#[derive(Clone, Debug)]
pub struct GridFunction {
    t0: f64,
    dt: f64,
    values: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn new(t0: f64, dt: f64, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Input("grid function needs at least one node".into()));
        }
        let m = values[0].len();
        if values.iter().any(|v| v.len() != m) {
            return Err(Error::Dimension("grid function nodes differ in length".into()));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn constant(v: Vec<f64>) -> Self {
        Self {
            t0: 0.0,
            dt: 1.0,
            values: vec![v],
        }
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    pub fn value(&self, t: f64) -> Vec<f64> {
        let n = self.values.len();
        if n == 1 {
            return self.values[0].clone();
        }
        let x = (t - self.t0) / self.dt;
        let cell = (x.floor().max(0.0) as usize).min(n - 2);
        if x == cell as f64 {
            return self.values[cell].clone();
        }
        let start = cell.saturating_sub(1).min(n.saturating_sub(4));
        let end = (start + 4).min(n);
        let nodes: Vec<usize> = (start..end).collect();
        let mut out = vec![0.0; self.dim()];
        for &j in &nodes {
            let mut w = 1.0;
            for &k in &nodes {
                if k != j {
                    w *= (x - k as f64) / (j as f64 - k as f64);
                }
            }
            for (o, v) in out.iter_mut().zip(&self.values[j]) {
                *o += w * v;
            }
        }
        out
    }

    /// `∫_s^t` componentwise, composite Simpson with `panels` panels.
    pub fn integral(&self, s: f64, t: f64, panels: usize) -> Vec<f64> {
        let n = panels.max(2) + panels % 2;
        let h = (t - s) / n as f64;
        let mut acc = vec![0.0; self.dim()];
        for i in 0..=n {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for (a, v) in acc.iter_mut().zip(self.value(s + i as f64 * h)) {
                *a += w * v;
            }
        }
        acc.iter_mut().for_each(|a| *a *= h / 3.0);
        acc
    }
}

/// One step `S(t+Δ, t)` of the evolution system for `a(t)A + λ(t)`.
#[derive(Clone, Debug)]
pub struct Propagator {
    semigroup: Arc<DMatrix<f64>>,
    first_log: Vec<f64>,
    second_log: Vec<f64>,
}

impl Propagator {
    pub fn identity(m: usize) -> Self {
        Self {
            semigroup: Arc::new(DMatrix::identity(m, m)),
            first_log: vec![0.0; m],
            second_log: vec![0.0; m],
        }
    }

    /// Combines a precomputed semigroup step with the two half-step
    /// integrals of `λ`.
    pub fn new(semigroup: Arc<DMatrix<f64>>, first_log: Vec<f64>, second_log: Vec<f64>) -> Result<Self> {
        let m = semigroup.nrows();
        if first_log.len() != m || second_log.len() != m {
            return Err(Error::Dimension("propagator factors differ in size".into()));
        }
        Ok(Self {
            semigroup,
            first_log,
            second_log,
        })
    }

    /// Builds the step over `[t, t+Δ]` with `λ` integrated from a grid function.
    pub fn for_step(op: &SpatialOperator, lambda: &GridFunction, t: f64, dt: f64) -> Result<Self> {
        let semigroup = Arc::new(op.evolution(t, t + dt)?);
        Self::with_semigroup(semigroup, lambda, t, dt)
    }

    pub fn with_semigroup(semigroup: Arc<DMatrix<f64>>, lambda: &GridFunction, t: f64, dt: f64) -> Result<Self> {
        let mid = t + 0.5 * dt;
        let first = lambda.integral(t, mid, 2);
        let second = lambda.integral(mid, t + dt, 2);
        Self::new(semigroup, first, second)
    }

    pub fn dim(&self) -> usize {
        self.first_log.len()
    }

    /// Total scalar log factor `∫λ` over the step.
    pub fn log_factor(&self) -> Vec<f64> {
        self.first_log
            .iter()
            .zip(&self.second_log)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d1 = DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.first_log).map(|(v, l)| v * l.exp()),
        );
        let y = &*self.semigroup * d1;
        y.iter()
            .zip(&self.second_log)
            .map(|(v, l)| v * l.exp())
            .collect()
    }
}

/// Exponential trapezoid: `u⁺ = S(u + Δ/2·g) + Δ/2·g⁺`.
pub fn duhamel_step(prop: &Propagator, u: &[f64], g: &[f64], g_next: &[f64], dt: f64) -> Vec<f64> {
    let half = 0.5 * dt;
    let pre: Vec<f64> = u.iter().zip(g).map(|(u, g)| u + half * g).collect();
    prop.apply(&pre)
        .into_iter()
        .zip(g_next)
        .map(|(s, g)| s + half * g)
        .collect()
}

/// Exponential trapezoid for `u' = A(t)u + f` where `A(t)` is a commuting
/// family (`a(t)·A` or autonomous).
pub fn nonautonomous_step(
    op: &SpatialOperator,
    t: f64,
    u: &[f64],
    f: &[f64],
    f_next: &[f64],
    dt: f64,
) -> Result<Vec<f64>> {
    if !op.is_commuting_family() {
        return Err(Error::Unsupported(
            "nonautonomous stepping needs a scalar profile times a fixed matrix".into(),
        ));
    }
    if u.len() != op.dim() || f.len() != op.dim() || f_next.len() != op.dim() {
        return Err(Error::Dimension("state and forcing must match the operator size".into()));
    }
    let prop = Propagator::new(
        Arc::new(op.evolution(t, t + dt)?),
        vec![0.0; op.dim()],
        vec![0.0; op.dim()],
    )?;
    Ok(duhamel_step(&prop, u, f, f_next, dt))
}

/// One sample of the measured semigroup envelope.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeSample {
    pub s: f64,
    pub norm: f64,
    pub bound: f64,
}

/// `‖exp(sA)‖₂` against `m·e^{ws}` at `samples` points of `(0, horizon]`.
pub fn measured_envelope(op: &SpatialOperator, horizon: f64, samples: usize) -> Result<Vec<EnvelopeSample>> {
    let (m, w) = op.stability(horizon);
    (1..=samples)
        .map(|i| {
            let s = horizon * i as f64 / samples as f64;
            let e = op.evolution(0.0, s)?;
            let norm = e.singular_values().max();
            Ok(EnvelopeSample {
                s,
                norm,
                bound: m * (w * s).exp(),
            })
        })
        .collect()
}
