//! Problem files: JSON description of operator, nonlinearity, truncation,
//! time grid, initial chaos field and forcing.
//!
//! ```json
//! {
//!   "operator": {"preset": "laplacian1d", "M": 32, "L": 1.0},
//!   "poly":     {"coeffs": [0, 0, 1]},
//!   "trunc":    {"K": 3, "P": 4},
//!   "time":     {"T": 0.5, "steps": 500},
//!   "initial":  {"mode_table": [
//!       {"alpha": "0",   "shape": {"sine": {"mode": 1, "amplitude": 0.1}}},
//!       {"alpha": "1^1", "shape": {"constant": 0.05}}
//!   ]},
//!   "forcing":  {"preset": "zero"}
//! }
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::hermite::{brownian_hermite, hermite_function};
use crate::multiindex::{IndexSet, MultiIndex, Truncation};
use crate::operators::{SpatialOperator, TimeProfile};
use crate::wick::{ChaosField, WickPolynomial};

type Params = BTreeMap<String, Value>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    operator: RawOperator,
    poly: RawPoly,
    trunc: RawTrunc,
    time: RawTime,
    #[serde(default)]
    initial: RawInitial,
    #[serde(default)]
    forcing: RawForcing,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOperator {
    preset: String,
    #[serde(rename = "M")]
    m: Option<usize>,
    #[serde(rename = "L")]
    l: Option<f64>,
    #[serde(default)]
    params: Params,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPoly {
    coeffs: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrunc {
    #[serde(rename = "K")]
    k: u32,
    #[serde(rename = "P")]
    p: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    #[serde(rename = "T")]
    t: f64,
    steps: usize,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    #[serde(default)]
    mode_table: Vec<RawMode>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    alpha: String,
    shape: Shape,
    #[serde(default)]
    profile: Option<RawProfile>,
}

// `flatten` cannot be combined with `deny_unknown_fields`; unknown keys are
// rejected in `build_profile`.
#[derive(Debug, Deserialize)]
struct RawProfile {
    name: String,
    #[serde(flatten)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForcing {
    preset: String,
    #[serde(default)]
    params: Params,
}

impl Default for RawForcing {
    fn default() -> Self {
        Self {
            preset: "zero".into(),
            params: Params::new(),
        }
    }
}

/// Spatial profile of a coefficient.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Constant(f64),
    Sine { mode: u32, amplitude: f64 },
    Values(Vec<f64>),
}

impl Shape {
    /// Samples on the interior nodes `x_i = i·L/(M+1)`, `i = 1..M`.
    pub fn sample(&self, m: usize, length: f64) -> Result<Vec<f64>> {
        match self {
            Shape::Constant(c) => Ok(vec![*c; m]),
            Shape::Sine { mode, amplitude } => {
                let h = length / (m as f64 + 1.0);
                Ok((1..=m)
                    .map(|i| {
                        amplitude * (*mode as f64 * std::f64::consts::PI * i as f64 * h / length).sin()
                    })
                    .collect())
            }
            Shape::Values(v) if v.len() == m => Ok(v.clone()),
            Shape::Values(v) => Err(Error::Parse(format!(
                "shape has {} values, operator has M = {m}",
                v.len()
            ))),
        }
    }
}

/// Time-dependent forcing `f(t) = Σ f_α(t) H_α`.
#[derive(Clone, Debug, PartialEq)]
pub enum Forcing {
    Zero,
    /// `f_{ε_k}(t) = ξ_k(t)·φ` for `k ≤ K`.
    WhiteNoise { shape: Vec<f64> },
    /// `f_{ε_k}(t) = (∫_0^t ξ_k)·φ` for `k ≤ K`.
    Brownian { shape: Vec<f64> },
    /// Tabulated modes `f_α(t) = a(t)·φ_α`.
    Modes(Vec<ForcingMode>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ForcingMode {
    pub alpha: MultiIndex,
    pub shape: Vec<f64>,
    pub profile: TimeProfile,
}

impl Forcing {
    /// Indices with a possibly nonzero coefficient under truncation `t`.
    pub fn support(&self, t: Truncation) -> Vec<MultiIndex> {
        match self {
            Forcing::Zero => vec![],
            Forcing::WhiteNoise { .. } | Forcing::Brownian { .. } => {
                (1..=t.dimension()).map(MultiIndex::unit).collect()
            }
            Forcing::Modes(modes) => modes
                .iter()
                .filter(|m| t.contains(&m.alpha))
                .map(|m| m.alpha.clone())
                .collect(),
        }
    }

    /// `f_α(t)`, or `None` when the coefficient vanishes identically.
    pub fn eval(&self, alpha: &MultiIndex, t: f64) -> Option<Vec<f64>> {
        let unit_position = || match alpha.entries() {
            [(k, 1)] => Some(*k),
            _ => None,
        };
        match self {
            Forcing::Zero => None,
            Forcing::WhiteNoise { shape } => {
                let k = unit_position()?;
                let s = hermite_function(k, t);
                Some(shape.iter().map(|x| x * s).collect())
            }
            Forcing::Brownian { shape } => {
                let k = unit_position()?;
                let s = brownian_hermite(k, t);
                Some(shape.iter().map(|x| x * s).collect())
            }
            Forcing::Modes(modes) => {
                let mut out: Option<Vec<f64>> = None;
                for m in modes.iter().filter(|m| &m.alpha == alpha) {
                    let a = m.profile.value(t);
                    let acc = out.get_or_insert_with(|| vec![0.0; m.shape.len()]);
                    acc.iter_mut().zip(&m.shape).for_each(|(o, x)| *o += a * x);
                }
                out
            }
        }
    }
}

/// Validated problem description.
#[derive(Clone, Debug)]
pub struct Problem {
    pub operator: SpatialOperator,
    pub poly: WickPolynomial,
    pub trunc: Truncation,
    pub horizon: f64,
    pub steps: usize,
    pub length: f64,
    pub initial: Vec<(MultiIndex, Vec<f64>)>,
    pub forcing: Forcing,
}

fn param_f64(params: &Params, key: &str) -> Result<Option<f64>> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("parameter {key:?} must be a number"))),
    }
}

fn param_vec(params: &Params, key: &str) -> Result<Option<Vec<f64>>> {
    match params.get(key) {
        None => Ok(None),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| {
                v.as_f64()
                    .ok_or_else(|| Error::Parse(format!("parameter {key:?} must hold numbers")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => Err(Error::Parse(format!("parameter {key:?} must be an array"))),
    }
}

fn build_operator(raw: &RawOperator) -> Result<(SpatialOperator, f64)> {
    let length = raw.l.unwrap_or(1.0);
    if length.is_nan() || length <= 0.0 {
        return Err(Error::Parse("operator L must be positive".into()));
    }
    let (preset, profile) = match raw.preset.split_once(':') {
        Some((base, profile)) => (base, Some(profile)),
        None => (raw.preset.as_str(), None),
    };
    let base_name = if preset == "scaled" {
        raw.params
            .get("base")
            .and_then(Value::as_str)
            .unwrap_or("scalar")
    } else {
        preset
    };
    let base = match base_name {
        "laplacian1d" => {
            let m = raw
                .m
                .ok_or_else(|| Error::Parse("laplacian1d needs M".into()))?;
            SpatialOperator::laplacian_1d(m, length).map_err(|e| Error::Parse(e.to_string()))?
        }
        "scalar" => {
            if raw.m.is_some_and(|m| m != 1) {
                return Err(Error::Parse("scalar operator has M = 1".into()));
            }
            SpatialOperator::scalar(param_f64(&raw.params, "a")?.unwrap_or(0.0))
        }
        "diagonal" => {
            let d = param_vec(&raw.params, "values")?
                .ok_or_else(|| Error::Parse("diagonal operator needs params.values".into()))?;
            if raw.m.is_some_and(|m| m != d.len()) {
                return Err(Error::Parse("diagonal values disagree with M".into()));
            }
            SpatialOperator::diagonal(&d).map_err(|e| Error::Parse(e.to_string()))?
        }
        other => return Err(Error::Parse(format!("unknown operator preset {other:?}"))),
    };
    let op = match (preset, profile) {
        ("scaled", Some(name)) => {
            let mut numeric = BTreeMap::new();
            for key in ["freq", "slope", "intercept", "rate", "value"] {
                if let Some(v) = param_f64(&raw.params, key)? {
                    numeric.insert(key, v);
                }
            }
            let profile = TimeProfile::parse(name, |k| numeric.get(k).copied())?;
            SpatialOperator::scaled(base, profile)
        }
        ("scaled", None) => return Err(Error::Parse("scaled preset needs a profile, e.g. \"scaled:sin\"".into())),
        (_, Some(_)) => return Err(Error::Parse(format!("preset {:?} takes no profile", raw.preset))),
        _ => base,
    };
    Ok((op, length))
}

fn build_profile(raw: &Option<RawProfile>) -> Result<TimeProfile> {
    match raw {
        None => Ok(TimeProfile::Constant { value: 1.0 }),
        Some(p) => {
            let allowed: &[&str] = match p.name.as_str() {
                "sin" | "cos" => &["freq"],
                "linear" => &["slope", "intercept"],
                "exp" => &["rate"],
                _ => &["value"],
            };
            if let Some(k) = p.params.keys().find(|k| !allowed.contains(&k.as_str())) {
                return Err(Error::Parse(format!("profile {:?} has no parameter {k:?}", p.name)));
            }
            TimeProfile::parse(&p.name, |k| p.params.get(k).copied())
        }
    }
}

fn parse_alpha(s: &str) -> Result<MultiIndex> {
    s.parse().map_err(|e: Error| Error::Parse(e.to_string()))
}

impl Problem {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawProblem =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    fn from_raw(raw: RawProblem) -> Result<Self> {
        let (operator, length) = build_operator(&raw.operator)?;
        let m = operator.dim();
        let poly = WickPolynomial::new(&raw.poly.coeffs).map_err(|e| Error::Parse(e.to_string()))?;
        let trunc = Truncation::new(raw.trunc.k, raw.trunc.p).map_err(|e| Error::Parse(e.to_string()))?;
        if !raw.time.t.is_finite() || raw.time.t <= 0.0 {
            return Err(Error::Parse("time horizon T must be positive".into()));
        }
        if raw.time.steps == 0 {
            return Err(Error::Parse("time steps must be at least 1".into()));
        }

        let mut initial: Vec<(MultiIndex, Vec<f64>)> = Vec::new();
        for mode in &raw.initial.mode_table {
            if mode.profile.is_some() {
                return Err(Error::Parse("initial modes take no time profile".into()));
            }
            let alpha = parse_alpha(&mode.alpha)?;
            if !trunc.contains(&alpha) {
                return Err(Error::Parse(format!("initial mode {alpha} lies outside the truncation")));
            }
            if initial.iter().any(|(a, _)| a == &alpha) {
                return Err(Error::Parse(format!("initial mode {alpha} listed twice")));
            }
            initial.push((alpha, mode.shape.sample(m, length)?));
        }

        let shape_param = |params: &Params| -> Result<Vec<f64>> {
            match params.get("shape") {
                None => Ok(vec![1.0; m]),
                Some(v) => {
                    let shape: Shape = serde_json::from_value(v.clone())
                        .map_err(|e| Error::Parse(format!("forcing shape: {e}")))?;
                    shape.sample(m, length)
                }
            }
        };
        let forcing = match raw.forcing.preset.as_str() {
            "zero" => Forcing::Zero,
            "white-noise" => Forcing::WhiteNoise {
                shape: shape_param(&raw.forcing.params)?,
            },
            "brownian" => Forcing::Brownian {
                shape: shape_param(&raw.forcing.params)?,
            },
            "modes" => {
                let table = raw
                    .forcing
                    .params
                    .get("mode_table")
                    .cloned()
                    .ok_or_else(|| Error::Parse("modes forcing needs params.mode_table".into()))?;
                let table: Vec<RawMode> = serde_json::from_value(table)
                    .map_err(|e| Error::Parse(format!("forcing mode_table: {e}")))?;
                let mut modes = Vec::new();
                for mode in &table {
                    let alpha = parse_alpha(&mode.alpha)?;
                    if !trunc.contains(&alpha) {
                        return Err(Error::Parse(format!("forcing mode {alpha} lies outside the truncation")));
                    }
                    modes.push(ForcingMode {
                        alpha,
                        shape: mode.shape.sample(m, length)?,
                        profile: build_profile(&mode.profile)?,
                    });
                }
                Forcing::Modes(modes)
            }
            other => return Err(Error::Parse(format!("unknown forcing preset {other:?}"))),
        };

        Ok(Self {
            operator,
            poly,
            trunc,
            horizon: raw.time.t,
            steps: raw.time.steps,
            length,
            initial,
            forcing,
        })
    }

    pub fn m(&self) -> usize {
        self.operator.dim()
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn with_steps(mut self, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Input("time steps must be at least 1".into()));
        }
        self.steps = steps;
        Ok(self)
    }

    /// Replaces the truncation; initial modes outside it are dropped.
    pub fn with_truncation(mut self, trunc: Truncation) -> Self {
        self.initial.retain(|(a, _)| trunc.contains(a));
        if let Forcing::Modes(modes) = &mut self.forcing {
            modes.retain(|m| trunc.contains(&m.alpha));
        }
        self.trunc = trunc;
        self
    }

    pub fn basis(&self) -> Arc<IndexSet> {
        Arc::new(IndexSet::new(self.trunc))
    }

    pub fn initial_field(&self, basis: Arc<IndexSet>) -> ChaosField {
        let mut field = ChaosField::zeros(basis, self.m());
        for (alpha, v) in &self.initial {
            if field.basis().position(alpha).is_some() {
                field.set(alpha, v).expect("validated initial mode");
            }
        }
        field
    }

    /// `true` when no coefficient above `𝟎` is ever excited.
    pub fn is_deterministic(&self) -> bool {
        let initial = self
            .initial
            .iter()
            .all(|(a, v)| a.is_zero() || v.iter().all(|x| *x == 0.0));
        initial && self.forcing.support(self.trunc).iter().all(|a| a.is_zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FUJITA: &str = r#"{
        "operator": {"preset": "laplacian1d", "M": 8, "L": 1.0},
        "poly": {"coeffs": [0, 0, 1]},
        "trunc": {"K": 2, "P": 3},
        "time": {"T": 0.5, "steps": 50},
        "initial": {"mode_table": [
            {"alpha": "0", "shape": {"sine": {"mode": 1, "amplitude": 0.1}}},
            {"alpha": "2^1", "shape": {"constant": 0.5}}
        ]},
        "forcing": {"preset": "zero"}
    }"#;

    #[test]
    fn parses_a_complete_file() {
        let p = Problem::from_json_str(FUJITA).unwrap();
        assert_eq!(p.m(), 8);
        assert_eq!(p.poly.degree(), 2);
        assert_eq!(p.trunc, Truncation::new(2, 3).unwrap());
        assert_eq!(p.initial.len(), 2);
        assert_eq!(p.initial[1].1, vec![0.5; 8]);
        assert!(!p.is_deterministic());
        let f = p.initial_field(p.basis());
        assert_eq!(f.get(&MultiIndex::unit(2)).unwrap(), &[0.5; 8]);
    }

    #[test]
    fn truncation_override_drops_modes() {
        let p = Problem::from_json_str(FUJITA)
            .unwrap()
            .with_truncation(Truncation::new(1, 3).unwrap());
        assert_eq!(p.initial.len(), 1);
        assert!(p.is_deterministic());
    }

    #[test]
    fn rejects_bad_files() {
        for bad in [
            "{",
            r#"{"operator": {"preset": "nope"}, "poly": {"coeffs": [1]}, "trunc": {"K":1,"P":1}, "time": {"T":1,"steps":1}}"#,
            r#"{"operator": {"preset": "scalar"}, "poly": {"coeffs": [1]}, "trunc": {"K":1,"P":1}, "time": {"T":-1,"steps":1}}"#,
            r#"{"operator": {"preset": "scalar"}, "poly": {"coeffs": [1]}, "trunc": {"K":1,"P":1}, "time": {"T":1,"steps":1},
                "initial": {"mode_table": [{"alpha": "2^1", "shape": {"constant": 1}}]}}"#,
            r#"{"operator": {"preset": "scalar"}, "poly": {"coeffs": [1]}, "trunc": {"K":1,"P":1}, "time": {"T":1,"steps":1}, "extra": 1}"#,
            r#"{"operator": {"preset": "scaled"}, "poly": {"coeffs": [1]}, "trunc": {"K":1,"P":1}, "time": {"T":1,"steps":1}}"#,
        ] {
            assert!(matches!(Problem::from_json_str(bad), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn forcing_presets() {
        let text = r#"{"operator": {"preset": "scaled:sin", "params": {"base": "scalar", "a": 1.0}},
            "poly": {"coeffs": []}, "trunc": {"K": 3, "P": 1}, "time": {"T": 1, "steps": 10},
            "forcing": {"preset": "white-noise"}}"#;
        let p = Problem::from_json_str(text).unwrap();
        assert!(p.operator.profile().is_some());
        let v = p.forcing.eval(&MultiIndex::unit(2), 0.3).unwrap();
        assert_eq!(v, vec![hermite_function(2, 0.3)]);
        assert!(p.forcing.eval(&MultiIndex::zero(), 0.3).is_none());
        assert_eq!(p.forcing.support(p.trunc).len(), 3);

        let text = r#"{"operator": {"preset": "diagonal", "params": {"values": [-1, -2]}},
            "poly": {"coeffs": [0, 1]}, "trunc": {"K": 1, "P": 1}, "time": {"T": 1, "steps": 10},
            "forcing": {"preset": "modes", "params": {"mode_table": [
                {"alpha": "0", "shape": {"values": [1, 2]}, "profile": {"name": "cos", "freq": 2.0}}]}}}"#;
        let p = Problem::from_json_str(text).unwrap();
        let v = p.forcing.eval(&MultiIndex::zero(), 0.5).unwrap();
        assert!((v[1] - 2.0 * 1f64.cos()).abs() < 1e-15);
        assert!(p.is_deterministic());
    }
}
