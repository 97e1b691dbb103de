//! Strict sweep configuration: TOML text to a validated [`SweepSpec`].
//!
//! Top-level keys describe the sweep, the `[fixed]` table holds the circuit
//! parameters that do not vary. Couplings are given either as a phase point
//! (`lambda`, `q`, `delta`) or explicitly (`lambda_x`, `lambda_zz`, `q_x`,
//! `q_zz`), never both. Unknown keys anywhere are errors.

use std::path::PathBuf;

use repcode::dense::MAX_DENSE_L;
use repcode::model::{default_delta, validate_params, Boundary, InitialState, PhasePoint, SimParams};
use repcode::mps::TruncationPolicy;
use repcode::observables::Observable;
use serde::Serialize;
use toml::{Table, Value};

use crate::error::ConfigError;

type CResult<T> = std::result::Result<T, ConfigError>;

/// Largest chain the `auto` engine simulates densely.
pub const AUTO_DENSE_MAX_L: usize = 8;

pub const DEFAULT_N_TRAJECTORIES: usize = 100;
pub const DEFAULT_OUTPUT_DIR: &str = "results";

pub const TOP_KEYS: [&str; 11] = [
    "axis",
    "values",
    "sizes",
    "fixed",
    "engine",
    "n_trajectories",
    "observable_list",
    "output_dir",
    "workers",
    "chi_max",
    "svd_cutoff",
];

pub const FIXED_KEYS: [&str; 14] = [
    "lambda",
    "q",
    "delta",
    "lambda_x",
    "lambda_zz",
    "q_x",
    "q_zz",
    "theta_x",
    "theta_zz",
    "L",
    "T",
    "boundary",
    "initial_state",
    "master_seed",
];

const PHASE_KEYS: [&str; 3] = ["lambda", "q", "delta"];
const EXPLICIT_KEYS: [&str; 4] = ["lambda_x", "lambda_zz", "q_x", "q_zz"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Axis {
    #[serde(rename = "lambda")]
    Lambda,
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "theta")]
    Theta,
    #[serde(rename = "L")]
    L,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Lambda => "lambda",
            Self::Q => "q",
            Self::Theta => "theta",
            Self::L => "L",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::Lambda, Self::Q, Self::Theta, Self::L].into_iter().find(|a| a.name() == s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineChoice {
    Dense,
    Mps,
    #[default]
    Auto,
}

impl EngineChoice {
    pub fn resolve(self, l: usize) -> Engine {
        match self {
            Self::Dense => Engine::Dense,
            Self::Mps => Engine::Mps,
            Self::Auto if l <= AUTO_DENSE_MAX_L => Engine::Dense,
            Self::Auto => Engine::Mps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Dense,
    Mps,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::Mps => "mps",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::Dense, Self::Mps].into_iter().find(|e| e.name() == s)
    }
}

/// Fixed couplings; `None` marks the coordinate supplied by the sweep axis.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Couplings {
    PhasePoint { lambda: Option<f64>, q: Option<f64>, delta: f64 },
    Explicit { lambda_x: f64, lambda_zz: f64, q_x: Option<f64>, q_zz: Option<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Chain lengths; every value is run at every size.
    pub sizes: Vec<usize>,
    pub couplings: Couplings,
    pub theta_x: Option<f64>,
    pub theta_zz: Option<f64>,
    /// `None` means `T = 4L`.
    #[serde(rename = "T")]
    pub t: Option<usize>,
    pub boundary: Boundary,
    pub initial_state: InitialState,
    pub master_seed: u64,
    pub engine: EngineChoice,
    pub n_trajectories: usize,
    pub observable_list: Vec<Observable>,
    pub output_dir: PathBuf,
    pub workers: usize,
    pub chi_max: usize,
    pub svd_cutoff: f64,
}

/// One fully resolved point of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub index: usize,
    pub value: f64,
    pub phase: Option<PhasePoint>,
    pub params: SimParams,
    pub engine: Engine,
}

impl SweepSpec {
    pub fn policy(&self) -> TruncationPolicy {
        TruncationPolicy { chi_max: self.chi_max, svd_cutoff: self.svd_cutoff, ..Default::default() }
    }

    /// Grid points ordered by size, then by axis value.
    pub fn grid(&self) -> Vec<GridPoint> {
        let pairs: Vec<(usize, f64)> = match self.axis {
            Axis::L => self.values.iter().map(|&v| (v as usize, v)).collect(),
            _ => self.sizes.iter().flat_map(|&l| self.values.iter().map(move |&v| (l, v))).collect(),
        };
        pairs.into_iter().enumerate().map(|(index, (l, v))| self.point(index, l, v)).collect()
    }

    fn point(&self, index: usize, l: usize, v: f64) -> GridPoint {
        let pick = |fixed: Option<f64>| fixed.unwrap_or(v);
        let (phase, (lambda_x, lambda_zz, q_x, q_zz)) = match self.couplings {
            Couplings::PhasePoint { lambda, q, delta } => {
                let pp = PhasePoint { lambda: pick(lambda), q: pick(q), delta };
                (Some(pp), pp.expand())
            }
            Couplings::Explicit { lambda_x, lambda_zz, q_x, q_zz } => (None, (lambda_x, lambda_zz, pick(q_x), pick(q_zz))),
        };
        let params = SimParams {
            lambda_x,
            lambda_zz,
            q_x,
            q_zz,
            theta_x: pick(self.theta_x),
            theta_zz: pick(self.theta_zz),
            l,
            t: self.t.unwrap_or(4 * l),
            boundary: self.boundary,
            initial_state: self.initial_state,
            master_seed: self.master_seed,
        };
        GridPoint { index, value: v, phase, params, engine: self.engine.resolve(l) }
    }
}

pub fn parse_config(text: &str) -> CResult<SweepSpec> {
    spec_from_table(&parse_table(text)?)
}

pub fn parse_table(text: &str) -> CResult<Table> {
    text.parse::<Table>().map_err(|e| ConfigError::Syntax(e.message().to_string()))
}

/// Applies `key=value` overrides. Sweep keys go to the top level, everything
/// else to `[fixed]`. Values are read as TOML literals, falling back to a
/// bare string.
pub fn apply_overrides(table: &mut Table, overrides: &[(String, String)]) -> CResult<()> {
    for (key, raw) in overrides {
        let value = literal(raw);
        if TOP_KEYS.contains(&key.as_str()) {
            table.insert(key.clone(), value);
        } else if FIXED_KEYS.contains(&key.as_str()) {
            let fixed = table.entry("fixed").or_insert_with(|| Value::Table(Table::new()));
            let Value::Table(fixed) = fixed else {
                return Err(type_error("fixed", "a table"));
            };
            fixed.insert(key.clone(), value);
        } else {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
    }
    Ok(())
}

fn literal(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

/// Turns a single-point table (no `axis`) into a one-value sweep over `L`.
pub fn single_point(table: &mut Table) -> CResult<()> {
    if table.contains_key("axis") || table.contains_key("values") {
        return Ok(());
    }
    let l = match table.get_mut("fixed") {
        Some(Value::Table(fixed)) => fixed.remove("L"),
        Some(_) => return Err(type_error("fixed", "a table")),
        None => None,
    };
    let l = l.ok_or_else(|| ConfigError::MissingField("L".into()))?;
    table.insert("axis".into(), Value::String("L".into()));
    table.insert("values".into(), Value::Array(vec![l]));
    Ok(())
}

fn type_error(key: &str, expected: &'static str) -> ConfigError {
    ConfigError::TypeError { key: key.to_string(), expected }
}

fn check_keys(t: &Table, allowed: &[&str]) -> CResult<()> {
    match t.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ConfigError::UnknownKey(k.clone())),
        None => Ok(()),
    }
}

fn as_number(key: &str, v: &Value) -> CResult<f64> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(key, "a number")),
    }
}

fn as_count(key: &str, v: &Value) -> CResult<u64> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(type_error(key, "a non-negative integer")),
    }
}

fn number(t: &Table, key: &str) -> CResult<Option<f64>> {
    t.get(key).map(|v| as_number(key, v)).transpose()
}

fn count(t: &Table, key: &str) -> CResult<Option<u64>> {
    t.get(key).map(|v| as_count(key, v)).transpose()
}

fn string<'a>(t: &'a Table, key: &str) -> CResult<Option<&'a str>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(type_error(key, "a string")),
    }
}

fn array<'a>(t: &'a Table, key: &str) -> CResult<Option<&'a Vec<Value>>> {
    match t.get(key) {
        None => Ok(None),
        Some(Value::Array(a)) => Ok(Some(a)),
        Some(_) => Err(type_error(key, "an array")),
    }
}

fn required<T>(v: Option<T>, key: &str) -> CResult<T> {
    v.ok_or_else(|| ConfigError::MissingField(key.to_string()))
}

/// A fixed coordinate that the axis may supply instead.
fn swept_or_fixed(t: &Table, key: &str, swept: bool) -> CResult<Option<f64>> {
    let v = number(t, key)?;
    match (swept, v) {
        (true, Some(_)) => Err(ConfigError::Conflict(format!("`{key}` is set by the sweep axis"))),
        (true, None) => Ok(None),
        (false, v) => required(v, key).map(Some),
    }
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1])
}

pub fn spec_from_table(top: &Table) -> CResult<SweepSpec> {
    check_keys(top, &TOP_KEYS)?;
    let empty = Table::new();
    let fixed = match top.get("fixed") {
        None => &empty,
        Some(Value::Table(t)) => t,
        Some(_) => return Err(type_error("fixed", "a table")),
    };
    check_keys(fixed, &FIXED_KEYS)?;

    let axis_name = required(string(top, "axis")?, "axis")?;
    let axis = Axis::from_name(axis_name).ok_or_else(|| type_error("axis", "one of lambda, q, theta, L"))?;
    let values: Vec<f64> =
        required(array(top, "values")?, "values")?.iter().map(|v| as_number("values", v)).collect::<CResult<_>>()?;
    if values.is_empty() {
        return Err(ConfigError::Invalid("`values` is empty".into()));
    }
    if values.iter().any(|v| !v.is_finite()) || !strictly_increasing(&values) {
        return Err(ConfigError::Invalid("`values` must be finite and strictly increasing".into()));
    }

    let names = required(array(top, "observable_list")?, "observable_list")?;
    let mut observable_list = Vec::with_capacity(names.len());
    for v in names {
        let Value::String(name) = v else {
            return Err(type_error("observable_list", "an array of observable names"));
        };
        let o = Observable::from_name(name).ok_or_else(|| ConfigError::Invalid(format!("unknown observable `{name}`")))?;
        if observable_list.contains(&o) {
            return Err(ConfigError::Invalid(format!("observable `{name}` listed twice")));
        }
        observable_list.push(o);
    }
    if observable_list.is_empty() {
        return Err(ConfigError::Invalid("`observable_list` is empty".into()));
    }

    let engine = match string(top, "engine")? {
        None => EngineChoice::Auto,
        Some("dense") => EngineChoice::Dense,
        Some("mps") => EngineChoice::Mps,
        Some("auto") => EngineChoice::Auto,
        Some(_) => return Err(type_error("engine", "one of dense, mps, auto")),
    };
    let n_trajectories = count(top, "n_trajectories")?.map_or(DEFAULT_N_TRAJECTORIES, |n| n as usize);
    if n_trajectories == 0 {
        return Err(ConfigError::Invalid("`n_trajectories` must be positive".into()));
    }
    let output_dir = PathBuf::from(string(top, "output_dir")?.unwrap_or(DEFAULT_OUTPUT_DIR));
    let workers = match count(top, "workers")? {
        Some(0) => return Err(ConfigError::Invalid("`workers` must be positive".into())),
        Some(w) => w as usize,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let defaults = TruncationPolicy::default();
    let chi_max = count(top, "chi_max")?.map_or(defaults.chi_max, |c| c as usize);
    let svd_cutoff = number(top, "svd_cutoff")?.unwrap_or(defaults.svd_cutoff);
    TruncationPolicy::new(chi_max, svd_cutoff).map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let has_phase = PHASE_KEYS.iter().any(|k| fixed.contains_key(*k));
    let has_explicit = EXPLICIT_KEYS.iter().any(|k| fixed.contains_key(*k));
    let couplings = match (has_phase, has_explicit) {
        (true, true) => {
            return Err(ConfigError::Conflict("phase-point keys and explicit couplings cannot be mixed".into()));
        }
        (false, true) => {
            if axis == Axis::Lambda {
                return Err(ConfigError::Conflict("the lambda axis needs phase-point couplings".into()));
            }
            Couplings::Explicit {
                lambda_x: required(number(fixed, "lambda_x")?, "lambda_x")?,
                lambda_zz: required(number(fixed, "lambda_zz")?, "lambda_zz")?,
                q_x: swept_or_fixed(fixed, "q_x", axis == Axis::Q)?,
                q_zz: swept_or_fixed(fixed, "q_zz", axis == Axis::Q)?,
            }
        }
        _ => Couplings::PhasePoint {
            lambda: swept_or_fixed(fixed, "lambda", axis == Axis::Lambda)?,
            q: swept_or_fixed(fixed, "q", axis == Axis::Q)?,
            delta: number(fixed, "delta")?.unwrap_or_else(default_delta),
        },
    };
    let theta = |key| -> CResult<Option<f64>> {
        match (axis == Axis::Theta, number(fixed, key)?) {
            (true, Some(_)) => Err(ConfigError::Conflict(format!("`{key}` is set by the sweep axis"))),
            (true, None) => Ok(None),
            (false, v) => Ok(Some(v.unwrap_or(0.0))),
        }
    };
    let (theta_x, theta_zz) = (theta("theta_x")?, theta("theta_zz")?);

    let fixed_l = count(fixed, "L")?;
    let sizes_list = array(top, "sizes")?;
    let sizes: Vec<usize> = if axis == Axis::L {
        if fixed_l.is_some() || sizes_list.is_some() {
            return Err(ConfigError::Conflict("`L` and `sizes` are set by the sweep axis".into()));
        }
        if values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(ConfigError::Invalid("L values must be positive integers".into()));
        }
        values.iter().map(|&v| v as usize).collect()
    } else {
        match (fixed_l, sizes_list) {
            (Some(_), Some(_)) => return Err(ConfigError::Conflict("give either `L` or `sizes`".into())),
            (Some(l), None) => vec![l as usize],
            (None, Some(list)) => {
                let s: Vec<usize> = list.iter().map(|v| as_count("sizes", v).map(|c| c as usize)).collect::<CResult<_>>()?;
                if s.is_empty() || !s.windows(2).all(|w| w[0] < w[1]) {
                    return Err(ConfigError::Invalid("`sizes` must be nonempty and strictly increasing".into()));
                }
                s
            }
            (None, None) => return Err(ConfigError::MissingField("L".into())),
        }
    };

    let t = count(fixed, "T")?.map(|t| t as usize);
    let boundary = match string(fixed, "boundary")? {
        None | Some("open") => Boundary::Open,
        Some("periodic") => Boundary::Periodic,
        Some(_) => return Err(type_error("boundary", "open or periodic")),
    };
    let initial_state = match string(fixed, "initial_state")? {
        None => InitialState::default(),
        Some(s) => initial_state_from_name(s).ok_or_else(|| {
            type_error("initial_state", "one of ghz_plus, all_up, maximally_mixed, ghz_with_reference, all_up_with_reference")
        })?,
    };
    let master_seed = count(fixed, "master_seed")?.unwrap_or(0);

    let spec = SweepSpec {
        axis,
        values,
        sizes,
        couplings,
        theta_x,
        theta_zz,
        t,
        boundary,
        initial_state,
        master_seed,
        engine,
        n_trajectories,
        observable_list,
        output_dir,
        workers,
        chi_max,
        svd_cutoff,
    };
    check_grid(&spec)?;
    Ok(spec)
}

pub fn initial_state_from_name(s: &str) -> Option<InitialState> {
    use InitialState::*;
    [GhzPlus, AllUp, MaximallyMixed, GhzWithReference, AllUpWithReference].into_iter().find(|k| initial_state_name(*k) == s)
}

pub fn initial_state_name(k: InitialState) -> &'static str {
    match k {
        InitialState::GhzPlus => "ghz_plus",
        InitialState::AllUp => "all_up",
        InitialState::MaximallyMixed => "maximally_mixed",
        InitialState::GhzWithReference => "ghz_with_reference",
        InitialState::AllUpWithReference => "all_up_with_reference",
    }
}

pub fn boundary_name(b: Boundary) -> &'static str {
    match b {
        Boundary::Open => "open",
        Boundary::Periodic => "periodic",
    }
}

fn check_grid(spec: &SweepSpec) -> CResult<()> {
    let needs_reference = [Observable::SR, Observable::IC, Observable::ICRenyi2];
    if !spec.initial_state.has_reference() {
        if let Some(o) = spec.observable_list.iter().find(|o| needs_reference.contains(o)) {
            return Err(ConfigError::Invalid(format!("`{}` needs an initial state with a reference qubit", o.name())));
        }
    }
    for g in spec.grid() {
        let label = format!("{} = {}, L = {}", spec.axis.name(), g.value, g.params.l);
        validate_params(g.params.clone()).map_err(|e| ConfigError::Invalid(format!("{label}: {e}")))?;
        if g.engine == Engine::Dense && g.params.l > MAX_DENSE_L {
            return Err(ConfigError::Invalid(format!("{label}: dense engine supports L <= {MAX_DENSE_L}")));
        }
        if g.engine == Engine::Mps && spec.observable_list.contains(&Observable::IC) {
            return Err(ConfigError::Invalid(format!("{label}: `i_c` needs the dense engine")));
        }
    }
    Ok(())
}
