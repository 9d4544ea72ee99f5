//! TOML run configuration. See the README for the grammar.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, GridFunction, GridSpec, SetRegion};
use crate::heat::{ContourSpec, EnvelopeOptions, Method};
use crate::resolvent::NeumannOptions;
use crate::schechter::{PotentialFamily, PotentialSpec, SchechterParams};
use crate::symbol::EllipticSymbol;
use crate::toperator::{Branch, ConditionSet};

pub const TASKS: [&str; 6] = ["classify", "tnorm", "resolvent-check", "heat", "dg", "conditions"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridBlock,
    #[serde(default)]
    pub symbol: SymbolBlock,
    #[serde(default)]
    pub potential: PotentialBlock,
    pub task: TaskBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub n: usize,
    #[serde(rename = "R")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolTerm {
    pub alpha: Vec<u32>,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolBlock {
    /// `"polyharmonic"` for `|xi|^{2m}`; ignored when `terms` is given.
    #[serde(default = "default_preset")]
    pub preset: String,
    #[serde(default = "one")]
    pub m: usize,
    #[serde(default)]
    pub terms: Vec<SymbolTerm>,
}

fn default_preset() -> String {
    "polyharmonic".into()
}

fn one() -> usize {
    1
}

impl Default for SymbolBlock {
    fn default() -> Self {
        Self {
            preset: default_preset(),
            m: 1,
            terms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialBlock {
    #[serde(default = "zero_family")]
    pub family: String,
    #[serde(default)]
    pub a: f64,
    #[serde(default = "plus")]
    pub sign: f64,
    #[serde(default = "unit")]
    pub c: f64,
    /// CSV of `(x.., re, im)` rows, for `family = "tabulated"`.
    #[serde(default)]
    pub table: Option<PathBuf>,
}

fn zero_family() -> String {
    "zero".into()
}

fn plus() -> f64 {
    1.0
}

fn unit() -> f64 {
    1.0
}

impl Default for PotentialBlock {
    fn default() -> Self {
        Self {
            family: zero_family(),
            a: 0.0,
            sign: 1.0,
            c: 1.0,
            table: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json]
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

/// Exactly one task table under `[task]`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    pub classify: Option<ClassifyTask>,
    pub tnorm: Option<TnormTask>,
    #[serde(rename = "resolvent-check")]
    pub resolvent_check: Option<ResolventTask>,
    pub heat: Option<HeatTask>,
    pub dg: Option<DgTask>,
    pub conditions: Option<ConditionsTask>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        crate::fit::logspace(self.lo, self.hi, self.count)
    }

    fn validate(&self, path: &str) -> Result<()> {
        if !(self.lo > 0.0 && self.hi > self.lo && self.hi.is_finite()) || self.count < 2 {
            return Err(Error::config(path, "need 0 < lo < hi and count >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyTask {
    pub alpha: f64,
    pub r: f64,
    #[serde(default = "inf", with = "extended")]
    pub t: f64,
    #[serde(rename = "S", default)]
    pub s_index: f64,
    pub deltas: Sweep,
}

fn inf() -> f64 {
    f64::INFINITY
}

/// Branch block shared by `tnorm` and `conditions`; unused keys are ignored by branches that
/// do not need them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchBlock {
    pub branch: Branch,
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    pub s: f64,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default, with = "extended_opt")]
    pub t: Option<f64>,
    #[serde(default = "unit")]
    pub constant_product: f64,
}

fn two() -> f64 {
    2.0
}

impl BranchBlock {
    pub fn condition_set(&self, m: usize, n: usize, path: &str) -> Result<ConditionSet> {
        let need = |x: Option<f64>, key: &str| {
            x.ok_or_else(|| Error::config(format!("{path}.{key}"), format!("required for branch {}", self.branch)))
        };
        let cs = match self.branch {
            Branch::A2 => ConditionSet::a2(m, n, self.q, self.p, self.s, need(self.alpha, "alpha")?),
            Branch::A3 => ConditionSet::a3(m, n, self.q, self.p, self.s, need(self.t, "t")?),
            Branch::A4 => ConditionSet::a4(m, n, self.q, self.s, need(self.alpha, "alpha")?, need(self.t, "t")?),
            Branch::A5 => ConditionSet::a5(m, n, self.p, self.s, need(self.alpha, "alpha")?),
        }
        .map_err(|e| Error::config(path, e.to_string()))?;
        cs.with_constant_product(self.constant_product)
            .map_err(|e| Error::config(format!("{path}.constant_product"), e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TnormTask {
    #[serde(flatten)]
    pub branch: BranchBlock,
    pub deltas: Sweep,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "exponent_slack")]
    pub exponent_slack: f64,
}

fn default_trials() -> usize {
    16
}

fn exponent_slack() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsTask {
    #[serde(flatten)]
    pub branch: BranchBlock,
    pub lambdas: Sweep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventTask {
    /// Random spectral points drawn in `[-zmax, zmax] + i[-zmax, zmax]` off `[0, inf)`.
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default = "default_zmax")]
    pub zmax: f64,
    /// Fixed `[re, im]` points for the Neumann and conjugation checks.
    #[serde(default = "default_z")]
    pub z: Vec<[f64; 2]>,
    /// Integer wavenumbers `k`, giving `eta = i k pi / R` along the first axis.
    #[serde(default = "default_shifts")]
    pub shifts: Vec<i64>,
    #[serde(default)]
    pub neumann: NeumannOptions,
}

fn default_points() -> usize {
    100
}

fn default_zmax() -> f64 {
    10.0
}

fn default_z() -> Vec<[f64; 2]> {
    vec![[-4.0, 0.0]]
}

fn default_shifts() -> Vec<i64> {
    vec![1, -1, 2, 3, -4]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatTask {
    pub times: Vec<f64>,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub y: Option<Vec<f64>>,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default)]
    pub envelope: EnvelopeOptions,
    #[serde(default)]
    pub holder: Option<HolderBlock>,
}

fn default_method() -> Method {
    Method::Spectral
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HolderBlock {
    pub t: f64,
    pub steps: Vec<usize>,
    #[serde(default = "gamma_min")]
    pub gamma_min: f64,
}

fn gamma_min() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgTask {
    #[serde(rename = "E")]
    pub e: SetRegion,
    #[serde(rename = "F")]
    pub f: SetRegion,
    pub times: Sweep,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default)]
    pub local: bool,
    #[serde(default)]
    pub contour: ContourSpec,
    #[serde(default = "dg_r2")]
    pub min_r2: f64,
}

fn dg_r2() -> f64 {
    0.95
}

/// `"inf"` is accepted for infinite exponents.
mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    pub(super) enum Raw {
        Num(f64),
        Text(String),
    }

    pub(super) fn parse<'de, D: Deserializer<'de>>(raw: Raw) -> Result<f64, D::Error> {
        match raw {
            Raw::Num(x) => Ok(x),
            Raw::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Inf") => Ok(f64::INFINITY),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a number or \"inf\", got {s:?}"
            ))),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        parse::<D>(Raw::deserialize(d)?)
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*x)
        }
    }

    pub(super) use Raw as RawValue;
}

mod extended_opt {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<super::extended::RawValue>::deserialize(d)? {
            Some(raw) => super::extended::parse::<D>(raw).map(Some),
            None => Ok(None),
        }
    }

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::extended::serialize(v, s),
            None => s.serialize_none(),
        }
    }
}

/// Everything a task needs, validated.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub task: &'static str,
    pub grid: GridSpec,
    pub symbol: EllipticSymbol,
    pub potential: PotentialSpec,
    pub hash: String,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(path, inner.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn task_name(&self) -> Result<&'static str> {
        let t = &self.task;
        let present: Vec<&'static str> = [
            t.classify.is_some(),
            t.tnorm.is_some(),
            t.resolvent_check.is_some(),
            t.heat.is_some(),
            t.dg.is_some(),
            t.conditions.is_some(),
        ]
        .iter()
        .zip(TASKS)
        .filter(|(p, _)| **p)
        .map(|(_, name)| name)
        .collect();
        match present.as_slice() {
            [one] => Ok(one),
            [] => Err(Error::config("task", "no task given")),
            [first, rest @ ..] => Err(Error::config(
                format!("task.{}", rest[0]),
                format!("duplicate task: `{}` is already set by task.{first}", rest[0]),
            )),
        }
    }

    fn build_symbol(&self) -> Result<EllipticSymbol> {
        let s = &self.symbol;
        let n = self.grid.n;
        if !s.terms.is_empty() {
            let coeffs = s.terms.iter().map(|t| (t.alpha.clone(), t.c)).collect();
            return EllipticSymbol::new(s.m, n, coeffs).map_err(|e| Error::config("symbol.terms", e.to_string()));
        }
        match s.preset.as_str() {
            "polyharmonic" => {
                EllipticSymbol::polyharmonic(s.m, n).map_err(|e| Error::config("symbol.m", e.to_string()))
            }
            other => Err(Error::config("symbol.preset", format!("unknown preset {other:?}"))),
        }
    }

    fn build_potential(&self, grid: &GridSpec, base: &Path) -> Result<PotentialSpec> {
        let p = &self.potential;
        let wrap = |e: Error| Error::config("potential", e.to_string());
        match p.family.as_str() {
            "zero" => Ok(PotentialSpec::zero()),
            "constant" => PotentialSpec::constant(p.sign * p.c).map_err(wrap),
            "power" => PotentialSpec::power(p.a, p.sign, p.c).map_err(wrap),
            "shifted-power" => PotentialSpec::shifted_power(p.a, p.sign, p.c).map_err(wrap),
            "tabulated" => {
                let rel = p
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::config("potential.table", "required for tabulated potentials"))?;
                let path = base.join(rel);
                let file = std::fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
                let gf =
                    GridFunction::read_csv(*grid, file).map_err(|e| Error::config("potential.table", e.to_string()))?;
                PotentialSpec::tabulated(gf)
                    .map(|v| v.scaled_by(p.sign * p.c))
                    .map_err(wrap)
            }
            other => Err(Error::config("potential.family", format!("unknown family {other:?}"))),
        }
    }

    /// Validates every block against the module invariants without allocating grid data.
    /// Relative table paths resolve against `base`.
    pub fn prepare(self, base: &Path) -> Result<Prepared> {
        let task = self.task_name()?;
        let g = self.grid;
        let grid = make_grid(g.n, g.half_width, g.points).map_err(|e| Error::config("grid", e.to_string()))?;
        let symbol = self.build_symbol()?;
        let m = symbol.m();
        let n = g.n;
        let t = &self.task;
        if let Some(c) = &t.classify {
            SchechterParams::new(c.alpha, c.r, c.t, c.s_index)
                .map_err(|e| Error::config("task.classify", e.to_string()))?;
            c.deltas.validate("task.classify.deltas")?;
            if c.deltas.count < 8 {
                return Err(Error::config("task.classify.deltas.count", "need at least 8 scales"));
            }
        }
        if let Some(tn) = &t.tnorm {
            tn.branch.condition_set(m, n, "task.tnorm")?;
            tn.deltas.validate("task.tnorm.deltas")?;
            if tn.trials < 16 {
                return Err(Error::config("task.tnorm.trials", "need at least 16 trials"));
            }
        }
        if let Some(c) = &t.conditions {
            c.branch.condition_set(m, n, "task.conditions")?;
            c.lambdas.validate("task.conditions.lambdas")?;
            if c.lambdas.count < 8 {
                return Err(Error::config(
                    "task.conditions.lambdas.count",
                    "need at least 8 samples",
                ));
            }
        }
        if let Some(r) = &t.resolvent_check {
            if r.zmax <= 0.0 {
                return Err(Error::config("task.resolvent-check.zmax", "must be positive"));
            }
            for (i, z) in r.z.iter().enumerate() {
                if z[1] == 0.0 && z[0] >= 0.0 {
                    return Err(Error::config(
                        format!("task.resolvent-check.z[{i}]"),
                        "z lies on [0, inf)",
                    ));
                }
            }
            if !(r.neumann.tol > 0.0) || r.neumann.max_terms == 0 {
                return Err(Error::config(
                    "task.resolvent-check.neumann",
                    "tol > 0 and max_terms >= 1",
                ));
            }
        }
        if let Some(h) = &t.heat {
            if h.times.len() < 3 || h.times.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                return Err(Error::config("task.heat.times", "need at least 3 positive times"));
            }
            if let Some(y) = &h.y {
                grid.lattice_index(y)
                    .map_err(|e| Error::config("task.heat.y", e.to_string()))?;
            }
            h.contour
                .validate(n, m)
                .map_err(|e| Error::config("task.heat.contour", e.to_string()))?;
            if let Some(hb) = &h.holder {
                if !(hb.t > 0.0) || hb.steps.is_empty() {
                    return Err(Error::config("task.heat.holder", "need t > 0 and at least one step"));
                }
            }
        }
        if let Some(d) = &t.dg {
            d.e.validate(&grid)
                .map_err(|e| Error::config("task.dg.E", e.to_string()))?;
            d.f.validate(&grid)
                .map_err(|e| Error::config("task.dg.F", e.to_string()))?;
            d.times.validate("task.dg.times")?;
            d.contour
                .validate(n, m)
                .map_err(|e| Error::config("task.dg.contour", e.to_string()))?;
        }
        if self.output.formats.is_empty() {
            return Err(Error::config("output.formats", "at least one format"));
        }
        let potential = self.build_potential(&grid, base)?;
        let hash = config_hash(&self);
        Ok(Prepared {
            config: self,
            task,
            grid,
            symbol,
            potential,
            hash,
        })
    }
}

/// SHA-256 over the canonical JSON form of the config, hex encoded.
pub fn config_hash(config: &RunConfig) -> String {
    crate::report::sha256_hex(&serde_json::to_vec(config).unwrap_or_default())
}

pub fn family_name(f: PotentialFamily) -> &'static str {
    match f {
        PotentialFamily::Power => "power",
        PotentialFamily::ShiftedPower => "shifted-power",
        PotentialFamily::Constant => "constant",
        PotentialFamily::Tabulated => "tabulated",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 3
[grid]
n = 1
R = 16.0
N = 512
[potential]
family = "power"
a = -0.25
sign = -1.0
"#;

    #[test]
    fn parses_classify() {
        let text = format!("{BASE}\n[task.classify]\nalpha = 0.5\nr = 1.0\nt = \"inf\"\ndeltas = {{ lo = 0.25, hi = 4.0, count = 9 }}\n");
        let cfg = RunConfig::from_toml(&text).unwrap();
        assert_eq!(cfg.task_name().unwrap(), "classify");
        assert!(cfg.task.classify.unwrap().t.is_infinite());
        let p = cfg.prepare(Path::new(".")).unwrap();
        assert_eq!(p.hash.len(), 64);
    }

    #[test]
    fn duplicate_task_named() {
        let text = format!(
            "{BASE}\n[task.heat]\ntimes = [0.25, 0.5, 1.0]\n[task.dg]\nE = {{ kind = \"box\", center = [-0.5], half_widths = [0.5] }}\nF = {{ kind = \"box\", center = [2.5], half_widths = [0.5] }}\ntimes = {{ lo = 0.05, hi = 0.5, count = 8 }}\n"
        );
        let err = RunConfig::from_toml(&text).unwrap().task_name().unwrap_err();
        match err {
            Error::Config { path, message } => {
                assert_eq!(path, "task.dg");
                assert!(message.contains("duplicate"));
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn field_paths_in_errors() {
        let text = BASE.replace("N = 512", "N = \"many\"");
        match RunConfig::from_toml(&format!("{text}\n[task.heat]\ntimes = [1.0, 2.0, 3.0]\n")).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "grid.N"),
            e => panic!("{e}"),
        }
        let text = format!("{BASE}\n[task.conditions]\nbranch = \"A5\"\ns = 0.2\nalpha = 0.8\nlambdas = {{ lo = 0.25, hi = 4.0, count = 9 }}\n");
        match RunConfig::from_toml(&text)
            .unwrap()
            .prepare(Path::new("."))
            .unwrap_err()
        {
            Error::Config { path, message } => {
                assert_eq!(path, "task.conditions");
                assert!(message.contains("A5"), "{message}");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn hash_is_stable() {
        let text = format!("{BASE}\n[task.heat]\ntimes = [0.25, 0.5, 1.0]\n");
        let a = RunConfig::from_toml(&text).unwrap();
        let b = RunConfig::from_toml(&text).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        let mut c = b.clone();
        c.seed = 4;
        assert_ne!(config_hash(&a), config_hash(&c));
    }
}
