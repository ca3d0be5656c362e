//! Scenario files: the declarative input format of every subcommand.
//!
//! A scenario is a TOML (or JSON) document with a `[model]` block naming one
//! of the four model families plus optional command-specific blocks. Unknown
//! keys are rejected everywhere, and `--override key=value` edits pass
//! through the same validator as files, so a scenario that parses is a
//! scenario that runs.

use std::path::Path;

use popdyn::growth::Growth;
use popdyn::model::{Bazykin, Competition, OdeSystem, TwoPredator, TwoPrey};
use popdyn::{Error, Result};
use serde::{Deserialize, Serialize};

/// The model block: a family tag plus that family's parameter record.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelBlock {
    Competition(Competition),
    TwoPredator(TwoPredator),
    TwoPrey(TwoPrey),
    Bazykin(Bazykin),
}

impl ModelBlock {
    pub fn family_name(&self) -> &'static str {
        match self {
            ModelBlock::Competition(_) => "competition",
            ModelBlock::TwoPredator(_) => "two_predator",
            ModelBlock::TwoPrey(_) => "two_prey",
            ModelBlock::Bazykin(_) => "bazykin",
        }
    }

    /// State-column names for series output.
    pub fn columns(&self) -> Vec<String> {
        match self {
            ModelBlock::Competition(m) => {
                let mut cols = vec!["x".to_string()];
                cols.extend((1..=m.n_consumers()).map(|i| format!("y{i}")));
                cols
            }
            ModelBlock::TwoPredator(_) | ModelBlock::TwoPrey(_) => {
                vec!["x".into(), "y".into(), "z".into()]
            }
            ModelBlock::Bazykin(_) => vec!["x".into(), "y".into()],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelBlock::Competition(m) => m.dim(),
            ModelBlock::TwoPredator(m) => m.dim(),
            ModelBlock::TwoPrey(m) => m.dim(),
            ModelBlock::Bazykin(m) => m.dim(),
        }
    }
}

/// Uniform-grid sampling window for `simulate` and trajectory-based checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Integrator {
    #[serde(default)]
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    /// Relative tolerance (defaults to the library's population preset).
    pub rtol: Option<f64>,
    /// Absolute tolerance (defaults to the library's population preset).
    pub atol: Option<f64>,
}

impl Integrator {
    pub fn options(&self) -> popdyn::integrate::IntOptions {
        let mut opts = popdyn::integrate::IntOptions::population();
        if let Some(rtol) = self.rtol {
            opts.rtol = rtol;
        }
        if let Some(atol) = self.atol {
            opts.atol = atol;
        }
        opts
    }
}

/// Equilibrium table over growth laws and interspecific-competition pairs
/// (competition family only).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableBlock {
    pub growth: Vec<Growth>,
    pub m12: Vec<f64>,
    pub m21: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyBlock {
    pub point: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
}

fn default_eps() -> f64 {
    1e-7
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InvadeBlock {
    /// Initial `(x, z)` guess for the resident boundary equilibrium.
    pub s0: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub k2: [f64; 2],
    pub a2: [f64; 2],
    pub grid: [usize; 2],
    pub s0: Vec<f64>,
    pub t_probe: f64,
    #[serde(default = "default_extinct_eps")]
    pub extinct_eps: f64,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
}

fn default_extinct_eps() -> f64 {
    1e-3
}

/// Optional one-parameter Hopf-curve trace attached to a `hopf` scenario.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceBlock {
    pub range: [f64; 2],
    pub steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum HopfBlock {
    /// Density-dependent two-predator reduction; traces over `k`.
    Ch3 {
        k: f64,
        q1: f64,
        trace: Option<TraceBlock>,
    },
    /// Two-prey reduction; traces over `c1`.
    Ch4 {
        r1: f64,
        r2: f64,
        k2: f64,
        c1: f64,
        trace: Option<TraceBlock>,
    },
    /// Threshold geometry of the Bazykin model in the `[model]` block.
    Bazykin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ZeroHopfBlock {
    Ch4 { r1: f64, r2: f64, k2: f64 },
    Symmetric { r1: f64, r2: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AverageBlock {
    /// Two-prey reduction; `c1` and `m` default to the zero-Hopf values.
    Ch4 {
        r1: f64,
        r2: f64,
        k2: f64,
        c1: Option<f64>,
        m: Option<f64>,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
    /// Symmetric variant; `c1` and `m` default to the zero-Hopf values.
    Symmetric {
        r1: f64,
        r2: f64,
        c1: Option<f64>,
        m: Option<f64>,
        #[serde(default = "default_rel_tol")]
        rel_tol: f64,
    },
}

fn default_rel_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareBlock {
    pub x0: Vec<f64>,
    /// Equilibrium around which the cylindrical angle is measured.
    pub center: Vec<f64>,
    /// Transient discarded before anchoring the section at the flow point.
    pub t_transient: f64,
    pub n_iterates: usize,
    pub max_time: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowBlock {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZeroOneBlock {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    pub c_draws: usize,
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationBlock {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default = "default_tau")]
    pub tau: usize,
    #[serde(default = "default_n_radii")]
    pub n_radii: usize,
    /// Largest embedding dimension of the dimension fit.
    pub m_max_dimension: usize,
    /// Largest embedding dimension of the entropy fit.
    pub m_max_entropy: usize,
}

fn default_tau() -> usize {
    1
}

fn default_n_radii() -> usize {
    25
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxCountBlock {
    pub t0: f64,
    pub t1: f64,
    pub dt: f64,
    #[serde(default = "default_n_scales")]
    pub n_scales: usize,
}

fn default_n_scales() -> usize {
    20
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovBlock {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default = "default_h")]
    pub h: f64,
}

fn default_h() -> f64 {
    1e-4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroclinicBlock {
    /// Shape parameters of the candidate logistic arcs, each in (0, 1).
    pub c: Vec<f64>,
    /// Time grid bounds and step for the residual check.
    #[serde(default = "default_het_window")]
    pub window: [f64; 3],
}

fn default_het_window() -> [f64; 3] {
    [0.0, 30.0, 0.1]
}

/// Chaos-diagnostic selection: each sub-block switches one diagnostic on.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChaosBlock {
    pub spectrum: Option<WindowBlock>,
    pub zero_one: Option<ZeroOneBlock>,
    pub correlation: Option<CorrelationBlock>,
    pub box_counting: Option<BoxCountBlock>,
    pub lyapunov: Option<LyapunovBlock>,
    pub heteroclinic: Option<HeteroclinicBlock>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundBlock {
    /// Exponential rate of the absorbing estimate, in (0, min mu].
    pub phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CenterManifoldBlock {
    pub point: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    /// Center-direction offsets at which the residual is reported.
    #[serde(default = "default_probe")]
    pub probe: Vec<f64>,
}

fn default_probe() -> Vec<f64> {
    vec![0.01, 0.05, 0.1]
}

/// A full scenario document. Every block is optional; each subcommand
/// demands the blocks it needs and ignores the rest.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub model: Option<ModelBlock>,
    pub seed: Option<u64>,
    pub initial: Option<Vec<f64>>,
    pub integrator: Option<Integrator>,
    pub table: Option<TableBlock>,
    pub classify: Option<ClassifyBlock>,
    pub invade: Option<InvadeBlock>,
    pub sweep: Option<SweepBlock>,
    pub hopf: Option<HopfBlock>,
    pub zero_hopf: Option<ZeroHopfBlock>,
    pub average: Option<AverageBlock>,
    pub poincare: Option<PoincareBlock>,
    pub chaos: Option<ChaosBlock>,
    pub bound: Option<BoundBlock>,
    pub center_manifold: Option<CenterManifoldBlock>,
}

/// Named scenarios shipped with the binary, mirroring the studied figures
/// and examples.
pub const PRESETS: &[(&str, &str)] = &[
    ("ch2_table", include_str!("../presets/ch2_table.toml")),
    ("ej311", include_str!("../presets/ej311.toml")),
    ("ej312", include_str!("../presets/ej312.toml")),
    ("ej313", include_str!("../presets/ej313.toml")),
    ("fig44", include_str!("../presets/fig44.toml")),
    ("fig46", include_str!("../presets/fig46.toml")),
    ("fig48", include_str!("../presets/fig48.toml")),
    ("ch5_chaos", include_str!("../presets/ch5_chaos.toml")),
    ("figA1", include_str!("../presets/figA1.toml")),
];

/// Fetch the raw text of a scenario reference: an existing file wins, then a
/// preset name (with or without a `.toml`/`.json` suffix).
fn raw_text(reference: &str) -> Result<String> {
    let path = Path::new(reference);
    if path.is_file() {
        return std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidScenario(format!("cannot read {reference}: {e}")));
    }
    let stem = reference
        .trim_end_matches(".toml")
        .trim_end_matches(".json");
    if let Some((_, text)) = PRESETS.iter().find(|(name, _)| *name == stem) {
        return Ok(text.to_string());
    }
    Err(Error::InvalidScenario(format!(
        "scenario '{reference}' is neither a readable file nor a preset \
         (presets: {})",
        PRESETS
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Parse text into the intermediate TOML tree. JSON documents are accepted
/// and funneled through the same tree so both formats share one validator.
fn parse_tree(text: &str) -> Result<toml::Value> {
    let trimmed = text.trim_start();
    if trimmed.starts_with('{') {
        serde_json::from_str::<toml::Value>(text)
            .map_err(|e| Error::InvalidScenario(format!("invalid JSON scenario: {e}")))
    } else {
        toml::from_str::<toml::Value>(text)
            .map_err(|e| Error::InvalidScenario(format!("invalid TOML scenario: {e}")))
    }
}

/// Apply one `key=value` override to the tree; dotted keys descend into
/// (and create) nested tables. The value is parsed as TOML, falling back to
/// a bare string.
fn apply_override(tree: &mut toml::Value, spec: &str) -> Result<()> {
    let (key, value) = spec.split_once('=').ok_or_else(|| {
        Error::InvalidScenario(format!("override '{spec}' is not of the form key=value"))
    })?;
    let parsed: toml::Value = toml::from_str::<toml::Table>(&format!("v = {value}"))
        .map(|t| t["v"].clone())
        .unwrap_or_else(|_| toml::Value::String(value.to_string()));
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            Error::InvalidScenario(format!("override '{key}': '{part}' is not a table"))
        })?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!("key split produced no parts")
}

/// Load, override, and validate a scenario.
pub fn load(reference: &str, overrides: &[String]) -> Result<Scenario> {
    let mut tree = parse_tree(&raw_text(reference)?)?;
    for spec in overrides {
        apply_override(&mut tree, spec)?;
    }
    Scenario::deserialize(tree)
        .map_err(|e| Error::InvalidScenario(format!("invalid scenario: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for (name, text) in PRESETS {
            let tree = parse_tree(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            Scenario::deserialize(tree).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = "typo = 1\n[model]\nfamily = \"bazykin\"\nr = 1.0\nk = 1.0\nq = 1.0\n\
                   a = 1.0\nc = 1.0\nmu = 1.0\nm = 1.0\n";
        assert!(Scenario::deserialize(parse_tree(bad).unwrap()).is_err());

        let bad_model = "[model]\nfamily = \"bazykin\"\nr = 1.0\nk = 1.0\nq = 1.0\n\
                         a = 1.0\nc = 1.0\nmu = 1.0\nm = 1.0\nextra = 2.0\n";
        assert!(Scenario::deserialize(parse_tree(bad_model).unwrap()).is_err());
    }

    #[test]
    fn overrides_round_trip_through_the_validator() {
        let mut tree = parse_tree(PRESETS.iter().find(|(n, _)| *n == "fig48").unwrap().1).unwrap();
        apply_override(&mut tree, "hopf.c1=0.75").unwrap();
        apply_override(&mut tree, "seed=7").unwrap();
        let sc = Scenario::deserialize(tree).unwrap();
        match sc.hopf.unwrap() {
            HopfBlock::Ch4 { c1, .. } => assert_eq!(c1, 0.75),
            other => panic!("unexpected hopf block {other:?}"),
        }
        assert_eq!(sc.seed, Some(7));

        let mut tree = parse_tree("").unwrap();
        apply_override(&mut tree, "initial=[1.0, 2.0]").unwrap();
        let sc = Scenario::deserialize(tree).unwrap();
        assert_eq!(sc.initial, Some(vec![1.0, 2.0]));

        // An override introducing an unknown key is rejected like a file.
        let mut tree = parse_tree("").unwrap();
        apply_override(&mut tree, "no_such_block.x=1").unwrap();
        assert!(Scenario::deserialize(tree).is_err());
    }

    #[test]
    fn json_scenarios_are_accepted() {
        let json = r#"{"model": {"family": "bazykin", "r": 0.3, "k": 4.5, "q": 1.7,
                       "a": 3.0, "c": 2.0, "mu": 0.3, "m": 0.98}}"#;
        let sc = Scenario::deserialize(parse_tree(json).unwrap()).unwrap();
        assert!(matches!(sc.model, Some(ModelBlock::Bazykin(_))));
    }
}
