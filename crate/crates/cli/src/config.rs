//! Run configuration: one TOML file with flat sections, every default
//! materialized so the resolved file alone reproduces a run.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use te_spect::assembly::{BasisFamily, QuadraturePolicy};
use te_spect::companion::{SolveOptions, DEFAULT_CLUSTER_TOL, DEFAULT_MU_FLOOR};
use te_spect::counting::DEFAULT_CONTOUR_POINTS;
use te_spect::diagnostics::DEFAULT_ZERO_TOL;
use te_spect::model::{DomainSpec, OperatorSpec, PotentialSpec, Preset};
use te_spect::oracles::DEFAULT_POINTS_PER_UNIT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out: String,
    pub problem: ProblemSection,
    pub basis: BasisSection,
    pub solve: SolveSection,
    pub trace: TraceSection,
    pub count: CountSection,
    pub scan: ScanSection,
    pub oracle: OracleSection,
    pub convergence: ConvergenceSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out: "te-spect-out".into(),
            problem: ProblemSection::default(),
            basis: BasisSection::default(),
            solve: SolveSection::default(),
            trace: TraceSection::default(),
            count: CountSection::default(),
            scan: ScanSection::default(),
            oracle: OracleSection::default(),
            convergence: ConvergenceSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Constant,
    Polynomial,
    Grid,
}

/// One monomial: exponents followed by the coefficient.
pub type Term = Vec<f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSection {
    /// `laplacian`, `bilaplacian` or `custom`.
    pub operator: String,
    pub dim: usize,
    /// Custom operator terms `[α₁, (α₂,) a_α]`.
    pub operator_terms: Vec<Term>,
    pub potential: PotentialKind,
    pub value: f64,
    /// Polynomial terms `[k₁, (k₂,) c]` for `c·x^k₁·y^k₂`.
    pub terms: Vec<Term>,
    /// 1D grid nodes; 2D grids are uniform with `grid_nx × grid_ny` values.
    pub grid_nodes: Vec<f64>,
    pub grid_values: Vec<f64>,
    pub grid_nx: usize,
    pub grid_ny: usize,
}

impl Default for ProblemSection {
    fn default() -> Self {
        ProblemSection {
            operator: "laplacian".into(),
            dim: 1,
            operator_terms: vec![],
            potential: PotentialKind::Constant,
            value: 3.0,
            terms: vec![],
            grid_nodes: vec![],
            grid_values: vec![],
            grid_nx: 0,
            grid_ny: 0,
        }
    }
}

fn split_terms(terms: &[Term], dim: usize, what: &str) -> Result<Vec<(Vec<usize>, f64)>, String> {
    terms
        .iter()
        .map(|t| {
            if t.len() != dim + 1 {
                return Err(format!("{what} term {t:?} needs {dim} exponents and a coefficient"));
            }
            let exps = t[..dim]
                .iter()
                .map(|&e| if e >= 0.0 && e.fract() == 0.0 { Ok(e as usize) } else { Err(format!("{what} exponent {e} is not a nonnegative integer")) })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((exps, t[dim]))
        })
        .collect()
}

impl ProblemSection {
    pub fn operator_spec(&self) -> Result<OperatorSpec, te_spect::Error> {
        match self.operator.as_str() {
            "laplacian" => OperatorSpec::preset(Preset::Laplacian, self.dim),
            "bilaplacian" => OperatorSpec::preset(Preset::Bilaplacian, self.dim),
            "custom" => {
                let terms = split_terms(&self.operator_terms, self.dim, "operator").map_err(te_spect::Error::InvalidOperator)?;
                OperatorSpec::custom(self.dim, terms)
            }
            other => Err(te_spect::Error::InvalidOperator(format!("unknown operator '{other}'"))),
        }
    }

    pub fn domain(&self) -> Result<DomainSpec, te_spect::Error> {
        DomainSpec::for_dim(self.dim)
    }

    pub fn potential_spec(&self) -> Result<PotentialSpec, te_spect::Error> {
        Ok(match self.potential {
            PotentialKind::Constant => PotentialSpec::Constant(self.value),
            PotentialKind::Polynomial => PotentialSpec::Polynomial(split_terms(&self.terms, self.dim, "potential").map_err(te_spect::Error::InvalidPotential)?),
            PotentialKind::Grid if self.dim == 1 => PotentialSpec::Grid1d { nodes: self.grid_nodes.clone(), values: self.grid_values.clone() },
            PotentialKind::Grid => PotentialSpec::Grid2d { nx: self.grid_nx, ny: self.grid_ny, values: self.grid_values.clone() },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasisSection {
    pub family: BasisFamily,
    /// Functions per dimension.
    pub n: usize,
    /// Gauss nodes per dimension; 0 selects the adaptive default.
    pub quadrature: usize,
}

impl Default for BasisSection {
    fn default() -> Self {
        BasisSection { family: BasisFamily::ClampedPolynomial, n: 24, quadrature: 0 }
    }
}

impl BasisSection {
    pub fn policy(&self) -> QuadraturePolicy {
        match self.quadrature {
            0 => QuadraturePolicy::Auto,
            n => QuadraturePolicy::Fixed(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub cluster_tol: f64,
    pub mu_floor: f64,
    pub want_states: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection { cluster_tol: DEFAULT_CLUSTER_TOL, mu_floor: DEFAULT_MU_FLOOR, want_states: false }
    }
}

impl SolveSection {
    pub fn options(&self) -> SolveOptions {
        SolveOptions { cluster_tol: self.cluster_tol, mu_floor: self.mu_floor }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceSection {
    pub p: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
}

impl Default for TraceSection {
    fn default() -> Self {
        TraceSection { p: vec![1, 2], samples: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountSection {
    pub radii: Vec<f64>,
    pub points: usize,
}

impl Default for CountSection {
    fn default() -> Self {
        CountSection { radii: vec![20.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1600.0], points: DEFAULT_CONTOUR_POINTS }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSection {
    /// Base potential `V₀` (constant).
    pub base: f64,
    /// Direction `W`: constant value, or polynomial terms when nonempty.
    pub direction: f64,
    pub direction_terms: Vec<Term>,
    pub s_min: f64,
    pub s_max: f64,
    pub steps: usize,
    pub zero_tol: f64,
    pub refine: bool,
}

impl Default for ScanSection {
    fn default() -> Self {
        ScanSection {
            base: 1.0,
            direction: 1.0,
            direction_terms: vec![],
            s_min: 0.0,
            s_max: 2.0,
            steps: 20,
            zero_tol: DEFAULT_ZERO_TOL,
            refine: true,
        }
    }
}

impl ScanSection {
    pub fn direction_spec(&self, dim: usize) -> Result<PotentialSpec, te_spect::Error> {
        if self.direction_terms.is_empty() {
            Ok(PotentialSpec::Constant(self.direction))
        } else {
            Ok(PotentialSpec::Polynomial(split_terms(&self.direction_terms, dim, "direction").map_err(te_spect::Error::InvalidPotential)?))
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let steps = self.steps.max(1);
        (0..=steps).map(|k| self.s_min + (self.s_max - self.s_min) * k as f64 / steps as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSection {
    pub v: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub points_per_unit: usize,
    pub l_max: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection { v: 3.0, k_min: 0.1, k_max: 20.0, points_per_unit: DEFAULT_POINTS_PER_UNIT, l_max: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    pub n_list: Vec<usize>,
    /// Final relative change below which the sequence counts as Cauchy.
    pub cauchy_tol: f64,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection { n_list: vec![16, 24, 32, 48], cauchy_tol: 1e-3 }
    }
}

/// Parses a config, rejecting unknown keys.
pub fn parse(text: &str) -> Result<RunConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// Applies `section.key=value` overrides; the value is read as a TOML value,
/// falling back to a bare string.
pub fn apply_overrides(cfg: RunConfig, overrides: &[String]) -> Result<RunConfig, String> {
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut doc = toml::Value::try_from(&cfg).map_err(|e| e.to_string())?;
    for ov in overrides {
        let (path, raw) = ov.split_once('=').ok_or_else(|| format!("override '{ov}' is not key=value"))?;
        let value: toml::Value = match toml::from_str::<toml::Table>(&format!("x = {raw}")) {
            Ok(mut t) => t.remove("x").expect("key present"),
            Err(_) => toml::Value::String(raw.to_string()),
        };
        let keys: Vec<&str> = path.trim().split('.').collect();
        let mut node = &mut doc;
        for (i, key) in keys.iter().enumerate() {
            let table = node.as_table_mut().ok_or_else(|| format!("'{path}' does not name a config key"))?;
            if !table.contains_key(*key) {
                return Err(format!("unknown config key '{path}'"));
            }
            if i + 1 == keys.len() {
                table.insert(key.to_string(), value.clone());
                break;
            }
            node = table.get_mut(*key).expect("checked");
        }
    }
    doc.try_into().map_err(|e: toml::de::Error| e.to_string())
}

pub fn render(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

/// SHA-256 of the rendered config with `out` cleared, hex encoded: where
/// results land does not change what they are.
pub fn hash(cfg: &RunConfig) -> String {
    let located = RunConfig { out: String::new(), ..cfg.clone() };
    let digest = Sha256::digest(render(&located).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
