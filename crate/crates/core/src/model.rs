//! The continuous problem: a constant-coefficient elliptic operator `P₀`, the
//! domain and a positive potential `V`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Margin for strict positivity of the potential.
pub const POSITIVITY_MARGIN: f64 = 1e-10;
/// Number of sphere directions used for the ellipticity check.
pub const SPHERE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `P₀ = −Δ`.
    Laplacian,
    /// `P₀ = Δ²`.
    Bilaplacian,
    Custom,
}

/// `P₀u = Σ a_α (−1)^{|α|/2} ∂^α u`, so that the symbol is `Σ a_α ξ^α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub dim: usize,
    pub order: usize,
    pub terms: Vec<(Vec<usize>, f64)>,
    pub preset: Preset,
}

impl OperatorSpec {
    pub fn laplacian(dim: usize) -> Result<Self> {
        let terms = match dim {
            1 => vec![(vec![2], 1.0)],
            2 => vec![(vec![2, 0], 1.0), (vec![0, 2], 1.0)],
            d => return Err(Error::UnsupportedDimension(d)),
        };
        Ok(OperatorSpec { dim, order: 2, terms, preset: Preset::Laplacian })
    }

    pub fn bilaplacian(dim: usize) -> Result<Self> {
        let terms = match dim {
            1 => vec![(vec![4], 1.0)],
            2 => vec![(vec![4, 0], 1.0), (vec![2, 2], 2.0), (vec![0, 4], 1.0)],
            d => return Err(Error::UnsupportedDimension(d)),
        };
        Ok(OperatorSpec { dim, order: 4, terms, preset: Preset::Bilaplacian })
    }

    pub fn preset(preset: Preset, dim: usize) -> Result<Self> {
        match preset {
            Preset::Laplacian => Self::laplacian(dim),
            Preset::Bilaplacian => Self::bilaplacian(dim),
            Preset::Custom => Err(Error::InvalidOperator("custom operators need explicit coefficients".into())),
        }
    }

    /// General coefficients; the order is the largest `|α|`.
    pub fn custom(dim: usize, terms: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        let mut order = 0;
        for (alpha, a) in &terms {
            if alpha.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: alpha.len() });
            }
            if !a.is_finite() {
                return Err(Error::InvalidOperator(format!("coefficient for {alpha:?} is not finite")));
            }
            let k: usize = alpha.iter().sum();
            if k % 2 == 1 {
                return Err(Error::InvalidOperator(format!(
                    "odd multi-index {alpha:?} breaks formal selfadjointness"
                )));
            }
            order = order.max(k);
        }
        if order == 0 {
            return Err(Error::InvalidOperator("operator has no derivative terms".into()));
        }
        Ok(OperatorSpec { dim, order, terms, preset: Preset::Custom })
    }

    fn principal_symbol(&self, xi: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|(alpha, _)| alpha.iter().sum::<usize>() == self.order)
            .map(|(alpha, a)| a * monomial(alpha, xi))
            .sum()
    }
}

fn monomial(alpha: &[usize], x: &[f64]) -> f64 {
    alpha.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product()
}

/// `Σ a_α ξ^α`.
pub fn symbol_value(op: &OperatorSpec, xi: &[f64]) -> Result<f64> {
    if xi.len() != op.dim {
        return Err(Error::DimensionMismatch { expected: op.dim, actual: xi.len() });
    }
    Ok(op.terms.iter().map(|(alpha, a)| a * monomial(alpha, xi)).sum())
}

/// The interval `[0,1]` or the unit square `[0,1]²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSpec {
    Interval,
    UnitSquare,
}

impl DomainSpec {
    pub fn for_dim(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(DomainSpec::Interval),
            2 => Ok(DomainSpec::UnitSquare),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval => 1,
            DomainSpec::UnitSquare => 2,
        }
    }

    pub fn measure(&self) -> f64 {
        1.0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        const SLACK: f64 = 1e-14;
        x.len() == self.dim() && x.iter().all(|&t| (-SLACK..=1.0 + SLACK).contains(&t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialSpec {
    Constant(f64),
    /// `Σ c_α x^α`.
    Polynomial(Vec<(Vec<usize>, f64)>),
    /// Piecewise-linear interpolation of samples at ascending nodes covering `[0,1]`.
    Grid1d { nodes: Vec<f64>, values: Vec<f64> },
    /// Bilinear interpolation of samples on a uniform `nx × ny` grid over
    /// `[0,1]²`, stored with `x` varying slowest.
    Grid2d { nx: usize, ny: usize, values: Vec<f64> },
    /// `V₀ + s·W`.
    Affine { base: Box<PotentialSpec>, direction: Box<PotentialSpec>, s: f64 },
}

impl PotentialSpec {
    pub fn affine(base: PotentialSpec, direction: PotentialSpec, s: f64) -> Self {
        PotentialSpec::Affine { base: Box::new(base), direction: Box::new(direction), s }
    }

    pub fn is_grid(&self) -> bool {
        match self {
            PotentialSpec::Grid1d { .. } | PotentialSpec::Grid2d { .. } => true,
            PotentialSpec::Affine { base, direction, .. } => base.is_grid() || direction.is_grid(),
            _ => false,
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            PotentialSpec::Constant(_) => true,
            PotentialSpec::Affine { base, direction, .. } => base.is_constant() && direction.is_constant(),
            _ => false,
        }
    }

    fn check_shape(&self, dim: usize) -> Result<()> {
        match self {
            PotentialSpec::Constant(c) if !c.is_finite() => Err(Error::InvalidPotential("constant is not finite".into())),
            PotentialSpec::Constant(_) => Ok(()),
            PotentialSpec::Polynomial(terms) => {
                for (alpha, c) in terms {
                    if alpha.len() != dim {
                        return Err(Error::DimensionMismatch { expected: dim, actual: alpha.len() });
                    }
                    if !c.is_finite() {
                        return Err(Error::InvalidPotential(format!("coefficient for {alpha:?} is not finite")));
                    }
                }
                Ok(())
            }
            PotentialSpec::Grid1d { nodes, values } => {
                if dim != 1 {
                    return Err(Error::DimensionMismatch { expected: dim, actual: 1 });
                }
                if nodes.len() < 2 || nodes.len() != values.len() {
                    return Err(Error::InvalidPotential("grid needs at least 2 nodes and one value per node".into()));
                }
                if nodes.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::InvalidPotential("grid nodes must be strictly ascending".into()));
                }
                if nodes[0] > 0.0 || *nodes.last().unwrap() < 1.0 {
                    return Err(Error::InvalidPotential("grid nodes must cover [0, 1]".into()));
                }
                Ok(())
            }
            PotentialSpec::Grid2d { nx, ny, values } => {
                if dim != 2 {
                    return Err(Error::DimensionMismatch { expected: dim, actual: 2 });
                }
                if *nx < 2 || *ny < 2 || values.len() != nx * ny {
                    return Err(Error::InvalidPotential("2D grid needs nx, ny >= 2 and nx*ny values".into()));
                }
                Ok(())
            }
            PotentialSpec::Affine { base, direction, s } => {
                if !s.is_finite() {
                    return Err(Error::InvalidPotential("family parameter is not finite".into()));
                }
                base.check_shape(dim)?;
                direction.check_shape(dim)
            }
        }
    }

    fn value_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            PotentialSpec::Constant(c) => *c,
            PotentialSpec::Polynomial(terms) => terms.iter().map(|(alpha, c)| c * monomial(alpha, x)).sum(),
            PotentialSpec::Grid1d { nodes, values } => {
                let t = x[0];
                let k = nodes.partition_point(|&n| n <= t).clamp(1, nodes.len() - 1);
                let (x0, x1) = (nodes[k - 1], nodes[k]);
                let w = (t - x0) / (x1 - x0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
            PotentialSpec::Grid2d { nx, ny, values } => {
                let locate = |t: f64, n: usize| {
                    let f = t.clamp(0.0, 1.0) * (n - 1) as f64;
                    let i = (f.floor() as usize).min(n - 2);
                    (i, f - i as f64)
                };
                let (i, a) = locate(x[0], *nx);
                let (j, b) = locate(x[1], *ny);
                let v = |p: usize, q: usize| values[p * ny + q];
                (1.0 - a) * (1.0 - b) * v(i, j) + a * (1.0 - b) * v(i + 1, j) + (1.0 - a) * b * v(i, j + 1) + a * b * v(i + 1, j + 1)
            }
            PotentialSpec::Affine { base, direction, s } => base.value_unchecked(x) + s * direction.value_unchecked(x),
        }
    }
}

/// `V(x)`; points outside `Ω̄` are rejected.
pub fn eval_potential(pot: &PotentialSpec, x: &[f64]) -> Result<f64> {
    if x.is_empty() || x.len() > 2 || x.iter().any(|&t| !(-1e-14..=1.0 + 1e-14).contains(&t)) {
        return Err(Error::OutOfDomain(x.to_vec()));
    }
    pot.check_shape(x.len())?;
    Ok(pot.value_unchecked(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Warning {
    /// Grid potentials are only Lipschitz.
    Smoothness(String),
    /// The principal symbol takes negative values.
    SymbolSign(String),
}

/// A validated problem with its derived Schatten flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub operator: OperatorSpec,
    pub domain: DomainSpec,
    pub potential: PotentialSpec,
    /// `m > n`.
    pub trace_class: bool,
    /// `2m > n`.
    pub hilbert_schmidt: bool,
    /// Smallest integer `p > n/m`.
    pub p_min: usize,
    /// `P₀(ξ) ≥ 0` on the sampled sphere.
    pub symbol_nonnegative: bool,
    pub warnings: Vec<Warning>,
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        self.operator.dim
    }

    pub fn order(&self) -> usize {
        self.operator.order
    }

    pub fn potential_at(&self, x: &[f64]) -> f64 {
        self.potential.value_unchecked(x)
    }

    /// `q = 1/V`.
    pub fn q_at(&self, x: &[f64]) -> f64 {
        1.0 / self.potential.value_unchecked(x)
    }

    /// Same operator and domain, different potential.
    pub fn with_potential(&self, potential: PotentialSpec) -> Result<ProblemSpec> {
        validate_problem(&self.operator, &self.domain, &potential)
    }
}

fn sphere_points(dim: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..SPHERE_SAMPLES)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / SPHERE_SAMPLES as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
    }
}

/// Points where positivity of `V` is checked before any quadrature exists.
fn positivity_probe(dim: usize, pot: &PotentialSpec) -> Vec<Vec<f64>> {
    const PER_DIM_1D: usize = 513;
    const PER_DIM_2D: usize = 129;
    let mut pts = Vec::new();
    match dim {
        1 => {
            for i in 0..PER_DIM_1D {
                pts.push(vec![i as f64 / (PER_DIM_1D - 1) as f64]);
            }
        }
        _ => {
            for i in 0..PER_DIM_2D {
                for j in 0..PER_DIM_2D {
                    pts.push(vec![i as f64 / (PER_DIM_2D - 1) as f64, j as f64 / (PER_DIM_2D - 1) as f64]);
                }
            }
        }
    }
    collect_grid_nodes(pot, &mut pts);
    pts
}

fn collect_grid_nodes(pot: &PotentialSpec, pts: &mut Vec<Vec<f64>>) {
    match pot {
        PotentialSpec::Grid1d { nodes, .. } => pts.extend(nodes.iter().filter(|t| (0.0..=1.0).contains(*t)).map(|&t| vec![t])),
        PotentialSpec::Grid2d { nx, ny, .. } => {
            for i in 0..*nx {
                for j in 0..*ny {
                    pts.push(vec![i as f64 / (nx - 1) as f64, j as f64 / (ny - 1) as f64]);
                }
            }
        }
        PotentialSpec::Affine { base, direction, .. } => {
            collect_grid_nodes(base, pts);
            collect_grid_nodes(direction, pts);
        }
        _ => {}
    }
}

/// Checks `V > ε_V` at the given points.
pub fn check_positive(pot: &PotentialSpec, points: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    for x in points {
        let v = pot.value_unchecked(&x);
        if !(v > POSITIVITY_MARGIN) {
            return Err(Error::NonpositivePotential { at: x, value: v });
        }
    }
    Ok(())
}

pub fn validate_problem(op: &OperatorSpec, dom: &DomainSpec, pot: &PotentialSpec) -> Result<ProblemSpec> {
    let n = op.dim;
    if !(1..=2).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if dom.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: dom.dim() });
    }
    let m = op.order;
    if m == 0 || m % 2 == 1 {
        return Err(Error::InvalidOperator(format!("order {m} is not a positive even integer")));
    }
    for (alpha, a) in &op.terms {
        if alpha.len() != n {
            return Err(Error::DimensionMismatch { expected: n, actual: alpha.len() });
        }
        let k: usize = alpha.iter().sum();
        if k > m || k % 2 == 1 || !a.is_finite() {
            return Err(Error::InvalidOperator(format!("term {alpha:?} with coefficient {a} is not admissible")));
        }
    }

    let scale: f64 = op.terms.iter().map(|(_, a)| a.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let mut min_symbol = f64::INFINITY;
    let mut sign = 0.0;
    for xi in sphere_points(n) {
        let s = op.principal_symbol(&xi);
        if s.abs() <= 1e-12 * scale || (sign != 0.0 && s.signum() != sign) {
            return Err(Error::EllipticityViolation { xi });
        }
        sign = s.signum();
        min_symbol = min_symbol.min(symbol_value(op, &xi)?);
    }

    pot.check_shape(n)?;
    check_positive(pot, positivity_probe(n, pot))?;

    let mut warnings = Vec::new();
    if pot.is_grid() {
        warnings.push(Warning::Smoothness(
            "grid potential is only piecewise smooth; the theory assumes C^N data".into(),
        ));
    }
    let symbol_nonnegative = min_symbol >= 0.0;
    if !symbol_nonnegative {
        warnings.push(Warning::SymbolSign(format!("principal symbol reaches {min_symbol}")));
    }
    for w in &warnings {
        log::warn!("{w:?}");
    }
    Ok(ProblemSpec {
        operator: op.clone(),
        domain: *dom,
        potential: pot.clone(),
        trace_class: m > n,
        hilbert_schmidt: 2 * m > n,
        p_min: n / m + 1,
        symbol_nonnegative,
        warnings,
    })
}
