//! Amoebas `A_t(V) = log_{1/t}(V)` of sampled sets and t-sweep estimates of
//! the logarithmic limit set `A_0(V)`.
//!
//! Formula sources are sampled directly in amoeba coordinates: by the
//! semifield isomorphism, `A_t(V)` is cut out by the same formula read in
//! `(R, ⊕_t, +)`, which avoids overflow for very small `t`.

pub(crate) mod sampler;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dequant::{self, eval_classical, eval_scaled};
use crate::formula::{Formula, FormulaError, ParameterEnvironment, Relation, Term};
use crate::sphere::{self, DirectionCloud};
use crate::tropical::{self, PolyhedralComplex};

#[derive(Debug, Error)]
pub enum AmoebaError {
    #[error("no sample satisfied the formula")]
    EmptySample,
    #[error("formula has quantifiers; sampling needs a quantifier-free formula")]
    QuantifiedFormula,
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    MalformedRow { line: usize, msg: String },
    #[error("line {line}: coordinate {value} is not positive")]
    NonPositiveCoordinate { line: usize, value: f64 },
    #[error("point cloud is in log space; a classical cloud is required")]
    NotClassical,
    #[error("empty coordinate subset")]
    EmptySubset,
    #[error("coordinate {0} out of range")]
    CoordinateOutOfRange(usize),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Dequant(#[from] dequant::DequantError),
    #[error(transparent)]
    Tropical(#[from] tropical::TropicalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, AmoebaError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Space {
    /// Points of `(R_{>0})^n`.
    Classical,
    /// Points of an amoeba.
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    pub space: Space,
}

impl PointCloud {
    pub fn new(dim: usize, points: Vec<Vec<f64>>, space: Space) -> Result<Self> {
        for p in &points {
            if p.len() != dim {
                return Err(AmoebaError::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|v| !v.is_finite() || (space == Space::Classical && *v <= 0.0)) {
                return Err(AmoebaError::InvalidConfig(format!("invalid point {p:?}")));
            }
        }
        Ok(PointCloud { dim, points, space })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `t_k = t0 · ratio^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSchedule {
    pub t0: f64,
    pub ratio: f64,
    pub count: usize,
}

impl TSchedule {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.t0 * self.ratio.powi(k as i32)).collect()
    }
}

impl Default for TSchedule {
    fn default() -> Self {
        TSchedule { t0: 0.1, ratio: 0.1, count: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Box `[lo, hi]^n` in amoeba coordinates (in `log10` for
    /// [`sample_members`]).
    pub log_box: (f64, f64),
    pub samples_per_t: usize,
    /// Axis-parallel lines searched for roots of equality atoms, per `t`.
    pub refine_lines: usize,
    pub t_schedule: TSchedule,
    /// Relative equality thickening `η₀`; at `t` it is `η₀ · t^{1/4}`.
    pub eta0: f64,
    pub radius_threshold: f64,
    /// Leader clustering radius in radians.
    pub cluster_tolerance: f64,
    /// Number of final schedule entries merged into the estimate.
    pub merge_last: usize,
    pub tau_eq: f64,
    pub rng_seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            log_box: (-12.0, 3.0),
            samples_per_t: 200_000,
            refine_lines: 5_000,
            t_schedule: TSchedule::default(),
            eta0: 1e-2,
            radius_threshold: 0.5,
            cluster_tolerance: 0.02,
            merge_last: 1,
            tau_eq: dequant::DEFAULT_TAU_EQ,
            rng_seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Checks the invariants; returns warnings that do not prevent a run.
    pub fn validate(&self) -> Result<Vec<String>> {
        let bad = |m: &str| Err(AmoebaError::InvalidConfig(m.into()));
        let ts = self.t_schedule.values();
        if ts.is_empty() {
            return bad("empty t schedule");
        }
        if ts.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("t values must lie in (0, 1)");
        }
        if ts.windows(2).any(|w| w[1] >= w[0]) {
            return bad("t values must be strictly decreasing");
        }
        if !(self.eta0 > 0.0) || !(self.radius_threshold > 0.0) || !(self.cluster_tolerance > 0.0) {
            return bad("eta0, radius_threshold and cluster_tolerance must be positive");
        }
        if !(self.log_box.0 < self.log_box.1) || !self.log_box.0.is_finite() || !self.log_box.1.is_finite() {
            return bad("log box must satisfy lo < hi");
        }
        if self.merge_last == 0 {
            return bad("merge_last must be at least 1");
        }
        let mut warnings = Vec::new();
        let r = self.radius_threshold;
        if self.log_box.0 > -r || self.log_box.1 < r {
            warnings.push(format!(
                "box [{}, {}] does not contain the sphere of radius {r}; directions may be truncated",
                self.log_box.0, self.log_box.1
            ));
        }
        Ok(warnings)
    }

    pub fn eta_at(&self, t: f64) -> f64 {
        self.eta0 * t.powf(0.25)
    }
}

/// Where a limit set estimate draws its points from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Formula { formula: &'a Formula, env: &'a ParameterEnvironment },
    Points(&'a PointCloud),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEstimate {
    pub estimate: DirectionCloud,
    /// Clustered directions at each schedule entry.
    pub per_t: Vec<DirectionCloud>,
    pub t_values: Vec<f64>,
    pub samples_per_t: Vec<usize>,
}

fn check_sampleable(f: &Formula) -> Result<()> {
    if !f.is_quantifier_free() {
        return Err(AmoebaError::QuantifiedFormula);
    }
    Ok(())
}

fn dim_of(f: &Formula) -> Result<usize> {
    let n = f.arity();
    if n == 0 {
        return Err(AmoebaError::InvalidConfig("formula has no variables".into()));
    }
    if n > sampler::MAX_DIM {
        return Err(AmoebaError::InvalidConfig(format!("at most {} variables are supported", sampler::MAX_DIM)));
    }
    Ok(n)
}

/// Evaluates connectives with separate tolerances for `=` and `<=` atoms.
fn holds_with(f: &Formula, atom: &impl Fn(Relation, &Term, &Term) -> bool) -> bool {
    match f {
        Formula::Atom { rel, lhs, rhs } => atom(*rel, lhs, rhs),
        Formula::And(fs) => fs.iter().all(|g| holds_with(g, atom)),
        Formula::Or(fs) => fs.iter().any(|g| holds_with(g, atom)),
        Formula::Not(g) => !holds_with(g, atom),
        Formula::Exists(..) | Formula::Forall(..) => false,
    }
}

struct Classical<'a> {
    formula: &'a Formula,
    env: &'a ParameterEnvironment,
    eta: f64,
}

fn exp10(u: &[f64]) -> Vec<f64> {
    u.iter().map(|v| 10f64.powf(*v)).collect()
}

impl sampler::Membership for Classical<'_> {
    fn gap(&self, lhs: &Term, rhs: &Term, p: &[f64]) -> f64 {
        let x = exp10(p);
        match (eval_classical(lhs, &x, self.env), eval_classical(rhs, &x, self.env)) {
            (Ok(a), Ok(b)) => a - b,
            _ => f64::NAN,
        }
    }

    fn holds(&self, p: &[f64], refined: bool) -> bool {
        let x = exp10(p);
        let eta = if refined { self.eta.max(1e-9) } else { self.eta };
        holds_with(self.formula, &|rel, l, r| match (eval_classical(l, &x, self.env), eval_classical(r, &x, self.env)) {
            (Ok(u), Ok(v)) => match rel {
                Relation::Eq => u == v || (u - v).abs() <= eta * u.max(v),
                Relation::Leq => u <= v,
            },
            _ => false,
        })
    }
}

struct Deformed<'a> {
    formula: &'a Formula,
    env: &'a ParameterEnvironment,
    scale: f64,
    eq_tol: f64,
    refined_eq_tol: f64,
    leq_tol: f64,
}

impl sampler::Membership for Deformed<'_> {
    fn gap(&self, lhs: &Term, rhs: &Term, p: &[f64]) -> f64 {
        match (eval_scaled(lhs, p, self.scale, self.env), eval_scaled(rhs, p, self.scale, self.env)) {
            (Ok(a), Ok(b)) => a - b,
            _ => f64::NAN,
        }
    }

    fn holds(&self, p: &[f64], refined: bool) -> bool {
        let eq_tol = if refined { self.refined_eq_tol } else { self.eq_tol };
        holds_with(self.formula, &|rel, l, r| {
            match (eval_scaled(l, p, self.scale, self.env), eval_scaled(r, p, self.scale, self.env)) {
                (Ok(u), Ok(v)) => match rel {
                    Relation::Eq => u == v || (u - v).abs() <= eq_tol,
                    Relation::Leq => u <= v + self.leq_tol,
                },
                _ => false,
            }
        })
    }
}

/// Points of `(R_{>0})^n` satisfying `f`, sampled over the `log10` box.
/// Equalities are accepted within relative `η₀`; roots found by bisection
/// along axis-parallel lines are added.
pub fn sample_members(f: &Formula, env: &ParameterEnvironment, cfg: &SamplerConfig) -> Result<PointCloud> {
    check_sampleable(f)?;
    env.check_covers(f)?;
    cfg.validate()?;
    let dim = dim_of(f)?;
    let eq_atoms = f.equality_atoms();
    let plan = sampler::Plan {
        eq_atoms,
        dim,
        lo: cfg.log_box.0,
        hi: cfg.log_box.1,
        samples: cfg.samples_per_t,
        lines: cfg.refine_lines,
        seed: cfg.rng_seed,
        stream: u64::MAX,
        inner_scale: None,
    };
    let pts = plan.run(&Classical { formula: f, env, eta: cfg.eta0 });
    if pts.is_empty() {
        return Err(AmoebaError::EmptySample);
    }
    Ok(PointCloud { dim, points: pts.iter().map(|u| exp10(u)).collect(), space: Space::Classical })
}

/// Points of `A_t(V)` sampled over the box in amoeba coordinates.
pub fn sample_amoeba(f: &Formula, env: &ParameterEnvironment, cfg: &SamplerConfig, t: f64, stream: u64) -> Result<PointCloud> {
    check_sampleable(f)?;
    env.check_covers(f)?;
    let dim = dim_of(f)?;
    let scale = dequant::log_scale(t)?;
    let eq_tol = (cfg.eta_at(t)).ln_1p() / scale;
    let m = Deformed { formula: f, env, scale, eq_tol, refined_eq_tol: eq_tol.max(cfg.tau_eq), leq_tol: cfg.tau_eq };
    let plan = sampler::Plan {
        eq_atoms: f.equality_atoms(),
        dim,
        lo: cfg.log_box.0,
        hi: cfg.log_box.1,
        samples: cfg.samples_per_t,
        lines: cfg.refine_lines,
        seed: cfg.rng_seed,
        stream,
        inner_scale: Some(std::f64::consts::LN_10 / scale),
    };
    Ok(PointCloud { dim, points: plan.run(&m), space: Space::Log })
}

/// Component-wise `log_{1/t}` of a classical cloud.
pub fn amoeba_at(cloud: &PointCloud, t: f64) -> Result<PointCloud> {
    if cloud.space != Space::Classical {
        return Err(AmoebaError::NotClassical);
    }
    let scale = dequant::log_scale(t)?;
    Ok(PointCloud {
        dim: cloud.dim,
        points: cloud.points.iter().map(|p| p.iter().map(|v| v.ln() / scale).collect()).collect(),
        space: Space::Log,
    })
}

/// Greedy leader clustering: a direction starts a new cluster unless it is
/// within `eps` radians of an earlier leader. Leaders keep first-seen order.
pub fn cluster_directions(directions: &[Vec<f64>], eps: f64) -> Vec<Vec<f64>> {
    use std::collections::HashMap;
    let cell = |v: &[f64]| -> Vec<i64> { v.iter().map(|x| (x / eps).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut leaders: Vec<Vec<f64>> = Vec::new();
    for d in directions {
        let c = cell(d);
        let mut near = false;
        let mut offsets = vec![-1i64; c.len()];
        'outer: loop {
            let key: Vec<i64> = c.iter().zip(&offsets).map(|(a, b)| a + b).collect();
            if let Some(ids) = grid.get(&key) {
                if ids.iter().any(|&i| sphere::geodesic(&leaders[i], d) <= eps) {
                    near = true;
                    break 'outer;
                }
            }
            // next offset in {-1, 0, 1}^n
            for o in offsets.iter_mut() {
                if *o < 1 {
                    *o += 1;
                    continue 'outer;
                }
                *o = -1;
            }
            break;
        }
        if !near {
            grid.entry(c).or_default().push(leaders.len());
            leaders.push(d.clone());
        }
    }
    leaders
}

fn directions_beyond(points: &[Vec<f64>], radius: f64) -> Vec<Vec<f64>> {
    points.iter().filter(|p| sphere::norm(p) >= radius).filter_map(|p| sphere::normalize(p)).collect()
}

/// t-sweep estimate of `A_0(V) ∩ S^{n-1}`.
///
/// At each `t` the points of `A_t(V)` with norm at least `R` are projected
/// to the sphere. The estimate merges the last `merge_last` schedule
/// entries and clusters them with radius `ε_dir`; `origin_member` is set
/// iff some sample exists.
pub fn estimate_limit_directions(source: Source<'_>, cfg: &SamplerConfig) -> Result<LimitEstimate> {
    cfg.validate()?;
    let ts = cfg.t_schedule.values();
    let (dim, clouds): (usize, Vec<Vec<Vec<f64>>>) = match source {
        Source::Formula { formula, env } => {
            let dim = dim_of(formula)?;
            let clouds = ts
                .iter()
                .enumerate()
                .map(|(k, &t)| sample_amoeba(formula, env, cfg, t, k as u64).map(|c| c.points))
                .collect::<Result<_>>()?;
            (dim, clouds)
        }
        Source::Points(cloud) => {
            let clouds = ts.iter().map(|&t| amoeba_at(cloud, t).map(|c| c.points)).collect::<Result<_>>()?;
            (cloud.dim, clouds)
        }
    };
    let samples_per_t: Vec<usize> = clouds.iter().map(|c| c.len()).collect();
    if samples_per_t.iter().all(|&n| n == 0) {
        return Err(AmoebaError::EmptySample);
    }
    let raw: Vec<Vec<Vec<f64>>> = clouds.iter().map(|c| directions_beyond(c, cfg.radius_threshold)).collect();
    let per_t = raw
        .iter()
        .zip(&samples_per_t)
        .map(|(d, &n)| DirectionCloud { dim, directions: cluster_directions(d, cfg.cluster_tolerance), origin_member: n > 0 })
        .collect();
    let from = ts.len().saturating_sub(cfg.merge_last);
    let merged: Vec<Vec<f64>> = raw[from..].iter().flatten().cloned().collect();
    let estimate = DirectionCloud { dim, directions: cluster_directions(&merged, cfg.cluster_tolerance), origin_member: true };
    Ok(LimitEstimate { estimate, per_t, t_values: ts, samples_per_t })
}

/// The other side of a Hausdorff comparison.
#[derive(Debug, Clone, Copy)]
pub enum DirectionTarget<'a> {
    Cloud(&'a DirectionCloud),
    Complex(&'a PolyhedralComplex),
}

/// Number of sphere probes used to sample a complex's directions.
pub const COMPLEX_PROBES: usize = 20_000;

/// Symmetric geodesic Hausdorff distance in radians.
pub fn hausdorff_directions(a: &DirectionCloud, b: DirectionTarget<'_>) -> Result<f64> {
    match b {
        DirectionTarget::Cloud(b) => {
            if a.dim != b.dim {
                return Err(AmoebaError::DimensionMismatch { expected: a.dim, got: b.dim });
            }
            Ok(sphere::hausdorff(&a.directions, &b.directions))
        }
        DirectionTarget::Complex(c) => Ok(tropical::hausdorff_to_complex(a, c, COMPLEX_PROBES, 0)?),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConeInvarianceReport {
    InsufficientData,
    Distances {
        /// Hausdorff distance between successive schedule entries.
        distances: Vec<f64>,
        /// Set when some distance exceeds its predecessor.
        flagged: bool,
    },
}

pub fn check_cone_invariance(per_t: &[DirectionCloud]) -> ConeInvarianceReport {
    if per_t.len() < 2 {
        return ConeInvarianceReport::InsufficientData;
    }
    let distances: Vec<f64> = per_t.windows(2).map(|w| sphere::hausdorff(&w[0].directions, &w[1].directions)).collect();
    let flagged = distances.windows(2).any(|w| w[1] > w[0] + 1e-12);
    ConeInvarianceReport::Distances { distances, flagged }
}

fn check_subset(dim: usize, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(AmoebaError::EmptySubset);
    }
    match subset.iter().find(|&&i| i >= dim) {
        Some(&i) => Err(AmoebaError::CoordinateOutOfRange(i)),
        None => Ok(()),
    }
}

pub fn project_cloud(cloud: &PointCloud, subset: &[usize]) -> Result<PointCloud> {
    check_subset(cloud.dim, subset)?;
    Ok(PointCloud {
        dim: subset.len(),
        points: cloud.points.iter().map(|p| subset.iter().map(|&i| p[i]).collect()).collect(),
        space: cloud.space,
    })
}

/// Coordinate projection of directions; vectors that vanish only mark the
/// origin.
pub fn project_directions(cloud: &DirectionCloud, subset: &[usize]) -> Result<DirectionCloud> {
    check_subset(cloud.dim, subset)?;
    let mut out = DirectionCloud::empty(subset.len(), cloud.origin_member);
    for d in &cloud.directions {
        let v: Vec<f64> = subset.iter().map(|&i| d[i]).collect();
        match sphere::normalize(&v) {
            Some(u) if sphere::norm(&v) > 1e-12 => out.directions.push(u),
            _ => out.origin_member = true,
        }
    }
    Ok(out)
}

/// Reads a classical cloud: one point per row, comma separated. Blank lines
/// and lines starting with `#` are skipped.
pub fn ingest_points(reader: impl Read) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut dim = None;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let p: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| AmoebaError::MalformedRow { line, msg: format!("not a number: {f:?}") }))
            .collect::<Result<_>>()?;
        if let Some(&v) = p.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(AmoebaError::NonPositiveCoordinate { line, value: v });
        }
        match dim {
            None => dim = Some(p.len()),
            Some(d) if d != p.len() => {
                return Err(AmoebaError::MalformedRow { line, msg: format!("expected {d} coordinates, found {}", p.len()) })
            }
            _ => {}
        }
        points.push(p);
    }
    let dim = dim.ok_or_else(|| AmoebaError::MalformedRow { line: 0, msg: "no points".into() })?;
    Ok(PointCloud { dim, points, space: Space::Classical })
}

pub fn write_points(cloud: &PointCloud, mut w: impl Write) -> Result<()> {
    writeln!(w, "# space={}", if cloud.space == Space::Classical { "classical" } else { "log" })?;
    for p in &cloud.points {
        writeln!(w, "{}", join(p))?;
    }
    Ok(())
}

fn join(p: &[f64]) -> String {
    p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// CSV with an `origin_member` header line, then one unit vector per row.
pub fn write_directions(cloud: &DirectionCloud, mut w: impl Write) -> Result<()> {
    writeln!(w, "# origin_member={}", cloud.origin_member)?;
    let header: Vec<String> = (1..=cloud.dim).map(|i| format!("x{i}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for d in &cloud.directions {
        writeln!(w, "{}", join(d))?;
    }
    Ok(())
}

pub fn read_directions(reader: impl Read) -> Result<DirectionCloud> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| AmoebaError::MalformedRow { line: 1, msg: "empty input".into() })?;
    let origin_member = match first.trim().strip_prefix("# origin_member=") {
        Some("true") => true,
        Some("false") => false,
        _ => return Err(AmoebaError::MalformedRow { line: 1, msg: "missing origin_member header".into() }),
    };
    let (_, header) = lines.next().ok_or_else(|| AmoebaError::MalformedRow { line: 2, msg: "missing column header".into() })?;
    let dim = header.split(',').count();
    let mut directions = Vec::new();
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let d: Vec<f64> = l
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| AmoebaError::MalformedRow { line: i + 1, msg: format!("not a number: {f:?}") }))
            .collect::<Result<_>>()?;
        if d.len() != dim {
            return Err(AmoebaError::MalformedRow { line: i + 1, msg: format!("expected {dim} coordinates") });
        }
        if (sphere::norm(&d) - 1.0).abs() > 1e-9 {
            return Err(AmoebaError::MalformedRow { line: i + 1, msg: "not a unit vector".into() });
        }
        directions.push(d);
    }
    Ok(DirectionCloud { dim, directions, origin_member })
}
