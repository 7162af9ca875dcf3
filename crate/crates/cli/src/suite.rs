//! The worked-example suite behind `paper-suite`.

use std::path::Path;
use std::time::Duration;

use crate::checks::{self, DIRECTION_TOL};
use crate::fixtures;

/// Tropicalization shared by the three circles.
pub const CIRCLE_TROPICAL: &str = "max(2*x1,2*x2,0) = max(x1,x2)";

#[derive(Debug, Clone)]
pub struct Row {
    pub id: String,
    pub passed: bool,
    pub detail: String,
    pub csv: String,
}

impl Row {
    fn new(id: &str, passed: bool, detail: String, csv: String) -> Self {
        Row { id: id.to_string(), passed, detail, csv }
    }

    fn error(id: &str, msg: String) -> Self {
        Row::new(id, false, format!("error: {msg}"), format!("# error: {msg}\n"))
    }

    /// File name of the row's CSV output.
    pub fn file_name(&self) -> String {
        let slug: String = self.id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '-' }).collect();
        let slug = slug.split('-').filter(|s| !s.is_empty()).collect::<Vec<_>>().join("-");
        format!("{slug}.csv")
    }
}

pub const ROW_IDS: [&str; 17] = [
    "pow",
    "circle r=3/2",
    "circle r=5/2",
    "circle r=7/2",
    "cubic",
    "umbrella",
    "sin",
    "exp",
    "sininv",
    "basic-cone N=(2)",
    "basic-cone N=(2,3)",
    "cells",
    "sandwich",
    "valuation",
    "dual-fan",
    "exact-cubic",
    "patchwork",
];

/// Rows selected by `only`: an id, or the part of an id before its first
/// space (`circle`, `basic-cone`).
pub fn select(only: Option<&str>) -> Result<Vec<&'static str>, String> {
    let Some(only) = only else { return Ok(ROW_IDS.to_vec()) };
    let rows: Vec<&str> = ROW_IDS.iter().copied().filter(|id| *id == only || id.split(' ').next() == Some(only)).collect();
    if rows.is_empty() {
        return Err(format!("unknown fixture {only:?}; known: {}", ROW_IDS.join(", ")));
    }
    Ok(rows)
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn formula_row(fx: fixtures::FormulaFixture) -> Row {
    let id = fx.id.clone();
    let r = match checks::run_formula(&fx) {
        Ok(r) => r,
        Err(e) => return Row::error(&id, e),
    };
    let est = &r.base.estimate.estimate;
    let shape = if id == "circle r=3/2" {
        est.directions.is_empty() && est.origin_member && r.base.estimate.samples_per_t.iter().any(|&n| n > 0)
    } else {
        r.base.hausdorff <= DIRECTION_TOL
    };
    let dequant_ok = !id.starts_with("circle") || r.dequantized == CIRCLE_TROPICAL;
    let time_ok = id != "pow" || r.base.elapsed <= Duration::from_secs(30);
    let mut detail = format!(
        "H={:.4} directions={} containment={:.4}<={:.2}",
        r.base.hausdorff,
        est.len(),
        r.containment,
        r.containment_tol
    );
    if let Some(g) = r.strict_gap {
        detail.push_str(&format!(" strict_gap={g:.3}"));
    }
    if id.starts_with("circle") {
        detail.push_str(&format!(" phi_0: {}", r.dequantized));
    }
    detail.push_str(&format!(" time={}", secs(r.base.elapsed)));
    Row::new(&id, shape && dequant_ok && time_ok && r.containment_ok(), detail, r.base.csv())
}

fn cloud_row(fx: fixtures::CloudFixture) -> Row {
    match checks::run_cloud(&fx) {
        Ok(r) => Row::new(
            &fx.id,
            r.hausdorff <= DIRECTION_TOL,
            format!("H={:.4} points={} directions={} time={}", r.hausdorff, fx.cloud.len(), r.estimate.estimate.len(), secs(r.elapsed)),
            r.csv(),
        ),
        Err(e) => Row::error(&fx.id, e),
    }
}

pub fn run_row(id: &str, seed: u64) -> Row {
    match id {
        "pow" => formula_row(fixtures::pow(seed)),
        "cubic" => formula_row(fixtures::cubic(seed)),
        _ if id.starts_with("circle r=") => {
            let label = &id["circle r=".len()..];
            match fixtures::CIRCLE_RADII.iter().find(|(l, _)| *l == label) {
                Some((l, r)) => formula_row(fixtures::circle(l, *r, seed)),
                None => Row::error(id, "unknown radius".into()),
            }
        }
        "umbrella" => match checks::umbrella(seed) {
            Ok(u) => Row::new(
                id,
                u.passed(),
                format!(
                    "ray_in_2cell={} spread={:.4} H={:.4} gap_to_(-1,0,1)={:.3}",
                    u.ray_in_two_cell, u.spread, u.base.hausdorff, u.fan_gap
                ),
                u.base.csv(),
            ),
            Err(e) => Row::error(id, e),
        },
        "sin" => cloud_row(fixtures::sin(seed)),
        "exp" => cloud_row(fixtures::exp(seed)),
        "sininv" => cloud_row(fixtures::sininv(seed)),
        "basic-cone N=(2)" => cloud_row(fixtures::basic_cone_fixture(&[2], seed)),
        "basic-cone N=(2,3)" => cloud_row(fixtures::basic_cone_fixture(&[2, 3], seed)),
        "cells" => match checks::cells_vs_evaluation(seed, 10) {
            Ok(c) => Row::new(id, c.disagreements == 0, format!("atoms={} points={} disagreements={}", c.atoms.len(), c.checked, c.disagreements), c.csv()),
            Err(e) => Row::error(id, e),
        },
        "sandwich" => match checks::sandwich(seed, 1000, 100) {
            Ok(s) => Row::new(
                id,
                s.upper_violations == 0 && s.two_sided_violations == 0,
                format!(
                    "evaluations={} upper={} two_sided={} lower(U_0<=U_t)={} (all with a parameter < 1: {})",
                    s.evaluations,
                    s.upper_violations,
                    s.two_sided_violations,
                    s.lower_violations,
                    s.failures_explained()
                ),
                s.csv(),
            ),
            Err(e) => Row::error(id, e),
        },
        "valuation" => {
            let v = checks::valuation(seed, 1000);
            Row::new(id, v.violations() == 0, format!("cases={} violations={}", v.cases, v.violations()), v.csv())
        }
        "dual-fan" => match checks::dual_fan_vs_oracle(seed, 10, 10_000) {
            Ok(d) => Row::new(
                id,
                d.mismatches == 0,
                format!("supports={} directions={} mismatches={}", d.supports.len(), d.directions, d.mismatches),
                d.csv(),
            ),
            Err(e) => Row::error(id, e),
        },
        "exact-cubic" => match checks::exact_cubic(seed) {
            Ok(e) => Row::new(
                id,
                e.passed(),
                format!(
                    "h={} psi_disagreements={} phi_disagreements={} (half-line points {})",
                    e.threshold,
                    e.psi_disagreements,
                    e.plain_disagreements.len(),
                    e.half_line_points
                ),
                e.csv(),
            ),
            Err(e) => Row::error(id, e),
        },
        "patchwork" => match checks::patchwork() {
            Ok(p) => Row::new(
                id,
                p.passed(),
                format!("Log(root)={:.5} yes@-1={} no@0={}", p.log_root, p.yes_at_minus_one, p.no_at_zero),
                p.csv(),
            ),
            Err(e) => Row::error(id, e),
        },
        _ => Row::error(id, "unknown fixture".into()),
    }
}

/// Runs the selected rows, writing each row's CSV to `out` when given.
pub fn run(seed: u64, only: Option<&str>, out: Option<&Path>) -> Result<Vec<Row>, String> {
    let ids = select(only)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
    }
    let mut rows = Vec::new();
    for id in ids {
        let row = run_row(id, seed);
        if let Some(dir) = out {
            let path = dir.join(row.file_name());
            std::fs::write(&path, &row.csv).map_err(|e| format!("{}: {e}", path.display()))?;
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn table(rows: &[Row]) -> String {
    let w = rows.iter().map(|r| r.id.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in rows {
        out.push_str(&format!("{:<w$}  {}  {}\n", r.id, if r.passed { "PASS" } else { "FAIL" }, r.detail));
    }
    let passed = rows.iter().filter(|r| r.passed).count();
    out.push_str(&format!("{passed}/{} passed\n", rows.len()));
    out
}
