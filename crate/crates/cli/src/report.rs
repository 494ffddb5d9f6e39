//! Rows and records shared by the instance commands and the built-in examples.

use lipopsys::convex::{SolveResult, SolverConfig, Status};
use lipopsys::cstar::{epsilon_curve, f_leibniz_equivalence_check, leibniz_constant_lower, EpsCurve, EpsOptions, LeibnizVerdict, LimitVerdict, ShapeReport};
use lipopsys::linalg::{BlockMatrix, C64};
use lipopsys::metric::{coupling_defect, hausdorff_states, BridgePair, HausdorffBound};
use lipopsys::seminorm::{LipNormedSystem, RadiusBound};
use serde::Serialize;

use crate::output::{num, Table};

pub type Res<T> = Result<T, String>;

pub fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn radius_row(label: String, r: &RadiusBound) -> Vec<String> {
    vec![label, num(r.lower), num(r.upper), r.method.clone(), r.status.as_str().into()]
}

pub fn radius_table() -> Table {
    Table::new(&["n", "lower", "upper", "method", "status"])
}

pub fn rho_row(task: usize, item: usize, level: usize, lower: f64, upper: f64, status: Status) -> Vec<String> {
    vec![task.to_string(), item.to_string(), level.to_string(), num(lower), num(upper), status.as_str().into()]
}

pub fn rho_table() -> Table {
    Table::new(&["task", "item", "level", "lower", "upper", "status"])
}

pub fn solve_bounds(r: &SolveResult) -> (f64, f64) {
    (r.value, r.upper())
}

pub fn dist_table() -> Table {
    Table::new(&["n", "bound_kind", "value", "witness_id", "status"])
}

/// Upper row from the coupling defect, lower row from sampled extreme states.
pub fn dist_rows(label: &str, pair: &BridgePair, mesh: usize, cfg: &SolverConfig) -> Res<Vec<Vec<String>>> {
    let d = coupling_defect(pair, cfg).map_err(err)?;
    let mut rows = vec![vec![label.into(), "upper".into(), num(d.upper), d.method.clone(), d.status.as_str().into()]];
    if mesh > 0 {
        let h = hausdorff_states(pair, mesh, cfg).map_err(err)?;
        rows.push(vec![label.into(), "lower".into(), num(h.lower), "extreme_states".into(), h.status.as_str().into()]);
    }
    rows.push(vec![label.into(), "defect_lower".into(), num(d.lower), d.method, d.status.as_str().into()]);
    Ok(rows)
}

pub fn hausdorff_row(task: usize, h: &HausdorffBound) -> Vec<String> {
    vec![task.to_string(), num(h.lower), num(h.upper), h.status.as_str().into()]
}

pub fn eps_table() -> Table {
    Table::new(&["system", "n", "r", "eps_lower", "eps_upper", "status"])
}

pub fn eps_rows(label: &str, c: &EpsCurve) -> Vec<Vec<String>> {
    c.points.iter().map(|p| vec![c.system_id.clone(), label.into(), num(p.r), num(p.lower), num(p.upper), p.status.as_str().into()]).collect()
}

pub fn curve(x: &LipNormedSystem, id: &str, grid: &[f64], witnesses: &[Vec<C64>], cfg: &SolverConfig) -> Res<EpsCurve> {
    let opts = EpsOptions { witnesses: witnesses.to_vec(), ..EpsOptions::default() };
    epsilon_curve(x, id, grid, &opts, cfg).map_err(err)
}

pub fn leibniz_table() -> Table {
    Table::new(&["n", "ratio_lower", "r0", "verdict", "status"])
}

#[derive(Serialize)]
pub struct LeibnizRecord {
    pub n: String,
    pub ratio_lower: f64,
    pub r0: f64,
    pub verdict: LeibnizVerdict,
}

/// The f-Leibniz test runs at `r0`, by default half the witnessed ratio.
pub fn leibniz(
    x: &LipNormedSystem,
    label: &str,
    pairs: &[(Vec<C64>, Vec<C64>)],
    samples: usize,
    r0: Option<f64>,
    cfg: &SolverConfig,
) -> Res<(Vec<String>, LeibnizRecord)> {
    let l = leibniz_constant_lower(x, pairs, samples, cfg.seed).map_err(err)?;
    let r0 = r0.unwrap_or(0.5 * l.value.max(1.0));
    let witnesses: Vec<Vec<C64>> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    let verdict = f_leibniz_equivalence_check(x, r0, &witnesses, samples.min(50), cfg).map_err(err)?;
    let (name, status) = match verdict.holds() {
        Some(true) => ("holds", Status::Converged),
        Some(false) => ("fails", Status::Converged),
        None => ("inconclusive", Status::GapOpen),
    };
    let row = vec![label.into(), num(l.value), num(r0), name.into(), status.as_str().into()];
    Ok((row, LeibnizRecord { n: label.into(), ratio_lower: l.value, r0, verdict }))
}

#[derive(Serialize)]
pub struct LimitRecord {
    pub subspace_basis: Vec<BlockMatrix>,
    pub embedding: Vec<Vec<f64>>,
    pub inherited: bool,
    pub defect: f64,
    pub defect_witness_pair: (usize, usize),
    pub defect_witness_residual: f64,
    pub eps_tail: f64,
    pub eps_tail_lower: f64,
    pub r_tail: f64,
    pub n_tail: f64,
    pub warnings: Vec<String>,
}

impl From<&LimitVerdict> for LimitRecord {
    fn from(v: &LimitVerdict) -> Self {
        let e = &v.embedding;
        LimitRecord {
            subspace_basis: v.limit_subspace.basis().to_vec(),
            embedding: (0..e.nrows()).map(|i| e.row(i).iter().copied().collect()).collect(),
            inherited: v.inherited,
            defect: v.defect.defect,
            defect_witness_pair: v.defect.witness_pair,
            defect_witness_residual: v.defect.witness_residual,
            eps_tail: v.eps_tail,
            eps_tail_lower: v.eps_tail_lower,
            r_tail: v.r_tail,
            n_tail: v.n_tail,
            warnings: v.warnings.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct ShapeRecord {
    pub system: String,
    #[serde(flatten)]
    pub report: ShapeReport,
}
