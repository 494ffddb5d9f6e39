//! Built-in example sweeps.

use clap::ValueEnum;
use lipopsys::catalog::{flattening_triangle, tail_weighted, two_by_two};
use lipopsys::convex::SolverConfig;
use lipopsys::cstar::{limit_system, state_space_shape, LimitOptions, SeminormFamily};
use lipopsys::linalg::{pauli, BlockMatrix, C64};
use lipopsys::metric::BridgePair;
use lipopsys::opsys::{MatrixStar, OperatorSubsystem};
use lipopsys::seminorm::{LipNormedSystem, SeminormSpec};
use rayon::prelude::*;

use crate::output::OutDir;
use crate::report::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Example {
    TwoByTwo,
    FlatteningTriangle,
    TailWeighted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Radius,
    DistBound,
    EpsilonCurve,
    Leibniz,
    LimitSystem,
    Shape,
}

pub const ALL_STAGES: [Stage; 6] = [Stage::Radius, Stage::DistBound, Stage::EpsilonCurve, Stage::Leibniz, Stage::LimitSystem, Stage::Shape];

/// Member of the family at `n` with everything the pipeline needs.
struct Instance {
    system: OperatorSubsystem,
    lip: SeminormSpec,
    bridge: BridgePair,
    eps_witnesses: Vec<Vec<C64>>,
    leibniz_pairs: Vec<(Vec<C64>, Vec<C64>)>,
}

pub struct Sweep {
    pub example: Example,
    pub ns: Vec<f64>,
    pub cutoff: usize,
    pub grid: Vec<f64>,
    pub n_tail: f64,
    pub mesh: usize,
}

impl Example {
    pub fn id(self) -> &'static str {
        match self {
            Example::TwoByTwo => "two-by-two",
            Example::FlatteningTriangle => "flattening-triangle",
            Example::TailWeighted => "tail-weighted",
        }
    }

    pub fn default_ns(self) -> Vec<f64> {
        match self {
            Example::TailWeighted => vec![2.0, 4.0, 8.0, 16.0],
            _ => vec![1.0, 2.0, 4.0, 8.0],
        }
    }

    fn instance(self, n: f64, k: usize) -> Instance {
        match self {
            Example::TwoByTwo => {
                let e = two_by_two::e12();
                let ea: Vec<C64> = e.iter().map(|z| z.conj()).collect();
                Instance { system: two_by_two::system(), lip: two_by_two::lip(n), bridge: two_by_two::bridge(n), eps_witnesses: vec![e.clone()], leibniz_pairs: vec![(ea, e)] }
            }
            Example::FlatteningTriangle => {
                let w = flattening_triangle::witness();
                Instance {
                    system: flattening_triangle::system(),
                    lip: flattening_triangle::lip(n),
                    bridge: flattening_triangle::bridge(n),
                    eps_witnesses: vec![w.clone()],
                    leibniz_pairs: vec![(w.clone(), w)],
                }
            }
            Example::TailWeighted => Instance {
                system: tail_weighted::system(k),
                lip: tail_weighted::lip(k, n),
                bridge: tail_weighted::bridge(k, n),
                eps_witnesses: vec![tail_weighted::witness(k)],
                leibniz_pairs: vec![(tail_weighted::witness_adjoint(k), tail_weighted::witness(k))],
            },
        }
    }

    fn family(self, ns: Vec<f64>, k: usize) -> SeminormFamily {
        match self {
            Example::TwoByTwo => two_by_two::family(ns),
            Example::FlatteningTriangle => flattening_triangle::family(ns),
            Example::TailWeighted => tail_weighted::family(k, ns),
        }
    }

    /// Systems whose state spaces are projected, with the projection coordinates.
    fn shapes(self, limit: &OperatorSubsystem, k: usize) -> Vec<(String, OperatorSubsystem, Option<Vec<BlockMatrix>>)> {
        match self {
            Example::TwoByTwo => vec![("limit".into(), limit.clone(), Some(two_by_two::e12_plane()))],
            Example::FlatteningTriangle => {
                let c3 = OperatorSubsystem::full(MatrixStar::new(vec![1, 1, 1]).expect("valid blocks"));
                vec![("full".into(), c3, None), ("limit".into(), limit.clone(), None)]
            }
            Example::TailWeighted => {
                // (σx/2, σy/2) in the first block
                let [_, sx, sy] = pauli();
                let at = |m: lipopsys::linalg::CMat| {
                    let mut blocks = vec![lipopsys::linalg::CMat::zeros(2, 2); k];
                    blocks[0] = m * C64::new(0.5, 0.0);
                    BlockMatrix::from_blocks(blocks)
                };
                vec![("limit_block_1".into(), limit.clone(), Some(vec![at(sx), at(sy)]))]
            }
        }
    }
}

fn label(n: f64) -> String {
    format!("{n}")
}

pub fn run(s: &Sweep, stages: &[Stage], out: &OutDir, cfg: &SolverConfig) -> Res<()> {
    let dir = out.sub(s.example.id())?;
    let insts: Vec<(f64, Instance)> = s.ns.iter().map(|&n| (n, s.example.instance(n, s.cutoff))).collect();
    let members = || -> Res<Vec<LipNormedSystem>> {
        insts.par_iter().map(|(_, i)| LipNormedSystem::new(i.system.clone(), i.lip.clone(), cfg).map_err(err)).collect()
    };
    let needs_members = stages.iter().any(|s| matches!(s, Stage::Radius | Stage::EpsilonCurve | Stage::Leibniz));
    let xs = if needs_members { members()? } else { vec![] };
    if stages.contains(&Stage::Radius) {
        let mut t = radius_table();
        for ((n, _), x) in insts.iter().zip(&xs) {
            t.push(radius_row(label(*n), x.radius()));
        }
        dir.csv("radius.csv", &t)?;
    }
    if stages.contains(&Stage::DistBound) {
        let rows: Vec<Vec<Vec<String>>> = insts.par_iter().map(|(n, i)| dist_rows(&label(*n), &i.bridge, s.mesh, cfg)).collect::<Res<_>>()?;
        let mut t = dist_table();
        rows.into_iter().flatten().for_each(|r| t.push(r));
        dir.csv("dist_bound.csv", &t)?;
        let bridges: Vec<&SeminormSpec> = insts.iter().map(|(_, i)| &i.bridge.bridge).collect();
        dir.json("bridges.json", &bridges)?;
    }
    if stages.contains(&Stage::EpsilonCurve) {
        let curves = insts
            .par_iter()
            .zip(xs.par_iter())
            .map(|((n, i), x)| curve(x, s.example.id(), &s.grid, &i.eps_witnesses, cfg).map(|c| eps_rows(&label(*n), &c)))
            .collect::<Res<Vec<_>>>()?;
        let mut t = eps_table();
        curves.into_iter().flatten().for_each(|r| t.push(r));
        dir.csv("eps.csv", &t)?;
    }
    if stages.contains(&Stage::Leibniz) {
        let res = insts
            .par_iter()
            .zip(xs.par_iter())
            .map(|((n, i), x)| leibniz(x, &label(*n), &i.leibniz_pairs, 0, None, cfg))
            .collect::<Res<Vec<_>>>()?;
        let mut t = leibniz_table();
        let mut recs = Vec::new();
        for (row, rec) in res {
            t.push(row);
            recs.push(rec);
        }
        dir.csv("leibniz.csv", &t)?;
        dir.json("leibniz.json", &recs)?;
    }
    let wants_limit = stages.contains(&Stage::LimitSystem) || stages.contains(&Stage::Shape);
    if wants_limit {
        let opts = LimitOptions { n_tail: Some(s.n_tail), ..LimitOptions::default() };
        let v = limit_system(&s.example.family(s.ns.clone(), s.cutoff), &opts, cfg).map_err(err)?;
        if stages.contains(&Stage::LimitSystem) {
            dir.json("limit.json", &LimitRecord::from(&v))?;
        }
        if stages.contains(&Stage::Shape) {
            let recs = s
                .example
                .shapes(&v.limit_subspace, s.cutoff)
                .into_iter()
                .map(|(name, sys, coords)| state_space_shape(&sys, 64, coords.as_deref()).map(|report| ShapeRecord { system: name, report }).map_err(err))
                .collect::<Res<Vec<_>>>()?;
            dir.json("shape.json", &recs)?;
        }
    }
    Ok(())
}
