//! `lipopsys`: command-line front end.

mod config;
mod examples;
mod output;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use lipopsys::convex::SolverConfig;
use lipopsys::cstar::{limit_system, state_space_shape, LimitOptions};
use lipopsys::metric::{hausdorff_states, rho_states, rho_ucp};
use lipopsys::seminorm::LipNormedSystem;

use config::{matrix_state, InstanceConfig, Task};
use examples::{Example, Stage, Sweep, ALL_STAGES};
use output::{OutDir, Table};
use report::*;

/// `r0:r1:steps`, evenly spaced and inclusive.
#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(format!("expected r0:r1:steps, got `{s}`"));
        };
        let a: f64 = a.parse().map_err(|e| format!("r0: {e}"))?;
        let b: f64 = b.parse().map_err(|e| format!("r1: {e}"))?;
        let k: usize = k.parse().map_err(|e| format!("steps: {e}"))?;
        if !(a > 0.0 && b >= a && k >= 1) || (k == 1 && a != b) {
            return Err("need 0 < r0 ≤ r1 and steps ≥ 1 (steps = 1 only when r0 = r1)".into());
        }
        if k == 1 {
            return Ok(Grid(vec![a]));
        }
        Ok(Grid((0..k).map(|i| a + (b - a) * i as f64 / (k - 1) as f64).collect()))
    }
}

#[derive(Parser, Debug)]
#[command(name = "lipopsys", version, about = "Lip-normed operator systems: radii, state metrics, bridge bounds, epsilon curves")]
struct Cli {
    /// Instance file (system, seminorm, solver, tasks).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "LIPOPSYS_OUT", default_value = "lipopsys-out")]
    out: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance of support solves.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Family parameters, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<f64>,
    /// Truncation length of the tail-weighted example.
    #[arg(long, global = true, default_value_t = 64)]
    cutoff: usize,
    #[arg(long, global = true, default_value = "0.5:4:8")]
    grid: Grid,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Radius enclosure of the configured system.
    Radius,
    /// `ρ_L` on `rho` and `rho_ucp` tasks.
    Rho,
    /// Hausdorff bounds on `bridge` tasks.
    Hausdorff {
        #[arg(long, default_value_t = 16)]
        mesh: usize,
    },
    /// Distance bounds on `bridge` tasks.
    DistBound {
        #[arg(long, default_value_t = 0)]
        mesh: usize,
    },
    /// ε-curve over `--grid`.
    EpsilonCurve,
    /// Leibniz ratio lower bounds and the f-Leibniz test on `leibniz` tasks.
    Leibniz,
    /// Limit subspace of the `family` task.
    LimitSystem {
        #[arg(long, default_value_t = 256.0)]
        r_tail: f64,
    },
    /// State-space shape from `shape` tasks, or the default projection.
    Shape,
    /// Full pipeline on a built-in family.
    Example {
        name: Example,
        /// Stages to run; all when omitted.
        stages: Vec<Stage>,
        #[arg(long, default_value_t = 1e4)]
        n_tail: f64,
        /// Extreme-state mesh for Hausdorff lower bounds; 0 skips them.
        #[arg(long, default_value_t = 0)]
        mesh: usize,
    },
}

fn solver(cli: &Cli, base: SolverConfig) -> SolverConfig {
    let mut cfg = base;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.tol {
        cfg.support_tol = t;
    }
    cfg
}

fn instance(cli: &Cli) -> Res<InstanceConfig> {
    let p = cli.config.as_ref().ok_or("this command needs --config PATH")?;
    config::load(p)
}

fn no_tasks(kind: &str) -> String {
    format!("config has no `{kind}` task")
}

fn run(cli: &Cli) -> Res<()> {
    let out = OutDir::create(cli.out.clone())?;
    if let Cmd::Example { name, stages, n_tail, mesh } = &cli.cmd {
        let ns = if cli.n.is_empty() { name.default_ns() } else { cli.n.clone() };
        let stages = if stages.is_empty() { ALL_STAGES.to_vec() } else { stages.clone() };
        let sweep = Sweep { example: *name, ns, cutoff: cli.cutoff, grid: cli.grid.0.clone(), n_tail: *n_tail, mesh: *mesh };
        return examples::run(&sweep, &stages, &out, &solver(cli, SolverConfig::default()));
    }
    let inst = instance(cli)?;
    let cfg = solver(cli, inst.solver.clone());
    let x = LipNormedSystem::new(inst.system.clone(), inst.seminorm.clone(), &cfg).map_err(err)?;
    match &cli.cmd {
        Cmd::Radius => {
            let mut t = radius_table();
            t.push(radius_row("-".into(), x.radius()));
            out.csv("radius.csv", &t)
        }
        Cmd::Rho => {
            let mut t = rho_table();
            let mut any = false;
            for (i, task) in inst.tasks.iter().enumerate() {
                match task {
                    Task::Rho { pairs } => {
                        any = true;
                        for (j, (a, b)) in pairs.iter().enumerate() {
                            let at = format!("tasks[{i}].pairs[{j}]");
                            let (w1, w2) = (inst.state(a, &at)?, inst.state(b, &at)?);
                            let r = rho_states(&x, &w1, &w2, &cfg).map_err(err)?;
                            let (lo, hi) = solve_bounds(&r);
                            t.push(rho_row(i, j, 1, lo, hi, r.status));
                        }
                    }
                    Task::RhoUcp { phi, psi } => {
                        any = true;
                        let phi = matrix_state(phi, &format!("tasks[{i}].phi"))?;
                        let psi = matrix_state(psi, &format!("tasks[{i}].psi"))?;
                        let h = rho_ucp(&x, &phi, &psi, &cfg).map_err(err)?;
                        t.push(rho_row(i, 0, phi.p, h.lower, h.upper, h.status));
                    }
                    _ => {}
                }
            }
            if !any {
                return Err(no_tasks("rho"));
            }
            out.csv("rho.csv", &t)
        }
        Cmd::Hausdorff { mesh } | Cmd::DistBound { mesh } => {
            let pairs = inst.tasks_where(|i, t| match t {
                Task::Bridge { right, bridge, embed } => Some(inst.bridge_pair(right, bridge, embed, &format!("tasks[{i}]")).map(|p| (i, p))),
                _ => None,
            });
            if pairs.is_empty() {
                return Err(no_tasks("bridge"));
            }
            let pairs = pairs.into_iter().collect::<Res<Vec<_>>>()?;
            if matches!(cli.cmd, Cmd::Hausdorff { .. }) {
                let mut t = Table::new(&["task", "lower", "upper", "status"]);
                for (i, p) in &pairs {
                    t.push(hausdorff_row(*i, &hausdorff_states(p, *mesh, &cfg).map_err(err)?));
                }
                out.csv("hausdorff.csv", &t)?;
            } else {
                let mut t = dist_table();
                for (i, p) in &pairs {
                    dist_rows(&i.to_string(), p, *mesh, &cfg)?.into_iter().for_each(|r| t.push(r));
                }
                out.csv("dist_bound.csv", &t)?;
            }
            let echo: Vec<_> = pairs.iter().map(|(_, p)| &p.bridge).collect();
            out.json("bridges.json", &echo)
        }
        Cmd::EpsilonCurve => {
            let w: Vec<_> = inst.tasks_where(|_, t| match t {
                Task::Epsilon { witnesses } => Some(witnesses.clone()),
                _ => None,
            });
            let w = w.concat();
            let c = curve(&x, "config", &cli.grid.0, &w, &cfg)?;
            let mut t = eps_table();
            eps_rows("-", &c).into_iter().for_each(|r| t.push(r));
            out.csv("eps.csv", &t)
        }
        Cmd::Leibniz => {
            let mut t = leibniz_table();
            let mut recs = Vec::new();
            for (i, task) in inst.tasks.iter().enumerate() {
                if let Task::Leibniz { pairs, samples, r0 } = task {
                    let (row, rec) = leibniz(&x, &i.to_string(), pairs, *samples, *r0, &cfg)?;
                    t.push(row);
                    recs.push(rec);
                }
            }
            if recs.is_empty() {
                return Err(no_tasks("leibniz"));
            }
            out.csv("leibniz.csv", &t)?;
            out.json("leibniz.json", &recs)
        }
        Cmd::LimitSystem { r_tail } => {
            let fam = inst.tasks_where(|_, t| match t {
                Task::Family { blowups, params, witnesses } => Some(inst.family(blowups, params, witnesses)),
                _ => None,
            });
            let f = fam.into_iter().next().ok_or_else(|| no_tasks("family"))?;
            let opts = LimitOptions { r_tail: *r_tail, ..LimitOptions::default() };
            let v = limit_system(&f, &opts, &cfg).map_err(err)?;
            out.json("limit.json", &LimitRecord::from(&v))
        }
        Cmd::Shape => {
            let mut tasks = inst.tasks_where(|_, t| match t {
                Task::Shape { directions, coords } => Some((*directions, coords.clone())),
                _ => None,
            });
            if tasks.is_empty() {
                tasks.push((64, None));
            }
            let recs = tasks
                .iter()
                .enumerate()
                .map(|(i, (d, c))| state_space_shape(&inst.system, *d, c.as_deref()).map(|report| ShapeRecord { system: format!("task {i}"), report }).map_err(err))
                .collect::<Res<Vec<_>>>()?;
            out.json("shape.json", &recs)
        }
        Cmd::Example { .. } => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
