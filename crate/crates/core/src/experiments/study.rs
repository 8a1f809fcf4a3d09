use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{matched_stepper, RunConfig};
use super::report::eoc;
use crate::dg::{DgFunction, DgOperator, DgSpace};
use crate::error::{Error, Result};
use crate::estimator::{builtin_entropy, estimate, CheckpointEstimate, EntropyConstants};
use crate::linalg::MAX_DIM;
use crate::mesh::Mesh1D;
use crate::ode_recon::TemporalRecon;
use crate::quadrature::gauss_rule;
use crate::spacetime::ResidualField;
use crate::time_integration::{evolve, evolve_to, DgRhs, TimeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub t: f64,
    /// Squared L² error against the exact or reference solution.
    pub error_sq: Option<f64>,
    pub estimate: CheckpointEstimate,
}

/// One discretization level. The scalar columns refer to the last checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub q: usize,
    pub flux: String,
    pub error_l2: Option<f64>,
    pub residual_l2: Option<f64>,
    pub recon_gap: Option<f64>,
    pub estimator_bound: Option<f64>,
    pub eoc_error: Option<f64>,
    pub eoc_residual: Option<f64>,
    pub in_box: Option<bool>,
    pub checkpoints: Vec<CheckpointRecord>,
    pub constants: Option<EntropyConstants>,
    /// `(slab start, sup ‖∂_x û^st‖)` per slab.
    pub sup_dx: Vec<(f64, f64)>,
    pub failure: Option<String>,
    pub assumption_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub levels: Vec<LevelReport>,
}

impl RunReport {
    pub fn assumption_violated(&self) -> bool {
        self.levels.iter().any(|l| l.assumption_violated)
    }

    pub fn failures(&self) -> impl Iterator<Item = (usize, &str)> {
        self.levels
            .iter()
            .filter_map(|l| l.failure.as_deref().map(|f| (l.level, f)))
    }
}

/// Rayon pool capped by `HYPEREST_THREADS` when set.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("HYPEREST_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("HYPEREST_THREADS = {v:?} is not a count")))?;
        builder = builder.num_threads(n.max(1));
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

struct Level {
    cells: usize,
    steps: usize,
    h: f64,
    tau: f64,
    nodes: Vec<usize>,
}

fn level_geometry(config: &RunConfig, level: usize) -> Result<Level> {
    let factor = 1usize << level;
    let cells = config.cells0()? * factor;
    let steps = config.steps0()? * factor;
    Ok(Level {
        cells,
        steps,
        h: (config.domain.1 - config.domain.0) / cells as f64,
        tau: config.tau0 / factor as f64,
        nodes: config
            .checkpoint_nodes0()?
            .into_iter()
            .map(|n| n * factor)
            .collect(),
    })
}

/// Reference states at the checkpoints, on a refined mesh.
pub struct Reference {
    pub states: Vec<DgFunction>,
}

fn compute_reference(config: &RunConfig) -> Result<Reference> {
    let rc = config
        .reference
        .ok_or_else(|| Error::Config("no reference configured".into()))?;
    let finest = level_geometry(config, config.levels - 1)?;
    let cells = finest.cells * rc.refine;
    let time_refine = rc.time_refine.unwrap_or(rc.refine);
    let steps = finest.steps * time_refine;
    let tau = finest.tau / time_refine as f64;
    let h = finest.h / rc.refine as f64;
    let q = config.q + rc.degree_increase;
    let sys = config.system.build();
    let mesh = Arc::new(Mesh1D::uniform(config.domain.0, config.domain.1, cells)?);
    let space = DgSpace::new(mesh, q, sys.dim());
    let flux = config.flux.spec(tau, h, config.initial_max_speed());
    let op = DgOperator::new(&*sys, flux, space.clone())?;
    let u0 = space.project((q + 4).min(20), |x, out| config.u0(x, out))?;
    let stepper = if rc.degree_increase == 0 {
        config.stepper
    } else {
        matched_stepper(q)
    };
    let nodes: Vec<usize> = finest.nodes.iter().map(|n| n * time_refine).collect();
    let states = evolve_to(
        &DgRhs::new(&op),
        u0.coeffs(),
        &TimeGrid::new(0.0, tau, steps),
        stepper,
        &nodes,
    )?;
    Ok(Reference {
        states: states.into_iter().map(|c| space.function(c)).collect(),
    })
}

/// `‖reference - u‖²` by quadrature on the reference mesh, which must refine
/// the mesh of `u`.
fn reference_error_sq(reference: &DgFunction, u: &DgFunction) -> Result<f64> {
    let space = reference.space();
    let mesh = space.mesh();
    let m = space.dim();
    let rule = gauss_rule((space.degree() + 4).min(20))?;
    let mut r = [0.0; MAX_DIM];
    let mut v = [0.0; MAX_DIM];
    let coarse = u.space().mesh();
    let mut total = 0.0;
    for cell in 0..mesh.cells() {
        let h = mesh.width(cell);
        // Locate the coarse cell from the fine cell's midpoint.
        let (ccell, _) = coarse.locate(mesh.map(cell, 0.0));
        for (xi, w) in rule.iter() {
            let x = mesh.map(cell, xi);
            reference.eval_cell(cell, xi, &mut r[..m]);
            let cxi = 2.0 * (x - coarse.left(ccell)) / coarse.width(ccell) - 1.0;
            u.eval_cell(ccell, cxi, &mut v[..m]);
            total += 0.5 * h * w * (0..m).map(|c| (r[c] - v[c]).powi(2)).sum::<f64>();
        }
    }
    Ok(total)
}

fn empty_level(config: &RunConfig, level: usize) -> LevelReport {
    let (h, tau) = match level_geometry(config, level) {
        Ok(g) => (g.h, g.tau),
        Err(_) => (f64::NAN, f64::NAN),
    };
    LevelReport {
        level,
        h,
        tau,
        q: config.q,
        flux: config.flux.kind.as_str().to_string(),
        error_l2: None,
        residual_l2: None,
        recon_gap: None,
        estimator_bound: None,
        eoc_error: None,
        eoc_residual: None,
        in_box: None,
        checkpoints: Vec::new(),
        constants: None,
        sup_dx: Vec::new(),
        failure: None,
        assumption_violated: false,
    }
}

fn compute_level(
    config: &RunConfig,
    level: usize,
    reference: Option<&Reference>,
) -> Result<LevelReport> {
    let geo = level_geometry(config, level)?;
    let sys = config.system.build();
    let m = sys.dim();
    let q = config.q;
    let mesh = Arc::new(Mesh1D::uniform(
        config.domain.0,
        config.domain.1,
        geo.cells,
    )?);
    let space = DgSpace::new(mesh, q, m);
    let flux = config.flux.spec(geo.tau, geo.h, config.initial_max_speed());
    let op = DgOperator::new(&*sys, flux, space.clone())?;
    let u0 = space.project((q + 4).min(20), |x, out| config.u0(x, out))?;
    let rhs = DgRhs::new(&op);
    let grid = TimeGrid::new(0.0, geo.tau, geo.steps);
    let traj = evolve(&rhs, u0.coeffs(), &grid, config.stepper)?;

    let recon = TemporalRecon::new(&traj, config.recon, Some(&rhs), None)?;
    let field = ResidualField::new(&recon, &op, config.sampling);
    let slabs = field.slabs()?;
    let pair = builtin_entropy(&config.system);
    let initial = |x: f64, out: &mut [f64]| config.u0(x, out);
    let est = estimate(
        &field,
        &slabs,
        &traj,
        &initial,
        &*pair,
        &*sys,
        &geo.nodes,
        None,
        &config.estimator,
    )?;

    let mut checkpoints = Vec::with_capacity(geo.nodes.len());
    for (i, (&node, e)) in geo.nodes.iter().zip(&est.checkpoints).enumerate() {
        let uh = space.function(traj.states[node].clone());
        let t = grid.time(node);
        let error_sq = if config.has_exact() {
            Some(uh.l2_error_sq((q + 6).min(20), |x, out| {
                config.exact(t, x, out);
            })?)
        } else if let Some(r) = reference {
            Some(reference_error_sq(&r.states[i], &uh)?)
        } else {
            None
        };
        checkpoints.push(CheckpointRecord {
            t,
            error_sq,
            estimate: *e,
        });
    }
    let last = checkpoints.last().cloned();
    let mut report = empty_level(config, level);
    report.error_l2 = last.as_ref().and_then(|c| c.error_sq).map(f64::sqrt);
    report.residual_l2 = last.as_ref().map(|c| c.estimate.residual_sq.sqrt());
    report.recon_gap = last.as_ref().map(|c| c.estimate.recon_gap_sq.sqrt());
    report.estimator_bound = last.as_ref().map(|c| c.estimate.bound);
    report.in_box = Some(est.in_box.inside);
    report.checkpoints = checkpoints;
    report.constants = Some(est.constants);
    report.sup_dx = slabs.iter().map(|s| (s.t_start, s.sup_dx)).collect();
    Ok(report)
}

/// One level of a study; module errors are recorded in the report.
pub fn run_level(config: &RunConfig, level: usize, reference: Option<&Reference>) -> LevelReport {
    match compute_level(config, level, reference) {
        Ok(r) => r,
        Err(e) => {
            let mut r = empty_level(config, level);
            r.assumption_violated = matches!(e, Error::AssumptionViolated { .. });
            if r.assumption_violated {
                r.in_box = Some(false);
            }
            r.failure = Some(e.to_string());
            r
        }
    }
}

/// Validates, runs every level and fills in the EOC columns.
pub fn run_study(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let pool = thread_pool()?;
    pool.install(|| {
        let reference = match config.reference {
            Some(_) if !config.has_exact() => Some(compute_reference(config)?),
            _ => None,
        };
        let reference = reference.as_ref();
        let mut levels: Vec<LevelReport> = if config.parallel {
            (0..config.levels)
                .into_par_iter()
                .map(|l| run_level(config, l, reference))
                .collect()
        } else {
            (0..config.levels)
                .map(|l| run_level(config, l, reference))
                .collect()
        };
        let hs: Vec<f64> = levels.iter().map(|l| l.h).collect();
        let errs: Vec<Option<f64>> = levels.iter().map(|l| l.error_l2).collect();
        let ress: Vec<Option<f64>> = levels.iter().map(|l| l.residual_l2).collect();
        for (l, (e, r)) in levels
            .iter_mut()
            .zip(eoc(&hs, &errs).into_iter().zip(eoc(&hs, &ress)))
        {
            l.eoc_error = e.eoc;
            l.eoc_residual = r.eoc;
        }
        Ok(RunReport {
            config: config.clone(),
            levels,
        })
    })
}
