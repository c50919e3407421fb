//! Study orchestration: configuration, the assemble/solve/measure pipeline,
//! the manufactured-solution convergence study and the preconditioner
//! benchmark.

mod table;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::{convergence_orders, FieldSolution, SolveReport};
use crate::assembly::{benchmark_case, manufactured_case, BlockSystem, PhysicsCase};
use crate::fe::Spaces;
use crate::linalg::{fgmres, KrylovConfig};
use crate::mesh::TetMesh;
use crate::precon::{BlockPreconditioner, InnerConfig, InnerSolver};
use crate::{Error, Result};

pub use table::{emit_table, Cell, Table, TableFormat};

pub const CONVERGENCE_COLUMNS: [&str; 10] = [
    "level", "h", "err_J_hdiv", "order_J", "err_phi_l2", "order_phi", "err_A_hcurl", "order_A", "div_J_l2", "iters",
];

pub const BENCHMARK_COLUMNS: [&str; 10] =
    ["level", "h", "dofs_J", "dofs_phi", "dofs_A", "dofs_r", "rm", "iters", "helicity", "r_norm"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyKind {
    #[default]
    Convergence,
    Benchmark,
    SingleSolve,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseKind {
    /// Smooth manufactured solution with known exact fields.
    #[default]
    Manufactured,
    /// Rotating-flow cavity with an applied field and zero sources.
    Benchmark,
}

impl std::str::FromStr for CaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "manufactured" => Ok(CaseKind::Manufactured),
            "benchmark" => Ok(CaseKind::Benchmark),
            other => Err(Error::Config(format!("unknown case {other:?}, expected manufactured or benchmark"))),
        }
    }
}

/// Inner solver per diagonal block of the preconditioner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlockSolvers {
    pub l: InnerSolver,
    pub fw_hat: InnerSolver,
    pub q_hat: InnerSolver,
    pub m_hat: InnerSolver,
}

impl Default for BlockSolvers {
    fn default() -> Self {
        Self::uniform(InnerSolver::Krylov)
    }
}

impl BlockSolvers {
    pub fn uniform(kind: InnerSolver) -> Self {
        Self { l: kind, fw_hat: kind, q_hat: kind, m_hat: kind }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub study: StudyKind,
    /// Case of a single solve; the two studies fix their own.
    pub case: CaseKind,
    /// Mesh levels, strictly increasing. Level `k` is `T_{k+1}`.
    pub levels: Vec<u32>,
    /// `None` selects `[50, 100, 200]` for the benchmark and `[1]` otherwise.
    pub rm: Option<Vec<f64>>,
    pub sigma: f64,
    /// Relative FGMRES tolerance.
    pub tol: f64,
    /// Relative tolerance of the tolerance-driven inner solves.
    pub inner_tol: f64,
    pub inner: BlockSolvers,
    /// CG steps of the fixed-iteration `Q̂` solve.
    pub q_iterations: usize,
    pub restart: usize,
    pub max_iter: usize,
    pub inner_max_iter: usize,
    pub out: Option<PathBuf>,
    pub format: TableFormat,
    /// Directory receiving Matrix Market dumps of every assembled system.
    pub dump_system: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            study: StudyKind::Convergence,
            case: CaseKind::Manufactured,
            levels: vec![0, 1, 2],
            rm: None,
            sigma: 1.0,
            tol: 1e-10,
            inner_tol: 1e-3,
            inner: BlockSolvers::default(),
            q_iterations: 5,
            restart: 200,
            max_iter: 1000,
            inner_max_iter: 5000,
            out: None,
            format: TableFormat::Csv,
            dump_system: None,
        }
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.levels.is_empty() {
            return bad("levels must be nonempty".into());
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("levels must be strictly increasing, got {:?}", self.levels));
        }
        for (name, v) in [("tol", self.tol), ("inner_tol", self.inner_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        let rm = self.rm_values();
        if rm.is_empty() || rm.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return bad(format!("rm values must be positive, got {rm:?}"));
        }
        if self.study != StudyKind::Benchmark && rm.len() != 1 {
            return bad(format!("{:?} takes a single rm value, got {rm:?}", self.study));
        }
        if self.restart == 0 || self.max_iter == 0 || self.q_iterations == 0 || self.inner_max_iter == 0 {
            return bad("restart, max_iter, inner_max_iter and q_iterations must be positive".into());
        }
        Ok(())
    }

    pub fn rm_values(&self) -> Vec<f64> {
        match (&self.rm, self.study) {
            (Some(v), _) => v.clone(),
            (None, StudyKind::Benchmark) => vec![50.0, 100.0, 200.0],
            (None, _) => vec![1.0],
        }
    }

    pub fn inner_config(&self) -> InnerConfig {
        InnerConfig {
            l: self.inner.l,
            fw_hat: self.inner.fw_hat,
            q_hat: self.inner.q_hat,
            m_hat: self.inner.m_hat,
            tol: self.inner_tol,
            q_iterations: self.q_iterations,
            max_iter: self.inner_max_iter,
        }
    }

    pub fn outer_config(&self) -> KrylovConfig {
        KrylovConfig { rel_tol: self.tol, max_iter: self.max_iter, restart: self.restart, fixed_iterations: None }
    }

    pub fn build_case(&self, kind: CaseKind, rm: f64) -> PhysicsCase {
        match kind {
            CaseKind::Manufactured => manufactured_case(self.sigma, rm),
            CaseKind::Benchmark => benchmark_case(self.sigma, rm),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub report: SolveReport,
    /// Final FGMRES iterate; `None` when the solve failed outright.
    pub solution: Option<FieldSolution>,
}

/// Assembles, solves with FGMRES preconditioned by `P`, and measures.
/// Outer non-convergence and inner-solver failures are recorded in the
/// report; assembly and measurement errors are returned.
pub fn solve_case(spaces: &Spaces, case: &PhysicsCase, cfg: &StudyConfig) -> Result<SolveOutcome> {
    let start = Instant::now();
    case.validate()?;
    let sys = BlockSystem::assemble(spaces, case)?;
    let level = spaces.mesh.level().unwrap_or(0);
    if let Some(dir) = &cfg.dump_system {
        sys.export_matrix_market(&dir.join(format!("{}-level{level}", case.name)))?;
    }
    let mut report = SolveReport {
        level,
        h: spaces.mesh.mesh_size(),
        dofs: spaces.dof_counts(),
        rm: case.rm,
        sigma: case.sigma,
        ..SolveReport::default()
    };

    let a = sys.full_matrix();
    let b = sys.rhs_vector();
    let solved = BlockPreconditioner::new(&sys, cfg.inner_config())
        .and_then(|mut p| fgmres(&a, &mut p, &b, &cfg.outer_config()));
    let solution = match solved {
        Ok(out) => {
            report.iterations = out.iterations;
            report.converged = out.converged;
            report.final_residual = out.final_residual;
            if !out.converged {
                report.failure = Some(format!(
                    "FGMRES stopped after {} iterations at relative residual {:e}",
                    out.iterations, out.final_residual
                ));
            }
            report.residual_history = out.residual_history;
            let sol = FieldSolution::from_reduced(spaces, &sys, &out.x)?;
            report.measure(spaces, case, &sol)?;
            Some(sol)
        }
        Err(e) => {
            report.failure = Some(e.to_string());
            None
        }
    };
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(SolveOutcome { report, solution })
}

fn spaces_at(level: u32) -> Result<Spaces> {
    Ok(Spaces::new(Arc::new(TetMesh::unit_cube(level)?)))
}

#[derive(Clone, Debug)]
pub struct Study {
    pub kind: StudyKind,
    pub reports: Vec<SolveReport>,
    pub table: Table,
}

impl Study {
    pub fn all_converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }

    /// Writes the table to `cfg.out` and the full reports next to it as
    /// `<out>.reports.json`. Returns the rendered table.
    pub fn emit(&self, cfg: &StudyConfig) -> Result<String> {
        let text = emit_table(&self.table, cfg.format, cfg.out.as_deref())?;
        if let Some(out) = &cfg.out {
            let mut name = out.clone().into_os_string();
            name.push(".reports.json");
            std::fs::write(PathBuf::from(name), serde_json::to_string_pretty(&self.reports)?)?;
        }
        Ok(text)
    }
}

/// Solution-derived fields are meaningful once FGMRES returned an iterate.
fn was_measured(r: &SolveReport) -> bool {
    !r.residual_history.is_empty()
}

fn sci_or_missing(v: Option<f64>) -> Cell {
    v.map_or(Cell::Missing, Cell::Sci)
}

pub fn convergence_table(reports: &[SolveReport]) -> Table {
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    let column = |f: fn(&crate::analysis::ErrorNorms) -> f64| -> Vec<Option<f64>> {
        reports.iter().map(|r| r.errors.as_ref().map(f)).collect()
    };
    let errors = [column(|e| e.j_hdiv), column(|e| e.phi_l2), column(|e| e.a_hcurl)];
    let orders: Vec<Vec<Option<f64>>> = errors
        .iter()
        .map(|e| {
            let vals: Vec<f64> = e.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
            std::iter::once(None).chain(convergence_orders(&h, &vals)).collect()
        })
        .collect();
    let mut t = Table::new(&CONVERGENCE_COLUMNS);
    for (i, r) in reports.iter().enumerate() {
        let measured = was_measured(r);
        t.push(vec![
            Cell::Int(r.level.into()),
            Cell::Fixed(r.h),
            sci_or_missing(errors[0][i]),
            Cell::Order(orders[0][i]),
            sci_or_missing(errors[1][i]),
            Cell::Order(orders[1][i]),
            sci_or_missing(errors[2][i]),
            Cell::Order(orders[2][i]),
            sci_or_missing(measured.then_some(r.div_j_l2)),
            Cell::Int(r.iterations as u64),
        ]);
    }
    t
}

pub fn benchmark_table(reports: &[SolveReport]) -> Table {
    let mut t = Table::new(&BENCHMARK_COLUMNS);
    for r in reports {
        let measured = was_measured(r);
        let mut row = vec![Cell::Int(r.level.into()), Cell::Fixed(r.h)];
        row.extend(r.dofs.iter().map(|&d| Cell::Int(d as u64)));
        row.extend([
            Cell::Plain(r.rm),
            Cell::Int(r.iterations as u64),
            sci_or_missing(measured.then_some(r.helicity)),
            sci_or_missing(measured.then_some(r.r_l2)),
        ]);
        t.push(row);
    }
    t
}

/// Manufactured-solution study over the configured levels.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<Study> {
    cfg.validate()?;
    let case = cfg.build_case(CaseKind::Manufactured, cfg.rm_values()[0]);
    let mut reports = Vec::with_capacity(cfg.levels.len());
    for &level in &cfg.levels {
        reports.push(solve_case(&spaces_at(level)?, &case, cfg)?.report);
    }
    Ok(Study { kind: StudyKind::Convergence, table: convergence_table(&reports), reports })
}

/// Benchmark case over the grid levels × Rm, level-major.
pub fn run_precon_benchmark(cfg: &StudyConfig) -> Result<Study> {
    cfg.validate()?;
    let mut reports = Vec::new();
    for &level in &cfg.levels {
        let spaces = spaces_at(level)?;
        for rm in cfg.rm_values() {
            reports.push(solve_case(&spaces, &cfg.build_case(CaseKind::Benchmark, rm), cfg)?.report);
        }
    }
    Ok(Study { kind: StudyKind::Benchmark, table: benchmark_table(&reports), reports })
}

/// One solve of `case` on the finest configured level.
pub fn run_single_solve(cfg: &StudyConfig, case: &PhysicsCase) -> Result<SolveOutcome> {
    cfg.validate()?;
    let level = *cfg.levels.last().expect("validated nonempty");
    solve_case(&spaces_at(level)?, case, cfg)
}

/// Dispatches on `cfg.study`.
pub fn run_study(cfg: &StudyConfig) -> Result<Study> {
    match cfg.study {
        StudyKind::Convergence => run_convergence_study(cfg),
        StudyKind::Benchmark => run_precon_benchmark(cfg),
        StudyKind::SingleSolve => {
            let case = cfg.build_case(cfg.case, cfg.rm_values()[0]);
            let report = run_single_solve(cfg, &case)?.report;
            let table = match case.exact {
                Some(_) => convergence_table(std::slice::from_ref(&report)),
                None => benchmark_table(std::slice::from_ref(&report)),
            };
            Ok(Study { kind: StudyKind::SingleSolve, reports: vec![report], table })
        }
    }
}
