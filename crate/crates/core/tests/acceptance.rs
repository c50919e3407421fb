//! Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Levels are `k = 0..`, i.e. meshes `T_{k+1}`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use mhd_core::analysis::{div_b_norm, field_norms, FieldSolution, SolveReport};
use mhd_core::assembly::{benchmark_case_example2, manufactured_case_example1, BlockSystem, PhysicsCase};
use mhd_core::driver::{run_convergence_study, run_precon_benchmark, solve_case, StudyConfig, StudyKind};
use mhd_core::linalg::direct_solve;
use mhd_core::precon::{
    build_constraint_preconditioner_dense, verify_unit_eigenvalue_multiplicity, DEFAULT_DENSE_CAP,
};

const DOF_TABLE: [[usize; 4]; 4] =
    [[360, 48, 196, 125], [2592, 384, 1208, 729], [19584, 3072, 8368, 4913], [152064, 24576, 62048, 35937]];

/// Reference errors `(J in H(div), φ in L², A in H(curl))` on T1..T4.
const ERROR_TABLE: [[f64; 3]; 4] = [
    [5.9811e-02, 1.0208e-01, 9.8060e-02],
    [2.6438e-02, 5.1034e-02, 4.8104e-02],
    [1.2527e-02, 2.5516e-02, 2.3780e-02],
    [6.1235e-03, 1.2758e-02, 1.1821e-02],
];

/// Reference outer iteration counts, rows T1..T4, columns Rm = 50, 100, 200.
const ITERATION_TABLE: [[usize; 3]; 4] = [[21, 23, 30], [19, 22, 30], [16, 18, 25], [14, 16, 20]];
const RM: [f64; 3] = [50.0, 100.0, 200.0];

type Outcome = Result<String, String>;

struct Runner {
    failures: usize,
}

impl Runner {
    fn record(&mut self, id: usize, name: &str, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{id}] {name}: {detail} ({secs:.1} s)"),
            Err(detail) => {
                self.failures += 1;
                println!("FAIL [{id}] {name}: {detail} ({secs:.1} s)");
            }
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn dof_counts() -> Outcome {
    for (level, expected) in DOF_TABLE.iter().enumerate() {
        let got = common::spaces(level as u32).dof_counts();
        check(got == *expected, || format!("T{}: {got:?} != {expected:?}", level + 1))?;
    }
    Ok("T1..T4 match exactly".into())
}

fn convergence(reports: &[SolveReport]) -> Outcome {
    let mut detail = Vec::new();
    for (k, r) in reports.iter().enumerate() {
        check(r.converged, || format!("T{} did not converge: {:?}", k + 1, r.failure))?;
        let e = r.errors.ok_or("missing error norms")?;
        for (got, reference, name) in
            [(e.j_hdiv, ERROR_TABLE[k][0], "J"), (e.phi_l2, ERROR_TABLE[k][1], "phi"), (e.a_hcurl, ERROR_TABLE[k][2], "A")]
        {
            check(got >= reference / 2.0 && got <= 2.0 * reference, || {
                format!("T{} err {name} {got:.4e} outside [{:.3e}, {:.3e}]", k + 1, reference / 2.0, 2.0 * reference)
            })?;
        }
    }
    let table = mhd_core::driver::convergence_table(reports);
    let n = reports.len();
    for col in ["order_J", "order_phi", "order_A"] {
        let c = table.column(col).unwrap();
        // the two finest consecutive pairs, T2→T3 and T3→T4
        for row in &table.rows[n - 2..] {
            let mhd_core::driver::Cell::Order(Some(o)) = row[c] else { return Err(format!("{col} undefined")) };
            check((o - 1.0).abs() <= 0.15, || format!("{col} = {o:.4} not within 1 ± 0.15"))?;
            detail.push(format!("{col} {o:.4}"));
        }
    }
    Ok(detail.join(", "))
}

fn divergence(all: &[&SolveReport]) -> Outcome {
    let worst_j = all.iter().map(|r| r.div_j_l2).fold(0.0, f64::max);
    let worst_b = all.iter().map(|r| r.div_b_l2).fold(0.0, f64::max);
    check(worst_j <= 1e-8, || format!("max ‖div J_h‖ = {worst_j:e}"))?;
    check(worst_b <= 1e-10, || format!("max ‖div B_h‖ = {worst_b:e}"))?;
    Ok(format!("{} solves, max ‖div J_h‖ {worst_j:.2e}, max ‖div B_h‖ {worst_b:.2e}", all.len()))
}

fn helicity_and_multiplier(bench: &[SolveReport]) -> Outcome {
    let on_t1_t3: Vec<&SolveReport> = bench.iter().filter(|r| r.level <= 2).collect();
    check(on_t1_t3.len() == 9, || format!("expected 9 solves on T1..T3, got {}", on_t1_t3.len()))?;
    let hel = on_t1_t3.iter().map(|r| r.helicity.abs()).fold(0.0, f64::max);
    let r = on_t1_t3.iter().map(|r| r.r_l2).fold(0.0, f64::max);
    check(hel <= 1e-8, || format!("max |∫ J_h·B_h| = {hel:e}"))?;
    check(r <= 1e-8, || format!("max ‖r_h‖ = {r:e}"))?;
    Ok(format!("max |helicity| {hel:.2e}, max ‖r_h‖ {r:.2e}"))
}

fn robustness(bench: &[SolveReport]) -> Outcome {
    let count = |level: u32, rm: f64| bench.iter().find(|r| r.level == level && r.rm == rm).map(|r| r.iterations);
    let mut grid = Vec::new();
    for (level, row) in ITERATION_TABLE.iter().enumerate() {
        let mut line = Vec::new();
        for (j, &rm) in RM.iter().enumerate() {
            let r = bench.iter().find(|r| r.level == level as u32 && r.rm == rm).ok_or("missing solve")?;
            check(r.converged, || format!("T{} Rm {rm} did not converge", level + 1))?;
            check(r.iterations <= 2 * row[j], || {
                format!("T{} Rm {rm}: {} iterations > 2 × {}", level + 1, r.iterations, row[j])
            })?;
            line.push(r.iterations.to_string());
        }
        grid.push(format!("T{} {}", level + 1, line.join("/")));
    }
    for rm in RM {
        let (first, last) = (count(0, rm).unwrap(), count(3, rm).unwrap());
        check(last <= first + 2, || format!("Rm {rm}: T4 count {last} exceeds T1 count {first} + 2"))?;
    }
    Ok(grid.join(", "))
}

fn constraint_spectrum() -> Outcome {
    let s = common::spaces(0);
    let sys = BlockSystem::assemble(&s, &benchmark_case_example2(50.0)).map_err(|e| e.to_string())?;
    let cs = build_constraint_preconditioner_dense(&sys, DEFAULT_DENSE_CAP).map_err(|e| e.to_string())?;
    let rep = verify_unit_eigenvalue_multiplicity(&cs, 1e-6).map_err(|e| e.to_string())?;
    check(rep.multiplicity_ok(), || format!("{} unit eigenvalues < 2 N_L = {}", rep.unit_count, 2 * rep.n_l))?;
    check(rep.spectrum_matches(), || format!("non-unit spectrum mismatch {:e}", rep.match_error))?;
    Ok(format!(
        "{} eigenvalues within 1e-6 of 1 (2 N_L = {}), match error {:.2e} (dense QR route {:.2e})",
        rep.unit_count,
        2 * rep.n_l,
        rep.match_error,
        rep.qr_match_error
    ))
}

fn oracle_equivalence() -> Outcome {
    let s = common::spaces(0);
    let cfg = StudyConfig { levels: vec![0], ..StudyConfig::default() };
    let cases: [(&str, PhysicsCase); 2] =
        [("example 1", manufactured_case_example1()), ("example 2", benchmark_case_example2(50.0))];
    let mut detail = Vec::new();
    for (name, case) in cases {
        let out = solve_case(&s, &case, &cfg).map_err(|e| e.to_string())?;
        let iterative = out.solution.ok_or_else(|| format!("{name}: {:?}", out.report.failure))?;
        let sys = BlockSystem::assemble(&s, &case).map_err(|e| e.to_string())?;
        let x = direct_solve(&sys.full_matrix(), &sys.rhs_vector()).map_err(|e| e.to_string())?;
        let direct = FieldSolution::from_reduced(&s, &sys, &x).map_err(|e| e.to_string())?;
        let (d, dr) = field_norms(&s, &iterative.difference(&direct).unwrap()).map_err(|e| e.to_string())?;
        let worst = d.j_hdiv.max(d.phi_l2).max(d.a_hcurl).max(dr);
        check(worst <= 1e-6, || format!("{name}: field norm difference {worst:e} ({d:?}, r {dr:e})"))?;
        check(div_b_norm(&s, &direct.a).map_err(|e| e.to_string())? <= 1e-10, || format!("{name}: div B"))?;
        detail.push(format!("{name} {worst:.2e}"));
    }
    Ok(detail.join(", "))
}

fn property_suites() -> Outcome {
    for level in 0..=2 {
        common::mesh_topology(level)?;
        common::permutation_stability(level, 17 + level as u64)?;
        common::complex_inclusions(level, 3, 5)?;
        common::trace_continuity(level, 2, 9)?;
        common::spd_blocks(level, 13)?;
        common::unisolvence(level, 21)?;
    }
    Ok("Euler, relabeling, inclusions, traces, SPD, unisolvence on levels 0..2".into())
}

fn main() -> ExitCode {
    let mut run = Runner { failures: 0 };
    run.record(1, "DOF-count exactness", dof_counts);

    // studies shared by criteria 2 to 5
    let t = Instant::now();
    let conv_cfg = StudyConfig { levels: vec![0, 1, 2, 3], ..StudyConfig::default() };
    let conv = run_convergence_study(&conv_cfg);
    let conv_secs = t.elapsed().as_secs_f64();
    let bench_cfg = StudyConfig { study: StudyKind::Benchmark, levels: vec![0, 1, 2, 3], ..StudyConfig::default() };
    let bench = run_precon_benchmark(&bench_cfg);
    let bench_secs = t.elapsed().as_secs_f64() - conv_secs;
    for study in [&conv, &bench].into_iter().flatten() {
        print!("{}", study.table.to_markdown());
    }
    println!("convergence study {conv_secs:.1} s, benchmark study {bench_secs:.1} s");

    let conv = conv.map(|s| s.reports).map_err(|e| e.to_string());
    let bench = bench.map(|s| s.reports).map_err(|e| e.to_string());
    run.record(2, "convergence rates", || convergence(conv.as_ref().map_err(Clone::clone)?));
    run.record(3, "divergence conservation", || {
        let c = conv.as_ref().map_err(Clone::clone)?;
        let b = bench.as_ref().map_err(Clone::clone)?;
        divergence(&c.iter().chain(b).collect::<Vec<_>>())
    });
    run.record(4, "helicity and multiplier", || helicity_and_multiplier(bench.as_ref().map_err(Clone::clone)?));
    run.record(5, "preconditioner robustness", || robustness(bench.as_ref().map_err(Clone::clone)?));
    run.record(6, "constraint-preconditioning spectrum", constraint_spectrum);
    run.record(7, "oracle equivalence", oracle_equivalence);
    run.record(8, "property suites", property_suites);

    println!("{} of 8 criteria passed", 8 - run.failures);
    if run.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
