//! Acceptance gate: one line per criterion, non-zero exit if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mirror_descent::geometry::ProxSetup;
use mirror_descent::instances::{
    generate_max_quadratic, make_known_solution_instance, save_instance, FixtureKind,
    ProblemInstance,
};
use mirror_descent::oracles::{check_gradient_fd, ConvexFunction, FdCheck, Oracle};
use mirror_descent::reference::{check_gap_bound, check_md_step_inequality};
use mirror_descent::solvers::{
    iteration_bound_adaptive, iteration_bound_partial, phi_inverse, run_adaptive,
    run_partial_adaptive, run_restarted, tau, SolveTrace, StopReason,
};
use mirror_descent::vector::{dist2_sq, dot, norm1, norm2, sub};
use mirror_descent::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const SWEEP: [f64; 3] = [0.2, 0.1, 0.05];
const SWEEP_N: [usize; 3] = [25, 100, 400];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    /// Some parts hold and the rest are reported as observed.
    Partial,
}

struct Outcome {
    status: Status,
    details: String,
}

fn outcome(ok: bool, details: impl Into<String>) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        details: details.into(),
    }
}

fn active_linear() -> ProblemInstance {
    make_known_solution_instance(FixtureKind::ActiveLinear)
}

fn partial_runs(inst: &ProblemInstance) -> Vec<(f64, SolveTrace, f64)> {
    SWEEP
        .iter()
        .map(|&eps| {
            let t0 = Instant::now();
            let trace = run_partial_adaptive(inst, eps).expect("partial run");
            (eps, trace, t0.elapsed().as_secs_f64())
        })
        .collect()
}

fn adaptive_runs(inst: &ProblemInstance) -> Vec<(f64, SolveTrace)> {
    SWEEP
        .iter()
        .map(|&eps| (eps, run_adaptive(inst, eps, None).expect("adaptive run")))
        .collect()
}

fn fixed_budget_conclusion(runs: &[(f64, SolveTrace, f64)], m_g: f64) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for ((eps, t, secs), expected_n) in runs.iter().zip(SWEEP_N) {
        let vf = t.min_productive_vf.unwrap_or(f64::INFINITY);
        let this = t.total_iterations == expected_n
            && t.productive_count >= 1
            && vf < eps / m_g
            && t.output_g <= *eps
            && *secs < 1.0;
        ok &= this;
        parts.push(format!(
            "ε={eps}: N={} |I|={} min v_f={vf:.3e}<{:.4e} g(x̄)={:.3e} {:.1}ms",
            t.total_iterations,
            t.productive_count,
            eps / m_g,
            t.output_g,
            secs * 1e3
        ));
    }
    outcome(ok, parts.join("; "))
}

fn gap_bounds(runs: &[(f64, SolveTrace, f64)]) -> Outcome {
    let al = active_linear();
    let (_, t, _) = runs.iter().find(|(e, _, _)| *e == 0.1).unwrap();
    let rep = check_gap_bound(t, &al, 0.1).unwrap();
    let gap = t.output_f - 0.25;
    let ok_al = rep.passed && gap <= 0.0525 + 1e-9 && (rep.rhs - 0.0525).abs() < 1e-15;

    let mq = make_known_solution_instance(FixtureKind::MaxQuadraticLinear);
    let ConvexFunction::MaxOfQuadratics(q) = mq.objective() else {
        return outcome(false, "max-quadratic fixture has the wrong objective type");
    };
    let computed_l = q.lipschitz_grad_const();
    let piece_max = q
        .pieces()
        .iter()
        .map(|p| p.a[0].max(p.a[3])) // both pieces are diagonal
        .fold(f64::NEG_INFINITY, f64::max);
    let tm = run_partial_adaptive(&mq, 0.1).unwrap();
    let rep_mq = check_gap_bound(&tm, &mq, 0.1).unwrap();
    let ok_mq =
        rep_mq.passed && (computed_l - piece_max).abs() < 1e-12 && mq.constants().l == computed_l;
    outcome(
        ok_al && ok_mq,
        format!(
            "active-linear: gap {gap:.3e} ≤ {:.4}; max-quadratic: L = max λ_max = {computed_l}, gap {:.3e} ≤ {:.4e}",
            rep.rhs,
            tm.output_f - mq.known_solution().unwrap().f,
            rep_mq.rhs
        ),
    )
}

fn adaptive_conclusion(runs: &[(f64, SolveTrace)], inst: &ProblemInstance) -> Outcome {
    let c = inst.constants();
    let mut ok = true;
    let mut parts = Vec::new();
    for ((eps, t), expected_n) in runs.iter().zip(SWEEP_N) {
        let bound = iteration_bound_adaptive(c.m_g, c.theta0_sq, *eps).unwrap();
        let vf = t.min_productive_vf.unwrap_or(f64::INFINITY);
        let this = bound == expected_n
            && t.stop_reason == StopReason::CriterionMet
            && t.total_iterations <= bound
            && vf < *eps;
        ok &= this;
        parts.push(format!(
            "ε={eps}: stop at {} ≤ {bound}, min v_f={vf:.3e}",
            t.total_iterations
        ));
    }
    outcome(ok, parts.join("; "))
}

fn step_residuals(traces: &[(&ProblemInstance, &SolveTrace)]) -> Outcome {
    let mut ok = true;
    let mut worst_scaled = f64::NEG_INFINITY;
    let mut worst_raw = f64::NEG_INFINITY;
    let mut steps = 0;
    for (inst, t) in traces {
        let rep = check_md_step_inequality(t, inst).unwrap();
        ok &= rep.passed;
        worst_scaled = worst_scaled.max(rep.lhs);
        for r in &t.iterations {
            let raw = r.step_residual.expect("residual recorded");
            worst_raw = worst_raw.max(raw);
        }
        steps += t.iterations.len();
    }
    ok &= worst_raw <= 1e-8;
    outcome(
        ok,
        format!(
            "{} runs, {steps} steps: max scaled residual {worst_scaled:.3e}, max raw {worst_raw:.3e} (tolerance 1e-8)",
            traces.len()
        ),
    )
}

fn restart_behaviour() -> Outcome {
    let inst = make_known_solution_instance(FixtureKind::StronglyConvexBall);
    let eps = 1e-3;
    let t0 = Instant::now();
    let rep = match run_restarted(&inst, eps, &Point::zeros(2), 0.5) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let secs = t0.elapsed().as_secs_f64();
    let mut ok = rep.p_hat == 8 && rep.inner_theta0_sq == 0.5;
    for r in &rep.restarts {
        ok &= r.r_p_sq == 0.5 / 2f64.powi(r.p as i32);
        ok &= r.dist_sq_to_solution.unwrap() <= r.r_p_sq + 1e-9;
    }
    let final_dist = dist2_sq(&rep.final_point, &[0.5, 0.5]);
    ok &= final_dist <= 2.0 * eps / inst.constants().mu;
    ok &= rep.total_inner_iterations <= rep.iteration_bound;
    ok &= secs < 30.0;
    let radii: Vec<String> = rep
        .restarts
        .iter()
        .map(|r| format!("{:.1e}", r.dist_sq_to_solution.unwrap()))
        .collect();
    outcome(
        ok,
        format!(
            "p̂={} ‖x_p−x*‖²=[{}] final {final_dist:.2e} ≤ {:.0e}; inner iterations {} ≤ {}; {secs:.2}s",
            rep.p_hat,
            radii.join(" "),
            2.0 * eps,
            rep.total_inner_iterations,
            rep.iteration_bound
        ),
    )
}

fn phi_inversion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid: Vec<f64> = (0..25)
        .map(|i| 10f64.powf(-6.0 + 7.0 * i as f64 / 24.0))
        .collect();
    let mut worst_inverse = 0.0f64;
    let mut worst_branch = 0.0f64;
    let (mut objective_branch, mut constraint_branch) = (0, 0);
    for _ in 0..100 {
        let g: f64 = rng.random_range(0.0..5.0);
        let l: f64 = if rng.random_bool(0.1) {
            0.0
        } else {
            rng.random_range(0.0..5.0)
        };
        let m_g: f64 = rng.random_range(0.01..5.0);
        for &eps in &grid {
            let phi = phi_inverse(eps, g, l, m_g).unwrap();
            worst_inverse = worst_inverse.max((tau(phi, g, l, m_g) - eps).abs() / eps);
            // Closed forms of the two branches.
            let constraint = eps / m_g;
            let objective = if l > 0.0 {
                ((g * g + 2.0 * eps * l).sqrt() - g) / l
            } else {
                eps / g
            };
            if objective < constraint {
                // The literal formula cancels badly when 2εL ≪ G².
                if l == 0.0 || 2.0 * eps * l >= 1e-6 * g * g {
                    objective_branch += 1;
                    worst_branch = worst_branch.max((phi - objective).abs() / objective);
                }
            } else {
                constraint_branch += 1;
                worst_branch = worst_branch.max((phi - constraint).abs() / constraint);
            }
        }
    }
    let ok = worst_inverse <= 1e-10
        && worst_branch <= 1e-9
        && objective_branch > 0
        && constraint_branch > 0;
    outcome(
        ok,
        format!(
            "2500 cases: max |τ(φ(ε))−ε|/ε = {worst_inverse:.2e}; branch formulas reproduced to {worst_branch:.2e} \
             ({objective_branch} objective-branch, {constraint_branch} constraint-branch ε/M_g cases)"
        ),
    )
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let boxed = ProxSetup::euclidean_box(vec![-1.0, -3.0, 0.0], vec![2.0, 0.5, 1.0], None).unwrap();
    let ball = ProxSetup::euclidean_ball(vec![0.5, -1.0, 2.0], 1.5, None).unwrap();
    let simplex = ProxSetup::entropy_simplex(5).unwrap();
    let mut worst_proj = 0.0f64;
    let mut worst_sum = 0.0f64;
    let mut worst_bregman = f64::INFINITY;
    for setup in [&boxed, &ball, &simplex] {
        let n = setup.dim();
        for i in 0..1000 {
            let x = setup.sample_point(&mut rng);
            let y = setup.sample_point(&mut rng);
            let scale = if i % 10 == 0 { 50.0 } else { 3.0 };
            let p: Vec<f64> = (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                })
                .collect();
            let u = setup.mirror_step(&x, &p).unwrap();
            if setup.is_euclidean() {
                let proj = setup.project(&sub(&x, &p)).unwrap();
                worst_proj = worst_proj.max(norm2(&sub(&u, &proj)));
            } else {
                worst_sum = worst_sum.max((u.iter().sum::<f64>() - 1.0).abs());
            }
            let diff = sub(&x, &y);
            let half_sq = 0.5
                * if setup.is_euclidean() {
                    dot(&diff, &diff)
                } else {
                    norm1(&diff).powi(2)
                };
            worst_bregman = worst_bregman.min(setup.bregman(&x, &y).unwrap() - half_sq);
        }
    }
    let ok = worst_proj <= 1e-12 && worst_sum <= 1e-12 && worst_bregman >= -1e-12;
    outcome(
        ok,
        format!(
            "mirror step vs projection {worst_proj:.1e}; entropy |Σu−1| {worst_sum:.1e}; min V − ½‖·‖² = {worst_bregman:.2e} (3×1000 pairs)"
        ),
    )
}

fn oracle_properties() -> Outcome {
    let mut ok = true;
    let mut fd_worst = 0.0f64;
    let mut fd_points = 0;
    let mut violations = 0;
    for &(dim, pieces, seed) in &[(2, 3, 1u64), (3, 2, 5), (5, 4, 7), (8, 6, 11)] {
        let inst = generate_max_quadratic(dim, pieces, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for f in [inst.objective(), inst.constraint()] {
            for _ in 0..1000 {
                let x = inst.setup().sample_point(&mut rng);
                let y = inst.setup().sample_point(&mut rng);
                let lam: f64 = rng.random();
                let mid: Vec<f64> = x
                    .iter()
                    .zip(y.iter())
                    .map(|(a, b)| lam * a + (1.0 - lam) * b)
                    .collect();
                let (fx, gx) = f.eval(&x);
                let fy = f.eval_value(&y);
                if f.eval_value(&mid) > lam * fx + (1.0 - lam) * fy + 1e-9 {
                    violations += 1;
                }
                if fy < fx + dot(&gx, &sub(&y, &x)) - 1e-9 {
                    violations += 1;
                }
                if let FdCheck::MaxError(e) = check_gradient_fd(f, &x, 1e-6).unwrap() {
                    fd_worst = fd_worst.max(e);
                    fd_points += 1;
                }
            }
        }
    }
    ok &= violations == 0 && fd_worst <= 1e-6 && fd_points > 0;
    outcome(
        ok,
        format!(
            "4 instances × 2 functions × 1000 pairs: {violations} convexity/subgradient violations; \
             finite differences at {fd_points} non-tie points agree to {fd_worst:.2e}"
        ),
    )
}

fn mdsolve(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mdsolve"))
        .args(args)
        .env("MD_LOG", "quiet")
        .output()
        .expect("mdsolve runs")
}

fn reproducibility(dir: &Path) -> Outcome {
    let generated = dir.join("generated.json");
    save_instance(&generate_max_quadratic(4, 3, 9).unwrap(), &generated).unwrap();
    let generated = generated.to_str().unwrap().to_string();
    let cases: Vec<Vec<String>> = vec![
        [
            "--fixture",
            "active-linear",
            "--algorithm",
            "partial",
            "--epsilon",
            "0.05",
        ]
        .map(String::from)
        .to_vec(),
        [
            "--fixture",
            "max-quadratic-linear",
            "--algorithm",
            "adaptive",
            "--epsilon",
            "0.02",
        ]
        .map(String::from)
        .to_vec(),
        vec![
            "--instance".into(),
            generated,
            "--algorithm".into(),
            "partial".into(),
            "--epsilon".into(),
            "0.1".into(),
        ],
    ];
    let mut ok = true;
    let mut rows = 0;
    for (i, case) in cases.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let path = dir.join(format!("trace_{i}_{run}.csv"));
            let mut args = vec!["solve".to_string()];
            args.extend(case.iter().cloned());
            args.extend(["--trace".into(), path.to_str().unwrap().into()]);
            let out = mdsolve(&args.iter().map(String::as_str).collect::<Vec<_>>());
            ok &= out.status.success();
            outputs.push(std::fs::read(&path).unwrap_or_default());
        }
        ok &= !outputs[0].is_empty() && outputs[0] == outputs[1] && !outputs[0].contains(&b'\r');
        rows += outputs[0].iter().filter(|b| **b == b'\n').count();
    }
    outcome(
        ok,
        format!("3 invocations repeated: trace CSVs byte-identical ({rows} lines, LF endings)"),
    )
}

fn parse_bench(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn rate_scaling(dir: &Path) -> Outcome {
    let mut columns = Vec::new();
    for algorithm in ["partial", "adaptive"] {
        let data = dir.join(format!("bench_{algorithm}.dat"));
        let out = mdsolve(&[
            "bench",
            "--fixture",
            "active-linear",
            "--algorithm",
            algorithm,
            "--epsilon-list",
            "0.2,0.1,0.05",
            "--out",
            data.to_str().unwrap(),
        ]);
        if !out.status.success() {
            return outcome(
                false,
                format!(
                    "bench {algorithm} failed: {}",
                    String::from_utf8_lossy(&out.stderr)
                ),
            );
        }
        columns.push((algorithm, parse_bench(&data)));
    }
    let mut n_ok = true;
    let mut monotone = Vec::new();
    let mut parts = Vec::new();
    for (algorithm, rows) in &columns {
        let eps: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let n: Vec<usize> = rows.iter().map(|r| r[1] as usize).collect();
        let gap: Vec<f64> = rows.iter().map(|r| r[3].abs()).collect();
        n_ok &= eps == SWEEP && n == SWEEP_N;
        let shrinks = gap.windows(2).all(|w| w[1] <= w[0]);
        monotone.push(shrinks);
        parts.push(format!(
            "{algorithm}: N={n:?} |f(x̄)−f*|=[{}] {}",
            gap.iter()
                .map(|g| format!("{g:.2e}"))
                .collect::<Vec<_>>()
                .join(" "),
            if shrinks { "monotone" } else { "not monotone" }
        ));
    }
    let status = match (n_ok, monotone[0], monotone[1]) {
        (true, true, true) => Status::Pass,
        (true, _, _) if monotone.iter().any(|m| *m) => Status::Partial,
        _ => Status::Fail,
    };
    Outcome {
        status,
        details: parts.join("; "),
    }
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let al = active_linear();
    let m_g = al.constants().m_g;
    assert_eq!(
        SWEEP.map(|e| iteration_bound_partial(m_g, al.constants().theta0_sq, e).unwrap()),
        SWEEP_N
    );
    let partial = partial_runs(&al);
    let adaptive = adaptive_runs(&al);
    let mq = make_known_solution_instance(FixtureKind::MaxQuadraticLinear);
    let mq_trace = run_partial_adaptive(&mq, 0.1).unwrap();

    let mut all_runs: Vec<(&ProblemInstance, &SolveTrace)> =
        partial.iter().map(|(_, t, _)| (&al, t)).collect();
    all_runs.extend(adaptive.iter().map(|(_, t)| (&al, t)));
    all_runs.push((&mq, &mq_trace));

    let criteria: Vec<(&str, Outcome)> = vec![
        (
            "fixed-budget method conclusion",
            fixed_budget_conclusion(&partial, m_g),
        ),
        ("objective gap bound", gap_bounds(&partial)),
        (
            "adaptive method conclusion",
            adaptive_conclusion(&adaptive, &al),
        ),
        ("per-step inequality residuals", step_residuals(&all_runs)),
        ("restart behaviour", restart_behaviour()),
        ("accuracy map inversion", phi_inversion()),
        ("geometry", geometry()),
        ("oracle properties", oracle_properties()),
        ("reproducibility", reproducibility(dir.path())),
        ("rate scaling", rate_scaling(dir.path())),
    ];

    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        let label = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Partial => "PARTIAL",
        };
        println!("criterion {:>2} {label:<7} {name}: {}", i + 1, o.details);
        if o.status == Status::Fail {
            failed += 1;
        }
    }
    let partial_count = criteria
        .iter()
        .filter(|(_, o)| o.status == Status::Partial)
        .count();
    println!(
        "acceptance: {} pass, {partial_count} partial, {failed} fail",
        criteria.len() - failed - partial_count
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
