//! Acceptance suite: one test per release criterion.
//!
//! Each test is a self-contained pass/fail gate; `cargo test --test
//! acceptance` prints one line per criterion. The reference evaluation
//! counts for the benchmark rows live in `REFERENCE_ROWS`, and every
//! comparison against them allows a factor of three in either direction:
//! line-search internals and probe accounting legitimately differ between
//! implementations, an order of magnitude does not.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fastbfgs::correction::{hvp, ver_a, ver_b};
use fastbfgs::linesearch::{strong_wolfe, LineSearchStatus};
use fastbfgs::optimizers::{run, Evaluator, OptimizerConfig, RunStatus, Variant};
use fastbfgs::oracle::check_equivalence;
use fastbfgs::problems::{get_problem, gradient_check, list_problems, Problem};
use fastbfgs::subspace::{rescale_pair, SubspaceState};

/// Published evaluation counts reproduced by criterion 1: problem, dimension,
/// variant, reference nfg.
const REFERENCE_ROWS: [(&str, usize, Variant, usize); 9] = [
    ("ARWHEAD", 1024, Variant::FastB, 16),
    ("BDEXP", 1024, Variant::FastA, 9),
    ("BDEXP", 1024, Variant::FastB, 9),
    ("EG2", 1000, Variant::FastA, 8),
    ("EDENSCH", 1000, Variant::FastB, 23),
    ("HIMMELBG", 1000, Variant::FastA, 3),
    ("TOINTGSS", 1000, Variant::FastB, 7),
    ("LIARWHD", 1000, Variant::FastB, 30),
    ("SROSENBR", 1000, Variant::FastA, 48),
];

fn converged_nfg(name: &str, n: usize, variant: Variant, m: usize) -> (usize, RunStatus) {
    let problem = get_problem(name, n).expect("registered problem");
    let config = OptimizerConfig { variant, m, ..OptimizerConfig::default() };
    let trace = run(&problem, &config).expect("valid configuration");
    (trace.nfg, trace.status)
}

#[test]
fn criterion_1_reference_rows_within_factor_three() {
    let started = Instant::now();
    for (name, n, variant, reference) in REFERENCE_ROWS {
        let (nfg, status) = converged_nfg(name, n, variant, 8);
        assert_eq!(
            status,
            RunStatus::Converged,
            "{name}@{n} {variant} did not converge (nfg {nfg})"
        );
        let lo = reference.div_ceil(3);
        let hi = 3 * reference;
        assert!(
            (lo..=hi).contains(&nfg),
            "{name}@{n} {variant}: nfg {nfg} outside [{lo}, {hi}] (reference {reference})"
        );
        println!("criterion 1: {name}@{n} {variant} nfg {nfg} in [{lo}, {hi}]");
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 120.0, "reference rows took {elapsed:.1}s, budget is two minutes");
    println!("criterion 1: all nine rows converged in {elapsed:.1}s");
}

#[test]
fn criterion_2_baseline_sanity() {
    let cases = [
        ("ARWHEAD", 1024, Variant::Bfgs, 39),
        ("ARWHEAD", 1024, Variant::Lbfgs, 26),
        ("EDENSCH", 1000, Variant::Gd, 59),
    ];
    for (name, n, variant, reference) in cases {
        let (nfg, status) = converged_nfg(name, n, variant, 8);
        assert_eq!(status, RunStatus::Converged, "{name}@{n} {variant} did not converge");
        assert!(
            nfg <= 3 * reference,
            "{name}@{n} {variant}: nfg {nfg} exceeds 3 x {reference}"
        );
        println!("criterion 2: {name}@{n} {variant} nfg {nfg} <= {}", 3 * reference);
    }
}

#[test]
fn criterion_3_window_size_weak_dependence() {
    let problems = [("ARWHEAD", 1024), ("BDEXP", 1024), ("HIMMELBG", 1000), ("TQUARTIC", 1000)];
    let mut compared = 0usize;
    for (name, n) in problems {
        for variant in Variant::ALL {
            let (small, status_small) = converged_nfg(name, n, variant, 2);
            let (large, status_large) = converged_nfg(name, n, variant, 8);
            if status_small != RunStatus::Converged || status_large != RunStatus::Converged {
                continue;
            }
            let gap = small.abs_diff(large) as f64;
            let bound = 0.3 * small.max(large) as f64;
            assert!(
                gap <= bound,
                "{name}@{n} {variant}: nfg {small} (m=2) vs {large} (m=8) differ beyond 30%"
            );
            compared += 1;
            println!("criterion 3: {name}@{n} {variant} m=2/{small} m=8/{large}");
        }
    }
    assert!(compared >= 8, "only {compared} variant pairs converged at both window sizes");
}

/// The shared quadratic ensemble for the trajectory suites: orthogonal
/// conjugation of a log-spread spectrum with the requested condition number.
fn spread_spd(rng: &mut ChaCha8Rng, n: usize, cond: f64) -> DMatrix<f64> {
    let raw = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    let q = raw.qr().q();
    let diag = DVector::from_fn(n, |i, _| cond.powf(i as f64 / (n - 1) as f64));
    &q * DMatrix::from_diagonal(&diag) * q.transpose()
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
}

fn equivalence_instances() -> impl Iterator<Item = (usize, Problem, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..20).map(move |i| {
        let n = rng.gen_range(30..=50);
        let m = [2, 4, 8][i % 3];
        let a = spread_spd(&mut rng, n, 1e4);
        let b = random_vec(&mut rng, n);
        let x0 = random_vec(&mut rng, n) * 2.0;
        (i, Problem::quadratic(a, b, x0), m)
    })
}

#[test]
fn criterion_4_equivalence_suite() {
    let mut worst = 0.0f64;
    let mut total_steps = 0usize;
    for (i, problem, m) in equivalence_instances() {
        let report = check_equivalence(&problem, m, 15)
            .unwrap_or_else(|e| panic!("instance {i} (m={m}) failed to certify: {e}"));
        // The reduced recursion solves an m-dimensional quadratic, so it
        // reaches the oracle's gradient cutoff in a handful of steps; two
        // certified steps is the structural floor for m = 2 and the aggregate
        // count below keeps the suite from degenerating.
        assert!(
            report.steps_run >= 2,
            "instance {i} (m={m}) certified only {} lockstep steps",
            report.steps_run
        );
        total_steps += report.steps_run;
        assert!(
            report.max_iterate_dev <= 1e-8,
            "instance {i}: iterate deviation {:.3e}",
            report.max_iterate_dev
        );
        assert!(
            report.max_h_dev <= 1e-8,
            "instance {i}: projected-window deviation {:.3e}",
            report.max_h_dev
        );
        assert!(
            report.max_step_dev <= 1e-8,
            "instance {i}: step-norm deviation {:.3e}",
            report.max_step_dev
        );
        worst = worst.max(report.max_deviation());
    }
    assert!(total_steps >= 60, "only {total_steps} certified steps across the suite");
    println!(
        "criterion 4: 20 instances, {total_steps} certified steps, worst deviation {worst:.3e}"
    );
}

#[test]
fn criterion_5_secant_suite() {
    let mut worst = 0.0f64;
    for (i, problem, m) in equivalence_instances() {
        let report = check_equivalence(&problem, m, 15)
            .unwrap_or_else(|e| panic!("instance {i} (m={m}) failed to certify: {e}"));
        assert!(
            report.max_secant_residual <= 1e-8,
            "instance {i} (m={m}): secant residual {:.3e}",
            report.max_secant_residual
        );
        worst = worst.max(report.max_secant_residual);
    }
    println!("criterion 5: worst relative secant residual {worst:.3e}");
}

fn smallest_core_eigenvalue(state: &SubspaceState) -> f64 {
    state
        .core()
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_6_core_stays_positive_definite_on_wolfe_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let config = OptimizerConfig::default();
    let mut checks = 0usize;
    let mut global_min = f64::INFINITY;
    for i in 0..20 {
        let n = rng.gen_range(10..=50);
        let m = [2, 4, 8][i % 3];
        let problem = Problem::quadratic(
            spread_spd(&mut rng, n, 1e3),
            random_vec(&mut rng, n),
            random_vec(&mut rng, n) * 2.0,
        );
        let eval = Evaluator::new(&problem, 100_000);
        let mut state = SubspaceState::new(m);
        let mut x = problem.x0().clone();
        let (mut f, mut g) = eval.fg(&x).expect("budget is effectively unlimited");
        let mut absorbed = 0usize;
        for _ in 0..25 {
            if g.norm() < config.tol {
                break;
            }
            let mut p = if state.is_empty() {
                -&g
            } else {
                -state.apply(&g).expect("window state matches the problem dimension")
            };
            if !state.is_empty() {
                let hg = -&p;
                let corr = if i % 2 == 0 {
                    ver_a(&eval, &x, &g, &hg).expect("budget is effectively unlimited")
                } else {
                    ver_b(&eval, &x, &g, &hg).expect("budget is effectively unlimited")
                };
                if corr.alpha != 0.0 {
                    p.axpy(-corr.alpha, &corr.v, 1.0);
                }
            }
            let dphi0 = g.dot(&p);
            if dphi0 >= 0.0 {
                p = -&g;
            }
            let phi0 = f;
            let dphi0 = g.dot(&p);
            let mut accepted: Option<(f64, DVector<f64>)> = None;
            let result = strong_wolfe(
                |tau| {
                    if tau == 0.0 {
                        return (phi0, dphi0);
                    }
                    let xt = &x + &p * tau;
                    let (ft, gt) = eval.fg(&xt).expect("budget is effectively unlimited");
                    let slope = gt.dot(&p);
                    accepted = Some((ft, gt));
                    (ft, slope)
                },
                1.0,
                config.c1,
                config.c2,
                0.0,
                60,
            );
            assert_eq!(
                result.status,
                LineSearchStatus::Converged,
                "instance {i}: line search failed on a convex quadratic"
            );
            let (ft, gt) = accepted.expect("a converged search probed at least once");
            let xt = &x + &p * result.tau;
            let s = &xt - &x;
            let y = &gt - &g;
            if let Some(pair) = rescale_pair(&s, &y) {
                state.absorb(pair);
                absorbed += 1;
                let min_eig = smallest_core_eigenvalue(&state);
                assert!(
                    min_eig > 0.0,
                    "instance {i} (n={n}, m={m}): core eigenvalue {min_eig:.3e} after {absorbed} pairs"
                );
                global_min = global_min.min(min_eig);
                checks += 1;
            }
            x = xt;
            f = ft;
            g = gt;
        }
        assert!(absorbed >= 5, "instance {i} absorbed only {absorbed} pairs");
    }
    println!("criterion 6: {checks} core checks, smallest eigenvalue {global_min:.3e}");
}

#[test]
fn criterion_7_gradients_match_finite_differences() {
    let golden = 0.618_033_988_749_894_9_f64;
    for (name, dims) in list_problems() {
        // Every family at a dimension that exercises all of its term shapes,
        // plus a spot check at the benchmark dimension. DQRTIC is exempt from
        // the latter: its objective reaches ~1e14 there, which pushes central
        // differences themselves above the tolerance.
        let small = if name == "POWELLSG" { 64 } else { 60 };
        let mut checked = vec![small];
        if name != "DQRTIC" {
            checked.push(dims[0]);
        }
        for n in checked {
            let problem = get_problem(name, n).expect("registered dimension");
            let at_start = gradient_check(&problem, problem.x0());
            assert!(at_start <= 1e-6, "{name}@{n}: gradient error {at_start:.3e} at x0");
            let jittered = DVector::from_fn(n, |i, _| {
                problem.x0()[i] + 0.25 * ((((i + 1) as f64) * golden).fract() - 0.5)
            });
            let off_start = gradient_check(&problem, &jittered);
            assert!(off_start <= 1e-6, "{name}@{n}: gradient error {off_start:.3e} off x0");
            println!("criterion 7: {name}@{n} gradient errors {at_start:.1e} / {off_start:.1e}");
        }
    }
}

#[test]
fn criterion_8_hessian_vector_probe_accuracy() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.gen_range(5..=40);
        let a = spread_spd(&mut rng, n, 1e3);
        let problem = Problem::quadratic(a.clone(), random_vec(&mut rng, n), DVector::zeros(n));
        let eval = Evaluator::new(&problem, 10);
        let x = random_vec(&mut rng, n);
        let d = random_vec(&mut rng, n);
        let g0 = problem.grad(&x);
        let probe = hvp(&eval, &x, &d, &g0).expect("non-zero direction");
        let exact = &a * &d;
        let rel = (&probe - &exact).norm() / exact.norm();
        assert!(rel <= 1e-4, "hvp relative error {rel:.3e} at n={n}");
        worst = worst.max(rel);
    }
    println!("criterion 8: worst hvp relative error {worst:.3e} over 50 probes");
}

#[test]
fn criterion_9_storage_stays_within_the_window_budget() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for &(n, m) in &[(50usize, 2usize), (200, 4), (1000, 8)] {
        let mut state = SubspaceState::new(m);
        for _ in 0..3 * m {
            let s = random_vec(&mut rng, n);
            let y = &s * 2.0 + random_vec(&mut rng, n) * 0.1;
            let pair = rescale_pair(&s, &y).expect("random pairs have usable curvature");
            state.absorb(pair);
            let bound = m * n + m * m + 4 * m + 8;
            assert!(
                state.stored_scalars() <= bound,
                "n={n} m={m}: {} scalars exceeds {bound}",
                state.stored_scalars()
            );
        }
    }

    // Applying the window must stay linear in n: at this dimension any
    // accidental n x n product would need hundreds of gigabytes, so merely
    // finishing (and agreeing with the factored form computed by hand) is
    // the structural check.
    let n = 200_000;
    let m = 8;
    let mut state = SubspaceState::new(m);
    for _ in 0..m + 2 {
        let s = random_vec(&mut rng, n);
        let y = &s * 2.0 + random_vec(&mut rng, n) * 0.1;
        state.absorb(rescale_pair(&s, &y).expect("usable curvature"));
    }
    let g = random_vec(&mut rng, n);
    let applied = state.apply(&g).expect("state is non-empty");
    let weights = state.core()
        * DVector::from_fn(state.stored(), |j, _| {
            state.columns().nth(j).expect("j < stored").dot(&g)
        });
    let mut by_hand = DVector::zeros(n);
    for (j, col) in state.columns().enumerate() {
        by_hand.axpy(weights[j], col, 1.0);
    }
    let rel = (&applied - &by_hand).norm() / by_hand.norm();
    assert!(rel <= 1e-12, "factored apply disagrees with the by-hand product: {rel:.3e}");
    println!("criterion 9: storage bound holds; apply at n={n} matches the factored form");
}
