//! Acceptance checks: rate gain, method ordering, placement, GPI convergence
//! and size scaling, plus the oracle and invariant suites. Prints one PASS/FAIL
//! line per criterion and exits nonzero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use irs_twr::optimizers::Method;
use irs_twr::sim::{
    run_convergence, run_distance_sweep, run_size_sweep, Execution, ExperimentConfig, RateMetric, SweepRow,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn mean_of(rows: &[SweepRow], method: Method, value: f64) -> &SweepRow {
    rows.iter()
        .find(|r| r.method == method && r.sweep_value == value)
        .unwrap_or_else(|| panic!("no row for {method} at {value}"))
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

/// Criteria 1 and 2 share one run at N = 80, d = 50.
fn gain_and_ordering() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        trials: 500,
        element_counts: Some(vec![80]),
        d_fixed: 50.0,
        methods: Some(vec![Method::Gpi, Method::MaxMin, Method::Evd, Method::Random]),
        rate_metric: RateMetric::System,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let rows = run_size_sweep(&cfg).expect("size sweep");
    let elapsed = start.elapsed();
    let row = |m| mean_of(&rows, m, 80.0);
    let (gpi, rnd) = (row(Method::Gpi), row(Method::Random));

    let ratio = gpi.mean_rate / rnd.mean_rate;
    let sum_ratio = gpi.mean_slot1_sum / rnd.mean_slot1_sum;
    let c1 = Outcome {
        pass: ratio >= 1.20 && within(Duration::from_secs(300), elapsed),
        detail: format!(
            "gpi/random system rate {:.4}/{:.4} = {ratio:.3} (need >= 1.20); slot-1 sum ratio {sum_ratio:.3}; {:.1} s (limit 300 s)",
            gpi.mean_rate,
            rnd.mean_rate,
            elapsed.as_secs_f64()
        ),
    };

    let order = [Method::Gpi, Method::MaxMin, Method::Evd, Method::Random];
    let mut ok = true;
    let mut parts = Vec::new();
    for w in order.windows(2) {
        let (a, b) = (row(w[0]), row(w[1]));
        let gap = a.mean_rate - b.mean_rate;
        let allowance = a.ci95_halfwidth.max(b.ci95_halfwidth);
        ok &= gap >= -allowance;
        parts.push(format!("{}-{} {gap:+.3} (>= -{allowance:.3})", w[0], w[1]));
    }
    let means: Vec<String> = order
        .iter()
        .map(|&m| format!("{m} {:.3}/{:.3}", row(m).mean_rate, row(m).mean_slot1_sum))
        .collect();
    let c2 = Outcome {
        pass: ok,
        detail: format!("{}; system/slot-1-sum means: {}", parts.join(", "), means.join(", ")),
    };
    (c1, c2)
}

fn placement() -> Outcome {
    let cfg = ExperimentConfig {
        trials: 300,
        n_elements: 80,
        d_min: 10.0,
        d_max: 90.0,
        d_step: 10.0,
        methods: Some(vec![Method::Gpi]),
        rate_metric: RateMetric::System,
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let rows = run_distance_sweep(&cfg).expect("distance sweep");
    let elapsed = start.elapsed();
    let best = |f: fn(&SweepRow) -> f64| {
        rows.iter()
            .max_by(|a, b| f(a).total_cmp(&f(b)))
            .map(|r| r.sweep_value)
            .unwrap()
    };
    let arg = best(|r| r.mean_rate);
    let arg_sum = best(|r| r.mean_slot1_sum);
    let curve: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.0}:{:.3}", r.sweep_value, r.mean_rate))
        .collect();
    Outcome {
        pass: (40.0..=60.0).contains(&arg) && within(Duration::from_secs(600), elapsed),
        detail: format!(
            "argmax d = {arg} (need 40..60) [{}]; slot-1 sum argmax d = {arg_sum}; {:.1} s (limit 600 s)",
            curve.join(" "),
            elapsed.as_secs_f64()
        ),
    }
}

/// Criteria 4 and 5 share the GPI runs at N = 16 and 1024.
fn convergence_and_doubling() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        trials: 100,
        element_counts: Some(vec![16, 1024]),
        d_fixed: 50.0,
        ..ExperimentConfig::default()
    };
    let runs = run_convergence(&cfg, Execution::default()).expect("convergence runs");
    let large: Vec<_> = runs.iter().filter(|r| r.n == 1024).collect();
    let small: Vec<_> = runs.iter().filter(|r| r.n == 16).collect();

    let fast = large
        .iter()
        .filter(|r| r.result.converged && r.result.iterations <= 10)
        .count();
    let monotone = runs
        .iter()
        .all(|r| r.result.objective_trace.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9)));
    let mut iters: Vec<usize> = large.iter().map(|r| r.result.iterations).collect();
    iters.sort_unstable();
    let c4 = Outcome {
        pass: fast * 10 >= large.len() * 9 && monotone && large.len() == 100,
        detail: format!(
            "{fast}/{} runs converge in <= 10 iterations (median {}, max {}); traces non-decreasing: {monotone}",
            large.len(),
            iters[iters.len() / 2],
            iters[iters.len() - 1]
        ),
    };

    let mean_final = |rs: &[&irs_twr::sim::ConvergenceRun]| {
        rs.iter().map(|r| *r.rates.last().unwrap()).sum::<f64>() / rs.len() as f64
    };
    let (hi, lo) = (mean_final(&large), mean_final(&small));
    let ratio = hi / lo;

    let sweep = run_size_sweep(&ExperimentConfig {
        methods: Some(vec![Method::Gpi]),
        ..cfg.clone()
    })
    .expect("size sweep");
    let sys_ratio = mean_of(&sweep, Method::Gpi, 1024.0).mean_system / mean_of(&sweep, Method::Gpi, 16.0).mean_system;
    let c5 = Outcome {
        pass: (1.5..=2.5).contains(&ratio) && small.len() >= 100,
        detail: format!(
            "slot-1 sum rate N=1024/N=16 = {hi:.3}/{lo:.3} = {ratio:.3} (need 1.5..2.5) over {} paired trials; system rate ratio {sys_ratio:.3}",
            small.len()
        ),
    };
    (c4, c5)
}

fn oracle_suite() -> Outcome {
    let start = Instant::now();
    let mut worst = [f64::INFINITY; 3];
    let mut worst_slack = f64::NEG_INFINITY;
    let mut failures = 0;
    let mut count = 0;
    for (n, m) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
        for i in 0..50u64 {
            let seed = 10_000 * n as u64 + 1000 * m as u64 + i;
            let d = 10.0 + 10.0 * (i % 9) as f64;
            let r = common::oracle_ratios(&common::instance(n, m, d, seed), seed);
            count += 1;
            worst[0] = worst[0].min(r.gpi_sum);
            worst[1] = worst[1].min(r.maxmin_min);
            worst[2] = worst[2].min(r.evd_power);
            worst_slack = worst_slack.max(r.maxmin_slack);
            if r.gpi_sum < 0.97 || r.maxmin_min < 0.90 || r.maxmin_slack > 1e-6 || r.evd_power < 0.90 {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: failures == 0 && within(Duration::from_secs(120), elapsed),
        detail: format!(
            "{}/{count} instances pass; worst gpi {:.4} (>= 0.97), maxmin {:.4} (>= 0.90), max achieved - t* {worst_slack:.2e} (<= 1e-6), evd {:.4} (>= 0.90); {:.1} s (limit 120 s)",
            count - failures,
            worst[0],
            worst[1],
            worst[2],
            elapsed.as_secs_f64()
        ),
    }
}

fn invariant_suite() -> Outcome {
    let start = Instant::now();
    let sizes = (1usize..=16, 1usize..=4, 1.0f64..99.0, any::<u64>());
    type Property = Box<dyn Fn(usize, usize, f64, u64) -> common::Check>;
    let checks: Vec<(&str, Property)> = vec![
        (
            "hermitian/psd",
            Box::new(|n, m, d, s| common::check_matrices(&common::instance(n, m, d, s))),
        ),
        (
            "quadratic form",
            Box::new(|n, m, d, s| {
                common::check_quadratic_form(&common::instance(n, m, d, s), &mut ChaCha8Rng::seed_from_u64(s ^ 1))
            }),
        ),
        (
            "augmented channel",
            Box::new(|n, m, d, s| {
                common::check_augmented(&common::instance(n, m, d, s), &mut ChaCha8Rng::seed_from_u64(s ^ 2))
            }),
        ),
        (
            "rate product",
            Box::new(|n, m, d, s| {
                common::check_rate_product(&common::instance(n, m, d, s), &mut ChaCha8Rng::seed_from_u64(s ^ 3))
            }),
        ),
        (
            "extraction phase",
            Box::new(|n, _, _, s| common::check_extraction_phase(n, &mut ChaCha8Rng::seed_from_u64(s))),
        ),
        (
            "sdp validity",
            Box::new(|n, m, d, s| common::check_sdp_solution(&common::instance(n, m, d, s), s)),
        ),
        (
            "optimizer outputs",
            Box::new(|n, m, d, s| common::check_optimizer_outputs(&common::instance(n, m, d, s))),
        ),
        (
            "seed determinism",
            Box::new(|n, m, _, s| common::check_seed_determinism(n, m, s)),
        ),
    ];
    let mut failed = Vec::new();
    for (name, check) in &checks {
        // a runner only runs its cases once, so each property gets its own
        let mut runner = TestRunner::new(Config {
            cases: 200,
            failure_persistence: None,
            ..Config::default()
        });
        let res = runner.run(&sizes, |(n, m, d, s)| check(n, m, d, s).map_err(TestCaseError::fail));
        if let Err(e) = res {
            failed.push(format!("{name}: {e}"));
        }
    }
    let elapsed = start.elapsed();
    let pass = failed.is_empty() && within(Duration::from_secs(60), elapsed);
    let detail = if failed.is_empty() {
        format!(
            "{} properties x 200 cases; {:.1} s (limit 60 s)",
            checks.len(),
            elapsed.as_secs_f64()
        )
    } else {
        format!("{}; {:.1} s", failed.join("; "), elapsed.as_secs_f64())
    };
    Outcome { pass, detail }
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let (c1, c2) = gain_and_ordering();
    results.push((1, "gain over random phase", c1));
    results.push((2, "method ordering", c2));
    results.push((3, "mid placement peak", placement()));
    let (c4, c5) = convergence_and_doubling();
    results.push((4, "GPI convergence", c4));
    results.push((5, "rate doubling 16 -> 1024", c5));
    results.push((6, "grid oracles", oracle_suite()));
    results.push((7, "invariants", invariant_suite()));

    let mut all = true;
    for (k, name, o) in &results {
        all &= o.pass;
        println!(
            "{} criterion {k} ({name}): {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let passed = results.iter().filter(|r| r.2.pass).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
