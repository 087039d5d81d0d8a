use std::time::{Duration, Instant};

use pentabend::transition::{transition_times, QuadraticData};
use pentabend_cli::config::{RunConfig, FD_TOLERANCES};
use pentabend_cli::verify::{run_suite, Context, Status};

/// Runtime budgets per criterion, generous against the optimized test profile.
const BUDGETS: [(u8, u64); 4] = [(2, 10), (3, 30), (10, 60), (11, 120)];

#[test]
fn acceptance_criteria() {
    let ctx = Context::from_config(&RunConfig::default());
    let started = Instant::now();
    let mut failures = Vec::new();
    for id in 1..=12 {
        let t0 = Instant::now();
        let out = run_suite(id, &ctx);
        let elapsed = t0.elapsed();
        println!("{} in {:.3}s", out.summary_line(), elapsed.as_secs_f64());
        if out.status != Status::Pass {
            failures.push(id);
        }
        if let Some((_, secs)) = BUDGETS.iter().find(|(k, _)| *k == id) {
            assert!(elapsed < Duration::from_secs(*secs), "criterion {id} took {elapsed:?}");
        }
    }
    let total = started.elapsed();
    println!("total {:.2}s", total.as_secs_f64());
    assert!(total < Duration::from_secs(300));
    assert!(failures.is_empty(), "failing criteria: {failures:?}");
}

#[test]
fn closed_form_transition_times_are_fast() {
    let h = pentabend::geom::TheoremHypotheses::from_slice(&[3.0, 1.0, 4.0, 2.0, 3.0]).unwrap();
    let t0 = Instant::now();
    let times = transition_times(&h).unwrap();
    let q = QuadraticData::new(&h);
    let elapsed = t0.elapsed();
    assert!(elapsed < Duration::from_millis(1), "{elapsed:?}");
    assert!(times.0 > 0.0 && q.delta == 1152.0);
}

#[test]
fn tightened_fd_tolerances_fail() {
    for name in FD_TOLERANCES {
        let mut cfg = RunConfig::default();
        cfg.tolerances.insert(name.to_string(), 1e-15);
        let ctx = Context::from_config(&cfg);
        let id = match *name {
            "matrices" => 2,
            "chi" => 3,
            "field" => 7,
            "rank1" => 10,
            _ => unreachable!(),
        };
        let out = run_suite(id, &ctx);
        assert_eq!(out.status, Status::Fail, "{}", out.summary_line());
    }
}

#[test]
fn failing_hypotheses_are_skipped_not_failed() {
    let cfg = RunConfig {
        r: vec![3.0, 1.0, 4.0, 3.5, 3.0],
        ..RunConfig::default()
    };
    let ctx = Context::from_config(&cfg);
    for id in [1, 5, 11] {
        assert_eq!(run_suite(id, &ctx).status, Status::Skipped);
    }
}
