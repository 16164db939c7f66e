//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test -p empcp-core --test acceptance`.

mod common;

use std::time::Instant;

use common::{max_abs_diff, random_dirs, random_sample, random_xi};
use empcp::datagen::{BlockSpec, CopulaSpec, MarginSpec, ScenarioSpec};
use empcp::montecarlo::{run_experiment, ExperimentResult, ExperimentSpec};
use empcp::multiplier::MultiplierKernel;
use empcp::oracle::{oracle_half_space_display, oracle_profile, oracle_replicate_profile};
use empcp::{
    build_orthant_table, build_projection_table, estimate_changepoint, profile, profile_s,
    profile_t, profile_u, profile_v, Combiner, DirectionSet, Family, Method, Sample, StatFamily,
};

const BASE_SEED: u64 = 0x5eed_2012;

struct Outcome {
    pass: bool,
    detail: String,
}

fn s_max() -> StatFamily {
    StatFamily::new(Family::S, Combiner::Max)
}

fn t_mean() -> StatFamily {
    StatFamily::new(Family::T, Combiner::Mean)
}

fn normal(mean: f64, sd: f64) -> BlockSpec {
    BlockSpec::univariate(MarginSpec::normal(mean, sd).unwrap())
}

fn pct(res: &ExperimentResult, stat: StatFamily, method: Method) -> f64 {
    res.get(stat, method).expect("row present").rejection_pct
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let seed = BASE_SEED + case;
        let n = 2 + (case as usize * 13) % 49;
        let d = 1 + case as usize % 3;
        let m = if case % 2 == 0 { 1 } else { 8 };
        let ties = case % 5 == 0;
        let s = random_sample(seed, n, d, ties);
        let dirs = random_dirs(seed, d, m);
        let xi = random_xi(seed, n);
        for family in Family::ALL {
            let fast = profile(&s, family, Some(&dirs)).unwrap();
            let slow = oracle_profile(&s, family, Some(&dirs));
            worst = worst.max(max_abs_diff(fast.values(), slow.values()));
        }
        let orthants = MultiplierKernel::for_orthants(&build_orthant_table(&s));
        let halves = MultiplierKernel::for_half_spaces(&build_projection_table(&s, &dirs).unwrap());
        for method in [Method::Hat, Method::Check] {
            for family in Family::ALL {
                let kernel = if family.uses_half_spaces() { &halves } else { &orthants };
                let (sq, sup) = kernel.replicate_profiles(&xi, method).unwrap();
                let fast = if family.is_squared() { sq } else { sup };
                let slow = if family.uses_half_spaces() {
                    oracle_half_space_display(&s, family, &dirs, &xi, method)
                } else {
                    oracle_replicate_profile(&s, family, Some(&dirs), &xi, method)
                };
                worst = worst.max(max_abs_diff(&fast, &slow));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: worst <= 1e-12 && secs < 60.0,
        detail: format!("50 cases, max |fast - oracle| = {worst:.3e} (tol 1e-12), {secs:.1}s (limit 60s)"),
    }
}

fn univariate_collapse() -> Outcome {
    let dirs = DirectionSet::univariate();
    let mut mismatches = 0;
    for case in 0..20u64 {
        let s = random_sample(BASE_SEED + case, 10 + case as usize * 4, 1, case % 4 == 0);
        let o = build_orthant_table(&s);
        let p = build_projection_table(&s, &dirs).unwrap();
        if profile_u(&p).values() != profile_s(&o).values() {
            mismatches += 1;
        }
        if profile_v(&p).values() != profile_t(&o).values() {
            mismatches += 1;
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("20 samples, {mismatches} bitwise mismatches between U/S and V/T"),
    }
}

fn rank_invariance() -> Outcome {
    let mut mismatches = 0;
    for case in 0..20u64 {
        let d = 1 + case as usize % 3;
        let n = 30;
        let s = random_sample(BASE_SEED + case, n, d, case % 3 == 0);
        let warped: Vec<f64> = s
            .as_flat()
            .iter()
            .enumerate()
            .map(|(i, &x)| match i % d {
                0 => (x / 2.0).exp() - 4.0,
                1 => x.powi(3) + x,
                _ => 10.0 * x.tanh(),
            })
            .collect();
        let t = Sample::from_flat(n, d, warped).unwrap();
        for family in [Family::S, Family::T] {
            if profile(&s, family, None).unwrap().values()
                != profile(&t, family, None).unwrap().values()
            {
                mismatches += 1;
            }
        }
    }
    Outcome {
        pass: mismatches == 0,
        detail: format!("20 samples, {mismatches} profiles changed under increasing transforms"),
    }
}

fn level() -> Outcome {
    let scenario = ScenarioSpec::null(100, normal(0.0, 1.0), BASE_SEED).unwrap();
    let spec = ExperimentSpec::new(
        scenario,
        vec![(s_max(), Method::Check), (t_mean(), Method::Check)],
        500,
        500,
        0.05,
    )
    .unwrap();
    let res = run_experiment(&spec).unwrap();
    let (s, t) = (pct(&res, s_max(), Method::Check), pct(&res, t_mean(), Method::Check));
    let band = 3.5..=7.5;
    Outcome {
        pass: band.contains(&s) && band.contains(&t),
        detail: format!("H0 n=100 R=500 N=500: S_max {s:.1}%, T_mean {t:.1}% (band [3.5, 7.5])"),
    }
}

fn power() -> Outcome {
    let run = |post: BlockSpec, stat: StatFamily| {
        let scenario = ScenarioSpec::new(200, 0.5, normal(0.0, 1.0), post, BASE_SEED).unwrap();
        let spec = ExperimentSpec::new(scenario, vec![(stat, Method::Check)], 300, 500, 0.05).unwrap();
        pct(&run_experiment(&spec).unwrap(), stat, Method::Check)
    };
    let shift = run(normal(0.5, 1.0), s_max());
    // The second parameter of N(0, 2) is the standard deviation.
    let scale = run(normal(0.0, 2.0), t_mean());
    let ok_shift = (shift - 86.4).abs() <= 6.0;
    let ok_scale = (scale - 82.5).abs() <= 6.0;
    Outcome {
        pass: ok_shift && ok_scale,
        detail: format!(
            "n=200 t=0.5 R=300 N=500: mean shift S_max {shift:.1}% (target 86.4 +/- 6), \
             variance change T_mean {scale:.1}% (target 82.5 +/- 6)"
        ),
    }
}

fn half_space_superiority() -> Outcome {
    let exp = |rate: f64| MarginSpec::exponential(rate).unwrap();
    let pre = BlockSpec::new(CopulaSpec::independence(), vec![exp(1.0), exp(1.0)]).unwrap();
    let post = BlockSpec::new(CopulaSpec::independence(), vec![exp(0.5), exp(1.0)]).unwrap();
    let scenario = ScenarioSpec::new(100, 0.5, pre, post, BASE_SEED).unwrap();
    let u_max = StatFamily::new(Family::U, Combiner::Max);
    let spec = ExperimentSpec::new(
        scenario,
        vec![(s_max(), Method::Check), (u_max, Method::Check)],
        300,
        500,
        0.05,
    )
    .unwrap();
    let res = run_experiment(&spec).unwrap();
    let (s, u) = (pct(&res, s_max(), Method::Check), pct(&res, u_max, Method::Check));
    Outcome {
        pass: u - s >= 15.0,
        detail: format!("n=100 tau=0 t=0.5 m=8 R=300: U_max {u:.1}% vs S_max {s:.1}% (need gap >= 15)"),
    }
}

fn hat_liberality() -> Outcome {
    let scenario = ScenarioSpec::null(50, normal(0.0, 1.0), BASE_SEED).unwrap();
    let stats = [s_max(), t_mean()];
    let spec = ExperimentSpec::new(
        scenario,
        stats
            .iter()
            .flat_map(|&s| [(s, Method::Hat), (s, Method::Check)])
            .collect(),
        500,
        500,
        0.05,
    )
    .unwrap();
    let res = run_experiment(&spec).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for st in stats {
        let (h, c) = (pct(&res, st, Method::Hat), pct(&res, st, Method::Check));
        pass &= h >= c - 1.0;
        parts.push(format!("{st} hat {h:.1}% vs check {c:.1}%"));
    }
    Outcome {
        pass,
        detail: format!("H0 n=50 R=500: {} (need hat >= check - 1)", parts.join(", ")),
    }
}

fn sim_calibration() -> Outcome {
    let r = 500;
    let se = 100.0 * (0.05f64 * 0.95 / r as f64).sqrt();
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [50, 100] {
        let scenario = ScenarioSpec::null(n, normal(0.0, 1.0), BASE_SEED).unwrap();
        let stats: Vec<_> = StatFamily::all()
            .into_iter()
            .filter(|s| !s.family.uses_half_spaces())
            .map(|s| (s, Method::Sim))
            .collect();
        let spec = ExperimentSpec::new(scenario, stats.clone(), r, 500, 0.05).unwrap();
        let res = run_experiment(&spec).unwrap();
        for (st, _) in stats {
            let p = pct(&res, st, Method::Sim);
            pass &= (p - 5.0).abs() <= 4.0 * se;
            parts.push(format!("n={n} {st} {p:.1}%"));
        }
    }
    Outcome {
        pass,
        detail: format!("{} (need within {:.2} of 5.0)", parts.join(", "), 4.0 * se),
    }
}

fn estimator_accuracy() -> Outcome {
    let n = 200;
    let scenario = ScenarioSpec::new(n, 0.5, normal(0.0, 1.0), normal(3.0, 1.0), BASE_SEED).unwrap();
    let k_star = scenario.change_point();
    let mut hits = [0usize; 2];
    for r in 0..100u64 {
        let s = empcp::datagen::generate(&scenario.with_seed(BASE_SEED ^ r));
        for (slot, family) in [Family::S, Family::T].into_iter().enumerate() {
            let k = estimate_changepoint(&profile(&s, family, None).unwrap());
            if k.abs_diff(k_star) <= 10 {
                hits[slot] += 1;
            }
        }
    }
    Outcome {
        pass: hits.iter().all(|&h| h >= 90),
        detail: format!(
            "N(0,1) -> N(3,1) at k*={k_star}, n={n}: |k_hat - k*| <= 10 in {}/100 (S), {}/100 (T), need 90",
            hits[0], hits[1]
        ),
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 oracle equivalence", oracle_equivalence),
        ("2 univariate collapse", univariate_collapse),
        ("3 rank invariance", rank_invariance),
        ("4 level", level),
        ("5 power", power),
        ("6 half-space superiority", half_space_superiority),
        ("7 hat liberality", hat_liberality),
        ("8 uniform-simulation calibration", sim_calibration),
        ("9 change-point estimator", estimator_accuracy),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {name}: {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        if !outcome.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
