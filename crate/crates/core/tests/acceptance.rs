// SPDX-License-Identifier: MIT OR Apache-2.0

//! Acceptance checks at pinned tolerances. Each check prints one
//! `criterion N: PASS|FAIL ...` line; run with `--nocapture` to see them.

mod common;

use std::sync::OnceLock;
use std::time::Instant;

use common::{brute_hausdorff, direct_q, hand_enumeration, naive_gram, Lcg};
use frbs_core::detect::q_profile;
use frbs_core::evaluate::{detection_summary, DetectionSummary};
use frbs_core::inference::{block_variance, quantile, simulate_argmin, simulate_argmin_with_steps};
use frbs_core::inference::default_walk_steps;
use frbs_core::kernel::gram;
use frbs_core::regress::fit_slope;
use frbs_core::segment::w_curve;
use frbs_core::simulate::{generate, scenario_presets, ScenarioSpec};
use frbs_core::{
    hausdorff, seeded_intervals, sobolev_kernel, CvGrid, DetectorConfig, EvalReport, FeatureDesign,
    KernelMatrix, LambdaRule, Pipeline, Segment, SobolevKernel,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn report(id: u32, pass: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

/// One tuned pipeline run on a simulated scenario, reduced to metrics.
fn replicate(name: &str, n: usize, seed: u64) -> EvalReport {
    let spec = scenario_presets(name, n, 1.0, seed).unwrap();
    let (series, truth) = generate(&spec).unwrap();
    let pipeline = Pipeline::new(sobolev_kernel().as_ref(), &series).unwrap();
    let config = DetectorConfig {
        seed,
        ..DetectorConfig::default()
    };
    let rep = pipeline.run_tuned(&series, &config, &CvGrid::default()).unwrap();
    let intervals: Option<Vec<(f64, f64)>> = rep
        .changes
        .iter()
        .map(|c| c.ci.as_ref().map(|ci| (ci.lo, ci.hi)))
        .collect();
    EvalReport::new(
        &rep.preliminary_locations(),
        &rep.refined_locations(),
        &truth.change_points,
        n,
        intervals.as_deref(),
    )
}

fn scenario1_runs() -> &'static (DetectionSummary, f64) {
    static RUNS: OnceLock<(DetectionSummary, f64)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let reports: Vec<EvalReport> = (0..50).map(|r| replicate("S1", 400, 1000 + r)).collect();
        (detection_summary(&reports).unwrap(), start.elapsed().as_secs_f64())
    })
}

#[test]
fn criterion_1_scan_curve() {
    let start = Instant::now();
    let rule = LambdaRule::constant(0.2);
    let mut located = 0;
    let mut unimodal = 0;
    let seeds = 20;
    for seed in 0..seeds {
        let spec = scenario_presets("S1", 200, 1.0, seed).unwrap();
        let (series, _) = generate(&spec).unwrap();
        let kmat = KernelMatrix::new(&SobolevKernel, series.grid()).unwrap();
        let design = FeatureDesign::new(&series, &kmat).unwrap();
        let curve = w_curve(&design, Segment { start: 0, end: 200 }, &rule, 10).unwrap();
        let (t_max, w_max) = curve
            .iter()
            .copied()
            .fold((0, f64::NEG_INFINITY), |acc, (t, w)| if w > acc.1 { (t, w) } else { acc });
        if t_max.abs_diff(100) <= 5 {
            located += 1;
        }
        let rival = curve.windows(3).any(|w| {
            let (t, v) = w[1];
            v >= w[0].1 && v >= w[2].1 && v > 0.9 * w_max && t.abs_diff(t_max) > 20
        });
        if !rival {
            unimodal += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let need = (0.8 * seeds as f64).ceil() as usize;
    let pass = located >= need && unimodal >= need && secs <= 120.0;
    report(
        1,
        pass,
        format!("argmax within 5 of 100: {located}/{seeds}; unimodal: {unimodal}/{seeds}; {secs:.1}s"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_detection_scenario1() {
    let (s, secs) = scenario1_runs();
    let pass = s.under <= 0.05
        && s.over <= 0.12
        && s.mean_hausdorff_fin <= 0.04
        && s.mean_hausdorff_fin <= s.mean_hausdorff_pre
        && *secs <= 1800.0;
    report(
        2,
        pass,
        format!(
            "under={:.3} over={:.3} dH_pre={:.4}±{:.4} dH_fin={:.4}±{:.4}; {secs:.0}s",
            s.under, s.over, s.mean_hausdorff_pre, s.sd_hausdorff_pre, s.mean_hausdorff_fin, s.sd_hausdorff_fin
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_3_interval_scenario1() {
    let (s, _) = scenario1_runs();
    let coverage = s.coverage.unwrap_or(f64::NAN);
    let width = s.mean_width.unwrap_or(f64::NAN);
    let pass = (0.85..=1.0).contains(&coverage) && (15.0..=60.0).contains(&width);
    report(
        3,
        pass,
        format!(
            "coverage={coverage:.3} mean width={width:.1} over {} exact replications",
            s.exact_replications
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_4_scenario2() {
    let start = Instant::now();
    let reports: Vec<EvalReport> = (0..30).map(|r| replicate("S2", 800, 5000 + r)).collect();
    let s = detection_summary(&reports).unwrap();
    let pass = s.under <= 0.10 && s.mean_hausdorff_fin <= 0.05;
    report(
        4,
        pass,
        format!(
            "under={:.3} over={:.3} dH_fin={:.4}±{:.4}; {:.0}s",
            s.under,
            s.over,
            s.mean_hausdorff_fin,
            s.sd_hausdorff_fin,
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_block_variance_iid() {
    let q = 50;
    let blocks: Vec<usize> = (1..=40).collect();
    let seeds = 20;
    let mut inside = 0;
    let mut values = Vec::new();
    for seed in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<f64> = (0..2 * q * blocks.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let v = block_variance(&z, q, &blocks).unwrap();
        if (3.4..=4.6).contains(&v) {
            inside += 1;
        }
        values.push(v);
    }
    let need = (0.9 * seeds as f64).ceil() as usize;
    let pass = inside >= need;
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    report(
        5,
        pass,
        format!("{inside}/{seeds} estimates in [3.4, 4.6] (need {need}); mean {mean:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_oracle_equivalence() {
    let mut failures: Vec<String> = Vec::new();

    let spec = ScenarioSpec {
        n: 60,
        p: 25,
        change_points: vec![30],
        c_beta: 1.0,
        ar_coeff: 0.3,
        n_terms: 20,
        seed: 42,
    };
    let (series, _) = generate(&spec).unwrap();
    let kmat = KernelMatrix::new(&SobolevKernel, series.grid()).unwrap();

    let seg = Segment { start: 10, end: 40 };
    let g = gram(&kmat, &series, seg).unwrap();
    let naive = naive_gram(&series, seg);
    let gram_err = (0..seg.len())
        .flat_map(|a| (0..seg.len()).map(move |b| (a, b)))
        .map(|(a, b)| (g.entries[(a, b)] - naive[a][b]).abs())
        .fold(0.0, f64::max);
    if gram_err > 1e-10 {
        failures.push(format!("gram error {gram_err:e}"));
    }

    let lambda = 0.2;
    let fit = fit_slope(&series, seg, lambda, &g, &kmat).unwrap();
    let y = &series.responses()[seg.rows()];
    let m = seg.len();
    let normal_err = (0..m)
        .map(|a| {
            let lhs: f64 = (0..m).map(|b| naive[a][b] * fit.coeffs[b]).sum::<f64>()
                + m as f64 * lambda * fit.coeffs[a];
            (lhs - y[a]).abs()
        })
        .fold(0.0, f64::max);
    if normal_err > 1e-8 {
        failures.push(format!("normal equations residual {normal_err:e}"));
    }

    let left = fit.slope.values();
    let right: Vec<f64> = left.iter().map(|v| -0.5 * v + 0.1).collect();
    let profile = q_profile(&series, 5, 55, left, &right);
    let q_err = profile
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let d = direct_q(&series, 5, 6 + i, 55, left, &right);
            (q - d).abs() / d.abs().max(1.0)
        })
        .fold(0.0, f64::max);
    if q_err > 1e-8 {
        failures.push(format!("profile error {q_err:e}"));
    }

    for (n, delta) in [(200, 20), (128, 16), (256, 25)] {
        let set = seeded_intervals(n, delta).unwrap();
        let got: Vec<Vec<(usize, usize)>> = set
            .layers()
            .iter()
            .map(|l| l.iter().map(|s| (s.start, s.end)).collect())
            .collect();
        if got != hand_enumeration(n, delta) {
            failures.push(format!("seeded intervals differ for ({n}, {delta})"));
        }
    }

    let mut rng = Lcg(9);
    for _ in 0..20 {
        let n = 10 + rng.below(1000);
        let pts = |rng: &mut Lcg| {
            let mut v: Vec<usize> = (0..rng.below(6)).map(|_| 1 + rng.below(n - 1)).collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let est = pts(&mut rng);
        let truth = pts(&mut rng);
        if (hausdorff(&est, &truth, n) - brute_hausdorff(&est, &truth, n)).abs() > 1e-15 {
            failures.push(format!("hausdorff differs on {est:?} / {truth:?} / n={n}"));
        }
    }

    for _ in 0..100 {
        let n = 2 + rng.below(10_000);
        let delta = 1 + rng.below(n - 1);
        let count = seeded_intervals(n, delta).unwrap().count();
        if count as f64 > 8.0 * n as f64 / delta as f64 {
            failures.push(format!("count {count} exceeds bound for ({n}, {delta})"));
        }
    }

    let pass = failures.is_empty();
    report(6, pass, if pass { "all oracle checks exact".into() } else { failures.join("; ") });
    assert!(pass);
}

#[test]
fn criterion_7_argmin_generator() {
    let zero = simulate_argmin(0.0, 200, 500, 3);
    let zero_ok = zero.iter().all(|&v| v == 0.0);

    let sigma_sq: f64 = 2.0;
    let sigma = sigma_sq.sqrt();
    let n = 200;
    let mut draws = simulate_argmin(sigma, n, 4000, 11);
    draws.sort_by(f64::total_cmp);
    let asym = (quantile(&draws, 0.25) + quantile(&draws, 0.75)).abs();
    let sym_ok = asym <= 0.2 * sigma_sq;

    let steps = default_walk_steps(sigma, n);
    let mut doubled = simulate_argmin_with_steps(sigma, n, 4000, 11, 2 * steps);
    doubled.sort_by(f64::total_cmp);
    let q_base = quantile(&draws, 0.95);
    let q_long = quantile(&doubled, 0.95);
    let shift = (q_long - q_base).abs() / q_base.abs();
    let trunc_ok = shift < 0.02;

    let pass = zero_ok && sym_ok && trunc_ok;
    report(
        7,
        pass,
        format!(
            "zero draws: {zero_ok}; |q25+q75|={asym:.3} (limit {:.3}); q95 shift {:.2}%",
            0.2 * sigma_sq,
            100.0 * shift
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_8_determinism() {
    let spec = scenario_presets("S1", 400, 1.0, 77).unwrap();
    let (series, _) = generate(&spec).unwrap();
    let config = DetectorConfig {
        seed: 77,
        ..DetectorConfig::default()
    };
    let run = |threads: usize| -> String {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let pipeline = Pipeline::new(sobolev_kernel().as_ref(), &series).unwrap();
            let rep = pipeline.run_tuned(&series, &config, &CvGrid::default()).unwrap();
            serde_json::to_string(&rep).unwrap()
        })
    };
    let base = run(1);
    let again = run(1);
    let mismatched: Vec<usize> = [4, 8].into_iter().filter(|&t| run(t) != base).collect();
    let pass = base == again && mismatched.is_empty();
    report(
        8,
        pass,
        format!("repeat identical: {}; thread counts differing: {mismatched:?}", base == again),
    );
    assert!(pass);
}
