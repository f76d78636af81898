//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use cubemap_core::frostman::{antichain_oracle, max_mass, verify_frostman};
use cubemap_core::holder_map::HolderMap;
use cubemap_core::ifs::{
    bilipschitz_estimate, bilipschitz_exhaustive, box_dim_estimate, coding_tree, point_cloud,
    IfsSpec,
};
use cubemap_core::metric_core::{
    gauge_identity_residual, remetrize_gauge, FiniteMetricSpace, GaugeFunction, SequenceMetric,
};
use cubemap_core::monotone::{monotonicity_constant, search_min_c, SearchOptions};
use cubemap_core::peano::HilbertCurve;
use cubemap_core::pipeline::{build_pipeline, PipelineConfig, Source};
use cubemap_core::report::to_json;
use cubemap_core::ultra_tree::{build_partition_tree, lex_order, DiamTree, SelfSimilarRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn uniform(b: usize, r: f64, depth: usize) -> DiamTree {
    SelfSimilarRule::uniform(b, r, 1.0, depth).unwrap().into()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_c, mut mismatches) = (1.0f64, 0usize);
    for _ in 0..200 {
        let n = rng.random_range(1..=64);
        let space = common::random_ultrametric(&mut rng, n);
        let tree = build_partition_tree(&space).unwrap();
        let order = lex_order(&tree.tree).unwrap().order;
        mismatches += common::interval_mismatches(&space, order.sequence());
        worst_c = worst_c.max(monotonicity_constant(&space, &order).unwrap().c);
    }
    outcome(
        mismatches == 0 && worst_c == 1.0,
        format!("200 random ultrametrics (n <= 64): max C = {worst_c}, {mismatches} pairs with diam([a,b]) != d(a,b)"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut disagreements = 0;
    for i in 0..200 {
        let n = rng.random_range(1..=7);
        let space = if i % 2 == 0 {
            common::random_ultrametric(&mut rng, n)
        } else {
            let dim = rng.random_range(1..=3);
            common::random_euclidean(&mut rng, n, dim)
        };
        let exact = search_min_c(&space, SearchOptions::default()).unwrap().c;
        if exact != common::brute_force(&space) {
            disagreements += 1;
        }
    }
    let square = FiniteMetricSpace::euclidean(&[
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 1.0],
        vec![0.0, 1.0],
    ])
    .unwrap();
    let c = search_min_c(&square, SearchOptions::default()).unwrap().c;
    let square_err = (c - 2f64.sqrt()).abs();
    outcome(
        disagreements == 0 && square_err <= 1e-12,
        format!("200 random spaces (n <= 7): {disagreements} disagreements with n! enumeration; unit square C = {c} (error {square_err:.1e})"),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_gap, mut oracle_gap, mut failed_checks) = (0.0f64, 0.0f64, 0usize);
    let mut suite = Vec::new();
    for _ in 0..100 {
        let tree = common::random_tree(&mut rng, 12);
        let s = rng.random_range(0.3..2.5);
        let measure = max_mass(&tree, s).unwrap();
        let by_oracle = antichain_oracle(&tree, s).unwrap();
        let by_subsets = common::antichain_min(&tree, s);
        worst_gap = worst_gap.max((measure.total() - by_subsets).abs());
        oracle_gap = oracle_gap.max((by_oracle - by_subsets).abs());
        if !verify_frostman(&tree, &measure, s).unwrap().ok {
            failed_checks += 1;
        }
        suite.push((tree, s));
    }
    for (b, r, depth, s) in [(2, 0.5, 5, 1.0), (2, 0.5, 5, 1.5), (2, 0.5, 4, 2.0), (3, 0.3, 4, 0.8)] {
        suite.push((uniform(b, r, depth), s));
    }
    let cantor = coding_tree(&IfsSpec::middle_thirds(), 6).unwrap();
    suite.push((cantor, 2f64.ln() / 3f64.ln()));
    for (tree, s) in &suite[100..] {
        if !verify_frostman(tree, &max_mass(tree, *s).unwrap(), *s).unwrap().ok {
            failed_checks += 1;
        }
    }

    // μ(E) <= (diam E)^s for random leaf subsets. A truncation leaf stands for
    // a set of its own diameter.
    let mut subset_failures = 0;
    for i in 0..10_000 {
        let (tree, s) = &suite[i % suite.len()];
        let leaves = tree.leaf_addresses(1 << 12).unwrap();
        let p = rng.random_range(0.02..0.6);
        let chosen: Vec<_> = leaves.iter().filter(|_| rng.random_bool(p)).collect();
        let chosen = if chosen.is_empty() {
            vec![&leaves[rng.random_range(0..leaves.len())]]
        } else {
            chosen
        };
        let measure = max_mass(tree, *s).unwrap();
        let mass: f64 = chosen
            .iter()
            .map(|a| measure.mass_at(tree, a.digits()).unwrap())
            .sum();
        let mut diam = chosen
            .iter()
            .map(|a| tree.node_diam(a.digits()).unwrap())
            .fold(0.0f64, f64::max);
        for (x, a) in chosen.iter().enumerate() {
            for b in &chosen[x + 1..] {
                diam = diam.max(tree.tree_distance(a.digits(), b.digits()).unwrap());
            }
        }
        if mass > diam.powf(*s) * (1.0 + 1e-12) {
            subset_failures += 1;
        }
    }
    outcome(
        worst_gap <= 1e-12 && oracle_gap <= 1e-12 && failed_checks == 0 && subset_failures == 0,
        format!(
            "100 random trees (<= 12 nodes): max |max_mass - antichain| = {worst_gap:.1e} (library oracle off by {oracle_gap:.1e}); {failed_checks} failed verifications; {subset_failures}/10000 subset violations"
        ),
    )
}

fn criterion_4() -> Outcome {
    let g = HolderMap::new(uniform(2, 0.5, 10), 1.0).unwrap();
    let mut expansion_mismatches = 0;
    for w in 0u32..1024 {
        let addr: Vec<u32> = (0..10).map(|i| (w >> (9 - i)) & 1).collect();
        if g.eval_g(&addr).unwrap().value != w as f64 / 1024.0 {
            expansion_mismatches += 1;
        }
    }
    let s_cantor = 2f64.ln() / 3f64.ln();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut suite: Vec<(String, DiamTree, f64)> = vec![
        ("b=2 r=1/2 s=1 depth 8".into(), uniform(2, 0.5, 8), 1.0),
        ("b=4 r=1/4 s=1 depth 4".into(), uniform(4, 0.25, 4), 1.0),
        ("b=3 r=1/3 s=1 depth 5".into(), uniform(3, 1.0 / 3.0, 5), 1.0),
        ("b=16 r=1/4 s=2 depth 3".into(), uniform(16, 0.25, 3), 2.0),
        ("b=2 r=1/2 s=1.5 depth 8".into(), uniform(2, 0.5, 8), 1.5),
        (
            "cantor depth 8".into(),
            coding_tree(&IfsSpec::middle_thirds(), 8).unwrap(),
            s_cantor,
        ),
        (
            "ratios (1/2, 1/4) depth 8".into(),
            SelfSimilarRule::with_ratios(vec![0.5, 0.25], 1.0, 8).unwrap().into(),
            0.6942419136306174,
        ),
    ];
    for i in 0..20 {
        let s = rng.random_range(0.3..2.5);
        suite.push((format!("random tree {i}"), common::random_tree(&mut rng, 40), s));
    }
    let mut worst_excess = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (name, tree, s) in suite {
        let g = HolderMap::new(tree, s).unwrap();
        let est = g.holder_exhaustive().unwrap();
        let excess = est.max_ratio - g.holder_constant_bound();
        worst_excess = worst_excess.max(excess);
        if excess > 1e-9 {
            failures.push(name);
        }
    }
    outcome(
        expansion_mismatches == 0 && failures.is_empty(),
        format!(
            "{expansion_mismatches}/1024 depth-10 addresses differ from the binary expansion; 27 suite trees exhaustive, max(ratio - C^s) = {worst_excess:.3e}, failing: {failures:?}"
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut coverage_failures = Vec::new();
    for (k, max_m) in [(2usize, 6usize), (3, 4), (1, 16)] {
        for m in 1..=max_m {
            if !HilbertCurve::new(k, m).unwrap().coverage_check().unwrap() {
                coverage_failures.push((k, m));
            }
        }
    }
    let line = HilbertCurve::new(1, 16).unwrap();
    let identity = (0..1u128 << 16).all(|i| {
        line.cell_at_index(i).unwrap().coords == vec![i as u64]
            && line.eval_corner(i as f64 / 65536.0).unwrap() == vec![i as f64 / 65536.0]
    });
    let exhaustive6 = HilbertCurve::new(2, 6).unwrap().holder_exhaustive().unwrap().max_ratio;
    let pairs = 1_000_000;
    let k6 = HilbertCurve::new(2, 6).unwrap().holder_estimate(pairs, 5).unwrap().max_ratio;
    let k8 = HilbertCurve::new(2, 8).unwrap().holder_estimate(pairs, 5).unwrap().max_ratio;
    let change = (k8 - k6).abs() / k6;
    outcome(
        coverage_failures.is_empty() && identity && change < 0.05 && exhaustive6 <= 4.0,
        format!(
            "coverage failures {coverage_failures:?}; k=1 identity {identity}; k=2 K_h exhaustive m=6 {exhaustive6:.6}, sampled ({pairs} pairs) m=6 {k6:.6}, m=8 {k8:.6}, change {:.2}%",
            100.0 * change
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut cfg = PipelineConfig::new(Source::Tree(uniform(16, 0.25, 1)), 2, 6);
    cfg.s = Some(2.0);
    cfg.pairs = 100_000;
    cfg.seed = 6;
    cfg.coverage_depth = 6;
    let report = build_pipeline(cfg).unwrap().verify().unwrap();
    let k_h = report.curve_holder.measured;
    outcome(
        report.coverage_fraction == 1.0
            && report.violations == 0
            && report.empirical_constant <= k_h
            && report.ok,
        format!(
            "b=16 r=1/4 s=2 k=2: coverage at q=6 = {}, Lip(F) over {} pairs = {:.6}, measured K_h = {k_h:.6}, predicted {:.6}, {} violations",
            report.coverage_fraction, report.pairs, report.empirical_constant, report.predicted_bound, report.violations
        ),
    )
}

fn criterion_7() -> Outcome {
    let cantor = IfsSpec::middle_thirds();
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for depth in 1..=8 {
        let tree = coding_tree(&cantor, depth).unwrap();
        let est = bilipschitz_exhaustive(&cantor, &tree).unwrap();
        lo = lo.min(est.min_ratio);
        hi = hi.max(est.max_ratio);
    }
    let sandwich = lo >= 1.0 / 3.0 - 1e-12 && hi <= 1.0 + 1e-12;

    let cloud = point_cloud(&cantor, 10).unwrap();
    let scales: Vec<f64> = (2..=8).map(|j| 3f64.powi(-j)).collect();
    let cantor_dim = box_dim_estimate(&cloud, &scales).unwrap().slope;
    let cantor_ok = (cantor_dim - 0.6309).abs() <= 0.05;

    let specs: Vec<(&str, IfsSpec, usize)> = vec![
        ("middle thirds", cantor.clone(), 12),
        (
            "planar dust 4 x 1/4",
            IfsSpec::homogeneous(0.25, vec![vec![0.0, 0.0], vec![0.75, 0.0], vec![0.0, 0.75], vec![0.75, 0.75]]).unwrap(),
            7,
        ),
        (
            "line 3 x 1/5",
            IfsSpec::homogeneous(0.2, vec![vec![0.0], vec![0.4], vec![0.8]]).unwrap(),
            9,
        ),
        (
            "planar 5 x 1/4",
            IfsSpec::homogeneous(0.25, vec![vec![0.0, 0.0], vec![0.75, 0.0], vec![0.0, 0.75], vec![0.75, 0.75], vec![0.375, 0.375]]).unwrap(),
            6,
        ),
        (
            "cube corners 8 x 1/3",
            IfsSpec::homogeneous(
                1.0 / 3.0,
                (0..8)
                    .map(|c| (0..3).map(|a| if c >> a & 1 == 1 { 2.0 / 3.0 } else { 0.0 }).collect())
                    .collect(),
            )
            .unwrap(),
            5,
        ),
    ];
    let mut worst = 0.0f64;
    for (_, spec, depth) in &specs {
        let r = spec.uniform_ratio().unwrap();
        let cloud = point_cloud(spec, *depth).unwrap();
        let scales: Vec<f64> = (1..*depth as i32).map(|j| r.powi(j)).collect();
        let est = box_dim_estimate(&cloud, &scales).unwrap().slope;
        let want = (spec.maps().len() as f64).ln() / (1.0 / r).ln();
        worst = worst.max((est - want).abs());
    }
    outcome(
        sandwich && cantor_ok && worst <= 0.05,
        format!(
            "cantor ratios over exhaustive depth <= 8 pairs in [{lo:.6}, {hi:.6}]; box dim {cantor_dim:.4}; max |box - log b/log(1/r)| over 5 specs = {worst:.4}"
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let rate: f64 = rng.random_range(0.2..0.9);
        let depth = rng.random_range(5..40);
        let g0 = SequenceMetric::tabulate(depth, |m| rate.powi(m as i32 - 1)).unwrap();
        let phi0 = GaugeFunction::power(rng.random_range(0.2..3.0)).unwrap();
        let phi = GaugeFunction::power(rng.random_range(0.2..3.0)).unwrap();
        let g = remetrize_gauge(&g0, &phi0, &phi).unwrap();
        worst = worst.max(gauge_identity_residual(&g, &g0, &phi0, &phi));
    }
    outcome(
        worst <= 1e-12,
        format!("20 random power-family triples: max |phi(g) - phi0(g0)| = {worst:.2e}"),
    )
}

/// A cross-section of every module's seeded output, serialized.
fn suite_report(seed: u64) -> String {
    let mut reports = Vec::new();
    let cantor_s = 2f64.ln() / 3f64.ln();
    for (source, k, s, depth) in [
        (Source::Tree(uniform(16, 0.25, 1)), 2, 2.0, 4),
        (Source::Tree(uniform(2, 0.5, 1)), 1, 1.0, 10),
        (Source::Ifs(IfsSpec::middle_thirds()), 1, cantor_s, 8),
        (Source::Tree(uniform(8, 0.5, 1)), 3, 3.0, 4),
    ] {
        let mut cfg = PipelineConfig::new(source, k, depth);
        cfg.s = Some(s);
        cfg.pairs = 5000;
        cfg.seed = seed;
        cfg.coverage_depth = 2;
        let pipeline = build_pipeline(cfg).unwrap();
        reports.push(serde_json::to_value(pipeline.verify().unwrap()).unwrap());
    }
    let g = HolderMap::new(uniform(3, 0.25, 9), 0.9).unwrap();
    let curve = HilbertCurve::new(3, 10).unwrap();
    let cantor = IfsSpec::middle_thirds();
    let tree = coding_tree(&cantor, 9).unwrap();
    let doc = json!({
        "pipelines": reports,
        "g": g.holder_estimate(5000, seed).unwrap(),
        "curve": curve.holder_estimate(5000, seed).unwrap(),
        "bilipschitz": bilipschitz_estimate(&cantor, &tree, 5000, seed).unwrap(),
    });
    to_json(&doc).unwrap()
}

fn criterion_9() -> Outcome {
    let first = suite_report(9);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let second = pool.install(|| suite_report(9));
    let other = suite_report(10);
    outcome(
        first == second && first != other,
        format!(
            "{} bytes; identical across runs and thread counts: {}; a different seed changes the report: {}",
            first.len(),
            first == second,
            first != other
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("lexicographic order is 1-monotone", criterion_1),
        ("exact order search matches brute force", criterion_2),
        ("Frostman duality and set-level caps", criterion_3),
        ("Hölder map values and constants", criterion_4),
        ("Hilbert curve coverage and stability", criterion_5),
        ("end-to-end Lipschitz surjection", criterion_6),
        ("IFS bi-Lipschitz bridge and dimension", criterion_7),
        ("gauge identity", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        println!(
            "criterion {} [{name}]: {} ({:.1}s) {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {}/9 criteria pass", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
