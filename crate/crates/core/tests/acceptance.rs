//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::Instant;

use netmean::dynamics::{self, Verdict, WitnessReport};
use netmean::graph::DiGraph;
use netmean::mapping::{AveragingSystem, Interval};
use netmean::means::MeanSpec;
use netmean::stochastic::{self, RationalMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: {actual} != {expected} (tol {tol})"
    );
}

/// Six vertices, two 2-cycles feeding a path; the root has two components.
fn two_component_graph() -> DiGraph {
    let labels = ["a", "b", "c", "d", "e", "f"].map(String::from).to_vec();
    DiGraph::with_labels(
        6,
        [(0, 3), (3, 0), (1, 2), (2, 1), (3, 4), (1, 4), (4, 5), (2, 5)],
        labels,
    )
    .unwrap()
}

/// Four vertices, an ergodic looped pair feeding a 2-cycle.
fn ergodic_root_graph() -> DiGraph {
    DiGraph::new(
        4,
        [
            (0, 0),
            (1, 1),
            (3, 3),
            (0, 1),
            (1, 0),
            (1, 2),
            (2, 3),
            (3, 2),
        ],
    )
    .unwrap()
}

/// Harmonic/arithmetic pair feeding a harmonic/arithmetic tail; the
/// invariant mean is the geometric mean of the first two coordinates.
fn agm_system() -> AveragingSystem {
    AveragingSystem::new(
        vec![
            MeanSpec::power(-1.0, 2).unwrap(),
            MeanSpec::power(1.0, 2).unwrap(),
            MeanSpec::power(-1.0, 2).unwrap(),
            MeanSpec::power(1.0, 2).unwrap(),
        ],
        vec![vec![0, 1], vec![0, 1], vec![1, 3], vec![2, 3]],
        Interval::positive(),
    )
    .unwrap()
}

/// Two identity sources and two bumped-mean self-readers; from (a, d, b, c)
/// the last two coordinates swap forever.
fn oscillating_system(a: f64, b: f64, c: f64, d: f64) -> AveragingSystem {
    let r = MeanSpec::bumped_default_radius(a, b, c, d);
    let f = MeanSpec::bumped(a, b, c, d, r).unwrap();
    AveragingSystem::new(
        vec![
            MeanSpec::projection(0, 1).unwrap(),
            MeanSpec::projection(0, 1).unwrap(),
            f.clone(),
            f,
        ],
        vec![vec![0], vec![1], vec![0, 1, 2], vec![0, 1, 3]],
        Interval::closed(a, d).unwrap(),
    )
    .unwrap()
}

/// Two frozen anchors and two weighted-arithmetic readers.
fn two_anchor_affine_system() -> AveragingSystem {
    AveragingSystem::new(
        vec![
            MeanSpec::projection(0, 1).unwrap(),
            MeanSpec::projection(0, 1).unwrap(),
            MeanSpec::weighted(vec![1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 3.0 / 9.0]).unwrap(),
            MeanSpec::weighted(vec![2.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 6.0]).unwrap(),
        ],
        vec![vec![0], vec![1], vec![0, 1, 2, 3], vec![0, 1, 2, 3]],
        Interval::reals(),
    )
    .unwrap()
}

#[test]
fn criterion_1_root_computation_on_the_reference_graphs() {
    let start = Instant::now();
    let report = two_component_graph().root();
    let elapsed_one = start.elapsed();
    assert_eq!(report.root, vec![0, 1, 2, 3]);
    let mut components = report.components.clone();
    components.sort();
    assert_eq!(components, vec![vec![0, 3], vec![1, 2]]);
    assert!(!report.is_ergodic);

    let start = Instant::now();
    let report = ergodic_root_graph().root();
    let elapsed_two = start.elapsed();
    assert_eq!(report.root, vec![0, 1]);
    assert_eq!(report.components.len(), 1);
    assert!(report.is_ergodic);

    assert!(elapsed_one.as_micros() < 1_000, "{elapsed_one:?}");
    assert!(elapsed_two.as_micros() < 1_000, "{elapsed_two:?}");
    println!("criterion 1 (root computation, reference graphs): PASS");
}

#[test]
fn criterion_2_root_matches_brute_force_characterization() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0usize;
    while checked < 10_000 {
        let p = rng.gen_range(0..=5usize);
        let density = rng.gen_range(0.05..0.6);
        let edges: Vec<(usize, usize)> = (0..p)
            .flat_map(|u| (0..p).map(move |v| (u, v)))
            .filter(|_| rng.gen_bool(density))
            .collect();
        let g = DiGraph::new(p, edges).unwrap();
        assert!(
            g.verify_root_characterization(12).unwrap(),
            "root mismatch on {:?}",
            g.edges().collect::<Vec<_>>()
        );
        checked += 1;
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "{elapsed:?}");
    println!("criterion 2 (brute-force root characterization, {checked} graphs in {elapsed:?}): PASS");
}

#[test]
fn criterion_3_invariant_mean_of_the_agm_system_is_the_geometric_mean() {
    let sys = agm_system();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..10.0)).collect();
        let start = Instant::now();
        let k = dynamics::estimate_invariant_mean(&sys, &x, 1e-12, 1_000_000).unwrap();
        let elapsed = start.elapsed();
        let expected = (x[0] * x[1]).sqrt();
        let rel = (k - expected).abs() / expected;
        assert!(rel <= 1e-9, "case {case}: {k} vs {expected} (rel {rel})");
        assert!(elapsed.as_millis() < 10, "case {case}: {elapsed:?}");
    }
    println!("criterion 3 (nonlinear common limit = sqrt(xy), 100 starts): PASS");
}

#[test]
fn criterion_4_estimate_depends_on_root_coordinates_only() {
    let sys = agm_system();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..10.0)).collect();
        let base = dynamics::estimate_invariant_mean(&sys, &x, 1e-12, 1_000_000).unwrap();
        for _ in 0..20 {
            let mut resampled = x.clone();
            resampled[2] = rng.gen_range(0.1..10.0);
            resampled[3] = rng.gen_range(0.1..10.0);
            let k = dynamics::estimate_invariant_mean(&sys, &resampled, 1e-12, 1_000_000).unwrap();
            assert!(
                (k - base).abs() < 1e-9,
                "estimate moved under a non-root resample: {k} vs {base}"
            );
        }
    }
    println!("criterion 4 (root-only dependence under 20 resamples): PASS");
}

#[test]
fn criterion_5_exact_matrix_limit() {
    // exact rational route
    let rows: Vec<Vec<String>> = [
        ["1", "0", "0", "0"],
        ["0", "1", "0", "0"],
        ["1/9", "2/9", "3/9", "3/9"],
        ["2/6", "1/6", "1/6", "2/6"],
    ]
    .iter()
    .map(|row| row.iter().map(|s| s.to_string()).collect())
    .collect();
    let start = Instant::now();
    let exact = RationalMatrix::from_literals(&rows).unwrap().limit().unwrap();
    let elapsed = start.elapsed();
    let expected: Vec<Vec<String>> = [
        ["1", "0", "0", "0"],
        ["0", "1", "0", "0"],
        ["10/21", "11/21", "0", "0"],
        ["13/21", "8/21", "0", "0"],
    ]
    .iter()
    .map(|row| row.iter().map(|s| s.to_string()).collect())
    .collect();
    for (i, row) in expected.iter().enumerate() {
        for (j, cell) in row.iter().enumerate() {
            assert_eq!(
                exact.entries()[i][j],
                stochastic::parse_rational(cell).unwrap(),
                "entry ({i}, {j})"
            );
        }
    }
    assert!(elapsed.as_millis() < 1, "{elapsed:?}");

    // floating route within 1e-12
    let a = stochastic::to_matrix(&two_anchor_affine_system()).unwrap();
    let limit = a.limit(1e-12).unwrap();
    let want = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [10.0 / 21.0, 11.0 / 21.0, 0.0, 0.0],
        [13.0 / 21.0, 8.0 / 21.0, 0.0, 0.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert_close(limit[i][j], want[i][j], 1e-12, "float limit entry");
        }
    }
    println!("criterion 5 (exact absorption limit, rational and float): PASS");
}

#[test]
fn criterion_6_oscillation_witness_with_tail_bounds() {
    let (a, b, c, d) = (0.0, 1.0, 2.0, 3.0);
    let sys = oscillating_system(a, b, c, d);
    let v1 = [a, d, b, c];
    let trace = dynamics::iterate(&sys, &v1, 1e-12, 10_000).unwrap();
    match &trace.verdict {
        Verdict::Oscillating { period, .. } => assert_eq!(*period, 2),
        other => panic!("expected period-2 oscillation, got {other:?}"),
    }
    let (lower, upper) = trace.limsup_liminf(2).unwrap();
    assert_close(lower[0], 0.0, 1e-12, "L1");
    assert_close(upper[0], 0.0, 1e-12, "U1");
    assert_close(lower[1], 3.0, 1e-12, "L2");
    assert_close(upper[1], 3.0, 1e-12, "U2");
    assert_close(lower[2], 1.0, 1e-12, "L3");
    assert_close(upper[2], 2.0, 1e-12, "U3");
    assert_close(lower[3], 1.0, 1e-12, "L4");
    assert_close(upper[3], 2.0, 1e-12, "U4");
    println!("criterion 6 (period-2 witness with tail bounds): PASS");
}

/// Random strict-mean system: power means and positive-weight arithmetic
/// means on a positive domain.
fn random_strict_system(rng: &mut ChaCha8Rng) -> AveragingSystem {
    let p = rng.gen_range(2..=6usize);
    let mut means = Vec::with_capacity(p);
    let mut alpha = Vec::with_capacity(p);
    for _ in 0..p {
        let d = rng.gen_range(1..=3.min(p));
        let indices: Vec<usize> = (0..d).map(|_| rng.gen_range(0..p)).collect();
        means.push(random_strict_mean(rng, d));
        alpha.push(indices);
    }
    AveragingSystem::new(means, alpha, Interval::positive()).unwrap()
}

fn random_strict_mean(rng: &mut ChaCha8Rng, d: usize) -> MeanSpec {
    if rng.gen_bool(0.5) {
        let exponents = [-2.0, -1.0, 0.0, 1.0, 2.0];
        MeanSpec::power(exponents[rng.gen_range(0..exponents.len())], d).unwrap()
    } else {
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += correction;
        MeanSpec::weighted(weights).unwrap()
    }
}

/// Two self-contained ergodic root blocks plus absorbed readers.
fn forced_disconnected_system(rng: &mut ChaCha8Rng) -> AveragingSystem {
    let r1 = rng.gen_range(1..=2usize);
    let r2 = rng.gen_range(1..=2usize);
    let extra = rng.gen_range(1..=2usize);
    let p = r1 + r2 + extra;
    let mut means = Vec::with_capacity(p);
    let mut alpha = Vec::with_capacity(p);
    let block = |rng: &mut ChaCha8Rng, members: &[usize], means: &mut Vec<MeanSpec>, alpha: &mut Vec<Vec<usize>>| {
        for (k, &v) in members.iter().enumerate() {
            if members.len() == 1 {
                means.push(MeanSpec::power(1.0, 1).unwrap());
                alpha.push(vec![v]);
            } else {
                // read self and the previous block member: looped and irreducible
                means.push(random_strict_mean(rng, 2));
                alpha.push(vec![v, members[(k + members.len() - 1) % members.len()]]);
            }
        }
    };
    let first: Vec<usize> = (0..r1).collect();
    let second: Vec<usize> = (r1..r1 + r2).collect();
    block(rng, &first, &mut means, &mut alpha);
    block(rng, &second, &mut means, &mut alpha);
    for v in r1 + r2..p {
        let d = rng.gen_range(2..=3usize);
        let mut indices = vec![rng.gen_range(0..r1 + r2)];
        for _ in 1..d {
            indices.push(rng.gen_range(0..v.max(1)));
        }
        means.push(random_strict_mean(rng, d));
        alpha.push(indices);
    }
    AveragingSystem::new(means, alpha, Interval::positive()).unwrap()
}

/// A directed identity cycle of length c (periodic root) plus readers.
fn forced_periodic_system(rng: &mut ChaCha8Rng) -> AveragingSystem {
    let c = rng.gen_range(2..=3usize);
    let extra = rng.gen_range(0..=2usize);
    let p = c + extra;
    let mut means = Vec::with_capacity(p);
    let mut alpha = Vec::with_capacity(p);
    for v in 0..c {
        means.push(MeanSpec::power(1.0, 1).unwrap());
        alpha.push(vec![(v + c - 1) % c]);
    }
    for v in c..p {
        let d = rng.gen_range(1..=3usize);
        let mut indices = vec![rng.gen_range(0..c)];
        for _ in 1..d {
            indices.push(rng.gen_range(0..v.max(1)));
        }
        means.push(random_strict_mean(rng, d));
        alpha.push(indices);
    }
    AveragingSystem::new(means, alpha, Interval::positive()).unwrap()
}

#[test]
fn criterion_7_uniqueness_dichotomy_over_a_random_corpus() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut systems: Vec<AveragingSystem> = Vec::new();
    for _ in 0..350 {
        systems.push(random_strict_system(&mut rng));
    }
    for _ in 0..75 {
        systems.push(forced_disconnected_system(&mut rng));
    }
    for _ in 0..75 {
        systems.push(forced_periodic_system(&mut rng));
    }
    assert!(systems.len() >= 500);

    let mut ergodic = 0;
    let mut nonergodic = 0;
    for (index, sys) in systems.iter().enumerate() {
        let report = sys.incidence_graph().root();
        if report.is_ergodic {
            ergodic += 1;
            for start in 0..50 {
                let x: Vec<f64> = (0..sys.node_count())
                    .map(|_| rng.gen_range(0.1..10.0))
                    .collect();
                let k = dynamics::estimate_invariant_mean(sys, &x, 1e-11, 200_000)
                    .unwrap_or_else(|e| panic!("system {index}, start {start}: {e}"));
                // the estimate must not move when non-root coordinates change
                let mut resampled = x.clone();
                for v in 0..sys.node_count() {
                    if !report.root.contains(&v) {
                        resampled[v] = rng.gen_range(0.1..10.0);
                    }
                }
                let k2 = dynamics::estimate_invariant_mean(sys, &resampled, 1e-11, 200_000)
                    .unwrap_or_else(|e| panic!("system {index}, resample {start}: {e}"));
                assert!(
                    (k - k2).abs() <= 1e-9 * k.abs().max(1.0),
                    "system {index}: inconsistent estimates {k} vs {k2}"
                );
            }
        } else {
            nonergodic += 1;
            let witness = dynamics::nonuniqueness_witness(sys, 1.0, 2.0)
                .unwrap_or_else(|e| panic!("system {index}: no witness: {e}"));
            witness.verify(sys).unwrap();
            match &witness {
                WitnessReport::DisconnectedRoot { fixed_points, .. } => {
                    for point in fixed_points {
                        let image = sys.apply(point).unwrap();
                        assert_eq!(&image, point, "system {index}: fixed point not exact");
                        let spread = point.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                            - point.iter().cloned().fold(f64::INFINITY, f64::min);
                        assert!(spread > 0.0, "system {index}: witness collapsed to constant");
                    }
                }
                WitnessReport::PeriodicRoot { period, .. } => {
                    assert!(*period >= 2, "system {index}");
                }
            }
        }
    }
    assert!(ergodic > 0 && nonergodic > 0, "corpus must cover both classes");
    println!(
        "criterion 7 (dichotomy over {} systems: {ergodic} ergodic, {nonergodic} witnessed): PASS",
        systems.len()
    );
}

#[test]
fn criterion_8_invariance_monotonicity_homogeneity() {
    let sys = agm_system();
    let report = dynamics::verify_invariance(&sys, (0.1, 10.0), 1e-12, 1_000_000, 100, 8).unwrap();
    assert!(
        report.max_discrepancy < 1e-9,
        "invariance discrepancy {}",
        report.max_discrepancy
    );

    let mut rng = ChaCha8Rng::seed_from_u64(88);
    for _ in 0..25 {
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..10.0)).collect();
        let base = dynamics::estimate_invariant_mean(&sys, &x, 1e-12, 1_000_000).unwrap();
        // monotone: bumping any coordinate never lowers the estimate
        for i in 0..4 {
            let mut bumped = x.clone();
            bumped[i] += 0.05;
            let k = dynamics::estimate_invariant_mean(&sys, &bumped, 1e-12, 1_000_000).unwrap();
            assert!(k >= base - 1e-10, "coordinate {i}: {k} < {base}");
        }
        // positively homogeneous on the positive half-line
        for lambda in [0.5, 2.0] {
            let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let k = dynamics::estimate_invariant_mean(&sys, &scaled, 1e-12, 1_000_000).unwrap();
            let rel = (k - lambda * base).abs() / (lambda * base);
            assert!(rel <= 1e-9, "lambda {lambda}: {k} vs {}", lambda * base);
        }
    }
    println!("criterion 8 (invariance, monotonicity, homogeneity): PASS");
}

/// Random affine system with a self-weight at every node, so every root
/// component is aperiodic and the matrix powers have a limit.
fn random_looped_affine_system(rng: &mut ChaCha8Rng) -> AveragingSystem {
    let p = rng.gen_range(2..=6usize);
    let mut means = Vec::with_capacity(p);
    let mut alpha = Vec::with_capacity(p);
    for v in 0..p {
        let d = rng.gen_range(1..=p);
        let mut indices = vec![v];
        let mut others: Vec<usize> = (0..p).filter(|&u| u != v).collect();
        for k in 0..d - 1 {
            let swap = rng.gen_range(k..others.len());
            others.swap(k, swap);
            indices.push(others[k]);
        }
        indices.sort_unstable();
        let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.1..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += correction;
        means.push(MeanSpec::weighted(weights).unwrap());
        alpha.push(indices);
    }
    AveragingSystem::new(means, alpha, Interval::reals()).unwrap()
}

#[test]
fn criterion_9_iteration_agrees_with_the_matrix_limit() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..100 {
        let sys = random_looped_affine_system(&mut rng);
        let p = sys.node_count();
        let a = stochastic::to_matrix(&sys).unwrap();
        let limit = a.limit(1e-12).unwrap();
        let x0: Vec<f64> = (0..p).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let trace = dynamics::iterate(&sys, &x0, 1e-12, 20_000).unwrap();
        let settled = trace.final_state();
        for i in 0..p {
            let predicted: f64 = (0..p).map(|j| limit[i][j] * x0[j]).sum();
            assert!(
                (settled[i] - predicted).abs() <= 1e-9,
                "case {case}, coordinate {i}: {} vs {predicted}",
                settled[i]
            );
        }
        // independent power route for a sample of the corpus; squaring stops
        // once successive powers agree, before roundoff can compound
        if case % 5 == 0 {
            let mut power = a.entries().to_vec();
            for _ in 0..64 {
                let squared = matmul_local(&power, &power);
                let step = squared
                    .iter()
                    .flatten()
                    .zip(power.iter().flatten())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                power = squared;
                if step < 1e-12 {
                    break;
                }
            }
            for i in 0..p {
                for j in 0..p {
                    assert!(
                        (power[i][j] - limit[i][j]).abs() <= 1e-10,
                        "case {case}: structural vs squaring at ({i}, {j})"
                    );
                }
            }
        }
    }
    println!("criterion 9 (iterate vs matrix limit, 100 affine systems): PASS");
}

fn matmul_local(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}
