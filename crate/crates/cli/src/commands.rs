//! The individual analyses. Every command writes its artifacts into the
//! output directory under a command-specific name, so a batch run never
//! clobbers earlier results. All output is deterministic for a fixed
//! scenario and seed.

use std::fmt::Write as _;
use std::path::Path;

use netmean::dynamics::{self, Verdict, WitnessReport, DEFAULT_TAIL_WINDOW};
use netmean::graph::DiGraph;
use netmean::mapping::AveragingSystem;
use netmean::stochastic::{self, matrix_to_csv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::Scenario;
use crate::{CliError, Options};

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn vertex_names(g: &DiGraph, vertices: &[usize]) -> String {
    let names: Vec<String> = vertices.iter().map(|&v| g.label(v)).collect();
    format!("{{{}}}", names.join(", "))
}

fn fmt_vector(x: &[f64]) -> String {
    let cells: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    format!("({})", cells.join(", "))
}

/// Labelled graph for reports: the explicit scenario graph, or the incidence
/// graph with 1-based node names.
fn report_graph(scenario: &Scenario) -> Result<DiGraph, CliError> {
    if let Some(g) = &scenario.graph {
        return Ok(g.clone());
    }
    let sys = scenario.require_system()?;
    let g = sys.incidence_graph();
    let labels: Vec<String> = (1..=g.vertex_count()).map(|v| v.to_string()).collect();
    Ok(DiGraph::with_labels(
        g.vertex_count(),
        g.edges(),
        labels,
    )?)
}

pub fn analyze(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let g = report_graph(scenario)?;
    let report = g.root();
    let cond = g.condensation();

    write_file(&opts.out, "graph.dot", &g.to_dot_grouped("graph", &report.root, "root"))?;
    write_file(&opts.out, "condensation.dot", &cond.to_dot("condensation"))?;
    write_file(&opts.out, "root.dot", &report.root_graph.to_dot("root"))?;

    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "graph: {} vertices, {} edges",
        g.vertex_count(),
        g.edge_count()
    );
    let _ = writeln!(text, "strongly connected components:");
    for members in &cond.scc_members {
        let _ = writeln!(text, "  {}", vertex_names(&g, members));
    }
    let sources = cond.quotient.source_set();
    let source_names: Vec<String> = sources
        .iter()
        .map(|&s| vertex_names(&g, &cond.scc_members[s]))
        .collect();
    let _ = writeln!(text, "condensation sources: {}", source_names.join(", "));
    let _ = writeln!(text, "root: {}", vertex_names(&g, &report.root));
    let _ = writeln!(text, "root components:");
    for component in &report.components {
        let _ = writeln!(text, "  {}", vertex_names(&g, component));
    }
    match report.period {
        Some(c) => {
            let _ = writeln!(text, "root period: {c}");
        }
        None => {
            let _ = writeln!(text, "root period: undefined (disconnected or acyclic)");
        }
    }
    let _ = writeln!(
        text,
        "root ergodic: {}",
        if report.is_ergodic { "yes" } else { "no" }
    );
    let ranks = g.rank_levels();
    let rank_cells: Vec<String> = ranks
        .iter()
        .enumerate()
        .map(|(v, r)| format!("{}:{r}", g.label(v)))
        .collect();
    let _ = writeln!(text, "ranks (distance from the root): {}", rank_cells.join(" "));
    if report.is_ergodic {
        if let Ok(q0) = report.root_graph.walk_length_threshold() {
            let _ = writeln!(
                text,
                "walk-length threshold of the root graph: every length >= {q0} joins every pair"
            );
        }
    }
    if g.vertex_count() <= netmean::DEFAULT_ORACLE_CAP {
        let ok = g.verify_root_characterization(netmean::DEFAULT_ORACLE_CAP)?;
        let _ = writeln!(
            text,
            "root characterization cross-check: {}",
            if ok { "consistent" } else { "INCONSISTENT" }
        );
    }
    write_file(&opts.out, "analysis.txt", &text)
}

pub fn simulate(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let sys = scenario.require_system()?;
    if scenario.initial_vectors.is_empty() {
        return Err(CliError::Validation(
            "simulate needs at least one initial vector".into(),
        ));
    }
    let tol = opts.tol.unwrap_or(scenario.tol);
    let max_iter = opts.max_iter.unwrap_or(scenario.max_iter);
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    for (k, x0) in scenario.initial_vectors.iter().enumerate() {
        let trace = dynamics::iterate(sys, x0, tol, max_iter)?;
        write_file(&opts.out, &format!("trace_{}.csv", k + 1), &trace_csv(&trace))?;
        let _ = writeln!(text, "start {}: {}", k + 1, fmt_vector(x0));
        match &trace.verdict {
            Verdict::Converged { limit, iterations } => {
                let _ = writeln!(
                    text,
                    "  converged to {limit} after {iterations} steps (spread < {tol})"
                );
            }
            Verdict::Oscillating { period, .. } => {
                if *period == 1 {
                    let _ = writeln!(
                        text,
                        "  stationary off the diagonal after {} steps: {}",
                        trace.total_steps,
                        fmt_vector(trace.final_state())
                    );
                } else {
                    let _ = writeln!(
                        text,
                        "  oscillating with period {period} (detected after {} steps)",
                        trace.total_steps
                    );
                }
            }
            Verdict::Undecided => {
                let _ = writeln!(text, "  undecided after {max_iter} steps");
            }
        }
        let window = DEFAULT_TAIL_WINDOW.min(trace.states.len());
        let (lower, upper) = trace.limsup_liminf(window)?;
        let _ = writeln!(
            text,
            "  tail bounds over the last {window} recorded states:"
        );
        let _ = writeln!(text, "    liminf estimate: {}", fmt_vector(&lower));
        let _ = writeln!(text, "    limsup estimate: {}", fmt_vector(&upper));
    }
    write_file(&opts.out, "simulation.txt", &text)
}

fn trace_csv(trace: &dynamics::IterationTrace) -> String {
    let p = trace.start.len();
    let mut out = String::from("step");
    for i in 0..p {
        let _ = write!(out, ",x_{i}");
    }
    out.push_str(",spread\n");
    for ((step, state), spread) in trace
        .recorded_steps
        .iter()
        .zip(&trace.states)
        .zip(&trace.spreads)
    {
        let _ = write!(out, "{step}");
        for v in state {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(out, ",{spread}");
    }
    out
}

pub fn invariant(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let sys = scenario.require_system()?;
    if scenario.initial_vectors.is_empty() {
        return Err(CliError::Validation(
            "invariant needs at least one initial vector".into(),
        ));
    }
    let tol = opts.tol.unwrap_or(scenario.tol);
    let max_iter = opts.max_iter.unwrap_or(scenario.max_iter);
    let root = sys.incidence_graph().root().root;
    let range = scenario.audit_range();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "root coordinates: {}",
        root.iter()
            .map(|v| (v + 1).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    for (k, x) in scenario.initial_vectors.iter().enumerate() {
        let estimate = dynamics::estimate_invariant_mean(sys, x, tol, max_iter)?;
        let mut max_deviation: f64 = 0.0;
        for _ in 0..20 {
            let mut resampled = x.clone();
            for v in 0..sys.node_count() {
                if !root.contains(&v) {
                    resampled[v] = rng.gen_range(range.0..=range.1);
                }
            }
            let other = dynamics::estimate_invariant_mean(sys, &resampled, tol, max_iter)?;
            max_deviation = max_deviation.max((other - estimate).abs());
        }
        let _ = writeln!(text, "start {}: {}", k + 1, fmt_vector(x));
        let _ = writeln!(text, "  invariant mean estimate: {estimate}");
        let _ = writeln!(
            text,
            "  root-only dependence: max deviation {max_deviation:e} over 20 non-root resamples"
        );
    }
    write_file(&opts.out, "invariant.txt", &text)
}

/// Witness values picked inside the domain when none are supplied.
fn default_witness_values(sys: &AveragingSystem) -> (f64, f64) {
    let domain = sys.domain();
    match (domain.lo.is_finite(), domain.hi.is_finite()) {
        (true, true) => {
            let span = domain.hi - domain.lo;
            (domain.lo + span / 3.0, domain.lo + 2.0 * span / 3.0)
        }
        (true, false) => (domain.lo + 1.0, domain.lo + 2.0),
        (false, true) => (domain.hi - 2.0, domain.hi - 1.0),
        (false, false) => (0.0, 1.0),
    }
}

pub fn witness(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let sys = scenario.require_system()?;
    let (default_gamma, default_delta) = default_witness_values(sys);
    let gamma = opts.gamma.unwrap_or(default_gamma);
    let delta = opts.delta.unwrap_or(default_delta);
    let witness = dynamics::nonuniqueness_witness(sys, gamma, delta)?;
    witness.verify(sys)?;
    let names = |vs: &[usize]| {
        vs.iter()
            .map(|v| (v + 1).to_string())
            .collect::<Vec<_>>()
            .join(", ")
    };
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(text, "witness values: gamma = {gamma}, delta = {delta}");
    match &witness {
        WitnessReport::DisconnectedRoot {
            gamma_region,
            delta_region,
            solved_region,
            fixed_points,
            two_valued,
        } => {
            let _ = writeln!(text, "kind: disconnected root");
            let _ = writeln!(text, "gamma region: {{{}}}", names(gamma_region));
            let _ = writeln!(text, "delta region: {{{}}}", names(delta_region));
            if !solved_region.is_empty() {
                let _ = writeln!(text, "solved coordinates: {{{}}}", names(solved_region));
            }
            let _ = writeln!(
                text,
                "two-valued: {}",
                if *two_valued { "yes" } else { "no (absorbed coordinates solved)" }
            );
            let _ = writeln!(text, "fixed point 1: {}", fmt_vector(&fixed_points[0]));
            let _ = writeln!(text, "fixed point 2: {}", fmt_vector(&fixed_points[1]));
            let _ = writeln!(
                text,
                "certification: both states reproduce themselves exactly under the mapping,"
            );
            let _ = writeln!(
                text,
                "so two distinct non-diagonal fixed points exist and no unique invariant mean does"
            );
        }
        WitnessReport::PeriodicRoot {
            period,
            classes,
            start,
            root_liminf,
            root_limsup,
            ..
        } => {
            let _ = writeln!(text, "kind: periodic root (period {period})");
            for (k, class) in classes.iter().enumerate() {
                let _ = writeln!(text, "class {k}: {{{}}}", names(class));
            }
            let _ = writeln!(text, "start: {}", fmt_vector(start));
            let _ = writeln!(
                text,
                "certification: root coordinates cycle through the classes exactly;"
            );
            let _ = writeln!(
                text,
                "observed root liminf {root_liminf}, limsup {root_limsup} stay apart forever"
            );
        }
    }
    write_file(&opts.out, "witness.txt", &text)
}

pub fn limit(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let sys = scenario.require_system()?;
    let tol = opts.tol.unwrap_or(scenario.tol);
    let matrix = stochastic::to_matrix(sys)?;
    let limit = matrix.limit(tol)?;
    write_file(&opts.out, "matrix.csv", &matrix.to_csv())?;
    write_file(&opts.out, "limit.csv", &matrix_to_csv(&limit))?;
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "aggregation matrix ({0} x {0}) written to matrix.csv",
        matrix.size()
    );
    let _ = writeln!(text, "power limit written to limit.csv");
    if opts.exact {
        let rational = scenario.rational_matrix()?;
        let exact_limit = rational.limit()?;
        write_file(&opts.out, "limit_exact.csv", &exact_limit.to_csv())?;
        let _ = writeln!(text, "exact rational limit written to limit_exact.csv");
        let float_view = exact_limit.to_f64();
        let mut worst: f64 = 0.0;
        for (row_f, row_e) in limit.iter().zip(&float_view) {
            for (a, b) in row_f.iter().zip(row_e) {
                worst = worst.max((a - b).abs());
            }
        }
        let _ = writeln!(
            text,
            "floating limit agrees with the exact limit to {worst:e}"
        );
    }
    write_file(&opts.out, "limit.txt", &text)
}

pub fn verify(scenario: &Scenario, opts: &Options) -> Result<(), CliError> {
    let sys = scenario.require_system()?;
    let tol = opts.tol.unwrap_or(scenario.tol);
    let max_iter = opts.max_iter.unwrap_or(scenario.max_iter);
    let range = scenario.audit_range();
    let p = sys.node_count();
    let mut text = String::new();
    let _ = writeln!(text, "scenario: {}", scenario.name);
    let _ = writeln!(
        text,
        "audit range: [{}, {}], samples: {}, seed: {}",
        range.0, range.1, opts.samples, opts.seed
    );

    let _ = writeln!(text, "mean property audit per node:");
    let mut total_violations = 0usize;
    for (i, mean) in sys.means().iter().enumerate() {
        let report = mean.check_mean_property(opts.samples, range, opts.seed + i as u64);
        total_violations += report.mean_violations + report.strictness_violations;
        let flags = mean.flags();
        let _ = writeln!(
            text,
            "  node {}: {} samples, {} mean violations, {} strictness violations \
             (strict {}, monotone {}, homogeneous {}, symmetric {})",
            i + 1,
            report.samples,
            report.mean_violations,
            report.strictness_violations,
            flags.strict,
            flags.monotone,
            flags.homogeneous,
            flags.symmetric,
        );
    }

    // componentwise boundedness of the mapping
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut bound_violations = 0usize;
    let rounds = (opts.samples / 10).max(1);
    for _ in 0..rounds {
        let x: Vec<f64> = (0..p).map(|_| rng.gen_range(range.0..=range.1)).collect();
        let out = sys.apply(&x)?;
        let min = x.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if out.iter().any(|&v| v < min - 1e-12 || v > max + 1e-12) {
            bound_violations += 1;
        }
    }
    let _ = writeln!(
        text,
        "mapping bounded between min and max: {bound_violations} violations in {rounds} samples"
    );

    let report = sys.incidence_graph().root();
    if report.is_ergodic {
        let inv = dynamics::verify_invariance(
            sys,
            range,
            tol,
            max_iter,
            opts.samples.min(100),
            opts.seed,
        )?;
        let _ = writeln!(
            text,
            "invariance under the mapping: max discrepancy {:e} over {} samples",
            inv.max_discrepancy, inv.samples
        );
        let all_monotone = sys.means().iter().all(|m| m.flags().monotone);
        if all_monotone {
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let x: Vec<f64> = (0..p).map(|_| rng.gen_range(range.0..=range.1)).collect();
                let base = dynamics::estimate_invariant_mean(sys, &x, tol, max_iter)?;
                for i in 0..p {
                    let mut bumped = x.clone();
                    bumped[i] += (range.1 - range.0) / 100.0;
                    let k = dynamics::estimate_invariant_mean(sys, &bumped, tol, max_iter)?;
                    worst = worst.min(k - base);
                }
            }
            let _ = writeln!(
                text,
                "monotonicity probes: worst estimate change {worst:e} (never below -1e-10 expected)"
            );
        }
        let all_homogeneous = sys.means().iter().all(|m| m.flags().homogeneous);
        if all_homogeneous && sys.domain().lo >= 0.0 {
            let mut worst: f64 = 0.0;
            for _ in 0..10 {
                let x: Vec<f64> = (0..p).map(|_| rng.gen_range(range.0..=range.1)).collect();
                let base = dynamics::estimate_invariant_mean(sys, &x, tol, max_iter)?;
                for lambda in [0.5, 2.0] {
                    let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
                    let k = dynamics::estimate_invariant_mean(sys, &scaled, tol, max_iter)?;
                    worst = worst.max((k - lambda * base).abs() / (lambda * base).abs());
                }
            }
            let _ = writeln!(
                text,
                "positive homogeneity probes: worst relative deviation {worst:e}"
            );
        }
    } else {
        let _ = writeln!(
            text,
            "invariance audit skipped: the root is not ergodic, no unique invariant mean"
        );
    }

    // envelope of one run from a mid-range start
    let x0: Vec<f64> = (0..p)
        .map(|i| range.0 + (range.1 - range.0) * (i as f64 + 1.0) / (p as f64 + 1.0))
        .collect();
    let trace = dynamics::iterate(sys, &x0, tol, max_iter.min(10_000))?;
    let monotone_envelope = trace.spreads.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let _ = writeln!(
        text,
        "iteration envelope monotone over {} recorded states: {}",
        trace.states.len(),
        if monotone_envelope { "yes" } else { "NO" }
    );
    let _ = writeln!(
        text,
        "total property violations: {}",
        total_violations + bound_violations
    );
    write_file(&opts.out, "verify.txt", &text)
}
