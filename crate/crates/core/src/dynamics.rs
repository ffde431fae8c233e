//! Iterating a mean-type mapping: convergence to the diagonal, oscillation
//! detection, invariant-mean estimation, and certified non-uniqueness
//! witnesses for systems whose root is not ergodic.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mapping::AveragingSystem;

/// Default convergence tolerance on the spread max(x) - min(x).
pub const DEFAULT_TOL: f64 = 1e-12;
/// Default iteration budget; paper-scale systems converge orders of
/// magnitude faster, the budget guards pathological inputs.
pub const DEFAULT_MAX_ITER: usize = 1_000_000;
/// Default tail window for liminf/limsup estimates.
pub const DEFAULT_TAIL_WINDOW: usize = 128;

/// Recurrence tolerance for cycle detection.
const OSC_TOL: f64 = 1e-12;
/// A candidate cycle must have at least this diameter; smaller excursions
/// are numerical noise on the way to the diagonal.
const CYCLE_DIAMETER_FLOOR: f64 = 100.0 * OSC_TOL;
/// Replay rounds a candidate cycle must survive before it is believed.
const CYCLE_PERSISTENCE_ROUNDS: usize = 16;
/// How many recent raw states the cycle detector keeps.
const RING_WINDOW: usize = 64;
/// Record every state up to this step, then every tenth.
const THIN_LIMIT: usize = 1_000;
/// Budget for settling a candidate fixed point to bitwise exactness.
const FIXED_POINT_ITER: usize = 100_000;

/// Outcome of an iteration run.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    /// The spread fell below tolerance; all coordinates share `limit`
    /// (midpoint of the final coordinate range) after `iterations` steps.
    Converged { limit: f64, iterations: usize },
    /// A previous state recurred while the spread stayed at or above
    /// tolerance. `period == 1` means the state is numerically stationary
    /// off the diagonal (the map has stalled bitwise); larger periods are
    /// genuine cycles. `orbit` holds one full cycle.
    Oscillating { period: usize, orbit: Vec<Vec<f64>> },
    /// The iteration budget ran out first.
    Undecided,
}

/// A recorded orbit. States are stored at every step up to a thinning limit
/// and every tenth step beyond it; the final state is always recorded.
/// `envelope_min`/`envelope_max` track the per-coordinate running extremes
/// over every computed step.
#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub start: Vec<f64>,
    pub recorded_steps: Vec<usize>,
    pub states: Vec<Vec<f64>>,
    pub spreads: Vec<f64>,
    pub verdict: Verdict,
    pub total_steps: usize,
    pub envelope_min: Vec<f64>,
    pub envelope_max: Vec<f64>,
}

impl IterationTrace {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("a trace records at least the start")
    }

    /// Per-coordinate min and max over the last `tail_window` recorded
    /// states: finite-horizon liminf/limsup estimates.
    pub fn limsup_liminf(&self, tail_window: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if tail_window == 0 || self.states.len() < tail_window {
            return Err(Error::InsufficientTrace {
                needed: tail_window.max(1),
                actual: self.states.len(),
            });
        }
        let p = self.start.len();
        let tail = &self.states[self.states.len() - tail_window..];
        let mut lower = vec![f64::INFINITY; p];
        let mut upper = vec![f64::NEG_INFINITY; p];
        for state in tail {
            for i in 0..p {
                lower[i] = lower[i].min(state[i]);
                upper[i] = upper[i].max(state[i]);
            }
        }
        Ok((lower, upper))
    }
}

fn spread_of(x: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
    }
    max - min
}

fn midpoint(x: &[f64]) -> f64 {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
    }
    (min + max) / 2.0
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Replays `rounds` laps of a candidate cycle from `from` (which sits within
/// tolerance of `cycle[0]`) and checks every state stays on the cycle. A
/// decaying near-recurrence drifts off within a few laps; a real cycle stays.
fn cycle_persists(
    sys: &AveragingSystem,
    from: &[f64],
    cycle: &[Vec<f64>],
    rounds: usize,
) -> Result<bool> {
    let k = cycle.len();
    let mut x = from.to_vec();
    for j in 0..rounds * k {
        x = sys.apply(&x)?;
        if max_abs_diff(&x, &cycle[(j + 1) % k]) > OSC_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Repeatedly applies the system's mapping to `x0`.
///
/// Stops when the spread drops below `tol` (converged to the diagonal), when
/// a recent state recurs while the spread is still at least `tol`
/// (oscillating), or when `max_iter` steps have run (undecided). Domain
/// violations propagate; a non-finite coordinate is reported with the step
/// that produced it.
pub fn iterate(
    sys: &AveragingSystem,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<IterationTrace> {
    if !(tol > 0.0) {
        return Err(Error::InvalidSystem(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    sys.check_state(x0)?;
    let p = x0.len();
    let mut trace = IterationTrace {
        start: x0.to_vec(),
        recorded_steps: vec![0],
        states: vec![x0.to_vec()],
        spreads: vec![spread_of(x0)],
        verdict: Verdict::Undecided,
        total_steps: 0,
        envelope_min: x0.to_vec(),
        envelope_max: x0.to_vec(),
    };
    if trace.spreads[0] < tol {
        trace.verdict = Verdict::Converged {
            limit: midpoint(x0),
            iterations: 0,
        };
        return Ok(trace);
    }

    let mut ring: VecDeque<(usize, Vec<f64>)> = VecDeque::with_capacity(RING_WINDOW + 1);
    ring.push_back((0, x0.to_vec()));
    let mut x = x0.to_vec();
    let mut suppress_detection_until = 0usize;

    for step in 1..=max_iter {
        let next = sys.apply(&x)?;
        if let Some(coordinate) = next.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { step, coordinate });
        }
        let spread = spread_of(&next);
        for i in 0..p {
            trace.envelope_min[i] = trace.envelope_min[i].min(next[i]);
            trace.envelope_max[i] = trace.envelope_max[i].max(next[i]);
        }
        trace.total_steps = step;
        let keep = step <= THIN_LIMIT || step % 10 == 0;

        if spread < tol {
            trace.recorded_steps.push(step);
            trace.states.push(next.clone());
            trace.spreads.push(spread);
            trace.verdict = Verdict::Converged {
                limit: midpoint(&next),
                iterations: step,
            };
            return Ok(trace);
        }

        // cycle detection against the recent-state ring. A period-1 verdict
        // demands a bitwise stall so that a slow crawl toward the diagonal is
        // never mistaken for a fixed point; longer candidates must have a
        // meaningful diameter and survive a replay, which screens out the
        // near-recurrences of a decaying rotation.
        let mut detected: Option<(usize, Vec<Vec<f64>>)> = None;
        if step >= suppress_detection_until {
            for (old_step, old_state) in ring.iter().rev() {
                let period = step - old_step;
                if period == 1 {
                    if next == *old_state {
                        detected = Some((1, vec![next.clone()]));
                        break;
                    }
                    continue;
                }
                if max_abs_diff(&next, old_state) > OSC_TOL {
                    continue;
                }
                let orbit: Vec<Vec<f64>> = ring
                    .iter()
                    .filter(|(s, _)| *s >= *old_step)
                    .map(|(_, state)| state.clone())
                    .collect();
                debug_assert_eq!(orbit.len(), period);
                let diameter = orbit
                    .iter()
                    .map(|state| max_abs_diff(state, &next))
                    .fold(0.0, f64::max);
                if diameter < CYCLE_DIAMETER_FLOOR {
                    continue;
                }
                if cycle_persists(sys, &next, &orbit, CYCLE_PERSISTENCE_ROUNDS)? {
                    detected = Some((period, orbit));
                } else {
                    suppress_detection_until = step + RING_WINDOW;
                }
                break;
            }
        }
        if keep || detected.is_some() {
            trace.recorded_steps.push(step);
            trace.states.push(next.clone());
            trace.spreads.push(spread);
        }
        if let Some((period, orbit)) = detected {
            trace.verdict = Verdict::Oscillating { period, orbit };
            return Ok(trace);
        }

        ring.push_back((step, next.clone()));
        if ring.len() > RING_WINDOW {
            ring.pop_front();
        }
        x = next;
    }
    if trace.recorded_steps.last() != Some(&trace.total_steps) {
        trace.recorded_steps.push(trace.total_steps);
        trace.spreads.push(spread_of(&x));
        trace.states.push(x);
    }
    Ok(trace)
}

/// Estimates the invariant mean at `x`: the common limit of all coordinates
/// under iteration. Refuses systems whose incidence-graph root is not
/// ergodic, since the invariant mean is only unique in the ergodic case.
pub fn estimate_invariant_mean(
    sys: &AveragingSystem,
    x: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<f64> {
    let report = sys.incidence_graph().root();
    if !report.is_ergodic {
        return Err(Error::NonErgodicRoot {
            reason: describe_non_ergodic(&report),
        });
    }
    let trace = iterate(sys, x, tol, max_iter)?;
    match trace.verdict {
        Verdict::Converged { limit, .. } => Ok(limit),
        Verdict::Oscillating { period, .. } => Err(Error::OscillationDetected { period }),
        Verdict::Undecided => Err(Error::BudgetExhausted { max_iter }),
    }
}

fn describe_non_ergodic(report: &crate::graph::RootReport) -> String {
    if report.components.len() > 1 {
        format!("{} root components", report.components.len())
    } else {
        match report.period {
            Some(c) => format!("root period {c}"),
            None => "root has no cycle".into(),
        }
    }
}

/// Result of an invariance audit: how far the estimate moves when the input
/// is replaced by its image under the mapping.
#[derive(Debug, Clone)]
pub struct InvarianceReport {
    pub samples: usize,
    pub max_discrepancy: f64,
}

/// For `samples` random states x in the given box, compares the invariant
/// mean at x with the invariant mean at M(x). Discrepancies are report
/// content; estimation failures are errors.
pub fn verify_invariance(
    sys: &AveragingSystem,
    sample_range: (f64, f64),
    tol: f64,
    max_iter: usize,
    samples: usize,
    seed: u64,
) -> Result<InvarianceReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let p = sys.node_count();
    let mut max_discrepancy: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..p)
            .map(|_| rng.gen_range(sample_range.0..=sample_range.1))
            .collect();
        let at_x = estimate_invariant_mean(sys, &x, tol, max_iter)?;
        let mapped = sys.apply(&x)?;
        let at_mx = estimate_invariant_mean(sys, &mapped, tol, max_iter)?;
        max_discrepancy = max_discrepancy.max((at_x - at_mx).abs());
    }
    Ok(InvarianceReport {
        samples,
        max_discrepancy,
    })
}

/// Evidence that a system with a non-ergodic root has no unique invariant
/// mean. Both shapes carry the data needed to replay the certificate.
#[derive(Debug, Clone)]
pub enum WitnessReport {
    /// The root has several components. `fixed_points` holds two distinct
    /// exact fixed points: gamma/delta on the indicated regions, with any
    /// remaining coordinates solved to make the state exactly fixed.
    /// `two_valued` is true when the incidence graph is weakly disconnected,
    /// in which case no solving was needed.
    DisconnectedRoot {
        gamma_region: Vec<usize>,
        delta_region: Vec<usize>,
        solved_region: Vec<usize>,
        fixed_points: [Vec<f64>; 2],
        two_valued: bool,
    },
    /// The root is connected but periodic. Started from gamma on `classes[0]`
    /// and delta on the rest of the root, the root coordinates cycle through
    /// the period classes exactly, so their limsup/liminf stay apart.
    PeriodicRoot {
        period: usize,
        classes: Vec<Vec<usize>>,
        start: Vec<f64>,
        orbit: Vec<Vec<f64>>,
        root_liminf: f64,
        root_limsup: f64,
    },
}

impl WitnessReport {
    /// Re-checks the certificate against the system: exact fixed points for
    /// the disconnected shape, the exact class pattern for the periodic one.
    pub fn verify(&self, sys: &AveragingSystem) -> Result<()> {
        match self {
            Self::DisconnectedRoot { fixed_points, .. } => {
                for point in fixed_points {
                    let image = sys.apply(point)?;
                    if image != *point {
                        return Err(Error::WitnessNotCertified {
                            residual: max_abs_diff(&image, point),
                        });
                    }
                }
                if fixed_points[0] == fixed_points[1] {
                    return Err(Error::Internal(
                        "witness fixed points must be distinct".into(),
                    ));
                }
                Ok(())
            }
            Self::PeriodicRoot {
                period,
                classes,
                start,
                ..
            } => {
                let gamma = start[classes[0][0]];
                let delta = *classes
                    .iter()
                    .skip(1)
                    .flatten()
                    .map(|&v| &start[v])
                    .find(|&&v| v != gamma)
                    .ok_or_else(|| Error::Internal("degenerate periodic witness".into()))?;
                let mut x = start.clone();
                for n in 1..=3 * period {
                    x = sys.apply(&x)?;
                    for (k, class) in classes.iter().enumerate() {
                        let expected = if k == n % period { gamma } else { delta };
                        for &v in class {
                            if x[v] != expected {
                                return Err(Error::WitnessNotCertified {
                                    residual: (x[v] - expected).abs(),
                                });
                            }
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// Constructs a certified non-uniqueness witness for a system whose
/// incidence-graph root is not ergodic.
///
/// Disconnected root: builds two exact fixed points carrying `gamma` on the
/// first root component and `delta` on the others (swapped for the second
/// point). When the incidence graph is weakly disconnected the two-sided
/// partition makes the points two-valued outright; otherwise the remaining
/// coordinates are settled by iteration until the state is fixed bitwise.
///
/// Periodic root (period c >= 2): colors the period classes gamma/delta so
/// the root coordinates cycle exactly, keeping their liminf and limsup apart.
pub fn nonuniqueness_witness(
    sys: &AveragingSystem,
    gamma: f64,
    delta: f64,
) -> Result<WitnessReport> {
    if gamma == delta || !sys.domain().contains(gamma) || !sys.domain().contains(delta) {
        return Err(Error::InvalidWitnessValues { gamma, delta });
    }
    let graph = sys.incidence_graph();
    let report = graph.root();
    if report.is_ergodic {
        return Err(Error::ErgodicRoot);
    }
    if report.components.len() >= 2 {
        disconnected_witness(sys, &graph, &report, gamma, delta)
    } else {
        periodic_witness(sys, &graph, &report, gamma, delta)
    }
}

fn disconnected_witness(
    sys: &AveragingSystem,
    graph: &crate::graph::DiGraph,
    report: &crate::graph::RootReport,
    gamma: f64,
    delta: f64,
) -> Result<WitnessReport> {
    let p = sys.node_count();
    let (inside, outside) = graph.succ_prec_partition()?;
    if !outside.is_empty() {
        // weakly disconnected: the two-valued pattern is exactly fixed
        let fill = |g: f64, d: f64| -> Vec<f64> {
            let mut x = vec![d; p];
            for &v in &inside {
                x[v] = g;
            }
            x
        };
        let witness = WitnessReport::DisconnectedRoot {
            gamma_region: inside.clone(),
            delta_region: outside.clone(),
            solved_region: Vec::new(),
            fixed_points: [fill(gamma, delta), fill(delta, gamma)],
            two_valued: true,
        };
        witness.verify(sys)?;
        return Ok(witness);
    }

    // weakly connected: pin the root components and settle the rest
    let first = &report.components[0];
    let gamma_region = first.clone();
    let delta_region: Vec<usize> = report
        .root
        .iter()
        .copied()
        .filter(|v| !first.contains(v))
        .collect();
    let solved_region: Vec<usize> = (0..p).filter(|v| !report.root.contains(v)).collect();
    let build = |g: f64, d: f64| -> Result<Vec<f64>> {
        let mut x = vec![g.min(d); p];
        for &v in &gamma_region {
            x[v] = g;
        }
        for &v in &delta_region {
            x[v] = d;
        }
        settle_fixed_point(sys, x)
    };
    let fixed_points = [build(gamma, delta)?, build(delta, gamma)?];
    let witness = WitnessReport::DisconnectedRoot {
        gamma_region,
        delta_region,
        solved_region,
        fixed_points,
        two_valued: false,
    };
    witness.verify(sys)?;
    Ok(witness)
}

enum RunOutcome {
    Fixed(Vec<f64>),
    Cycle(Vec<Vec<f64>>),
    Out(Vec<f64>),
}

fn run_plain(sys: &AveragingSystem, mut x: Vec<f64>, budget: usize) -> Result<RunOutcome> {
    let mut ring: VecDeque<Vec<f64>> = VecDeque::with_capacity(9);
    for _ in 0..budget {
        let next = sys.apply(&x)?;
        if next == x {
            return Ok(RunOutcome::Fixed(x));
        }
        if let Some(pos) = ring.iter().position(|s| *s == next) {
            return Ok(RunOutcome::Cycle(ring.iter().skip(pos).cloned().collect()));
        }
        ring.push_back(next.clone());
        if ring.len() > 8 {
            ring.pop_front();
        }
        x = next;
    }
    Ok(RunOutcome::Out(x))
}

/// Componentwise mixtures of two near-fixed states; for an ulp-level or
/// period-2 cycle the true fixed point often interleaves them.
fn try_mixes(sys: &AveragingSystem, a: &[f64], b: &[f64]) -> Result<Option<Vec<f64>>> {
    let differing: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
    if differing.len() > 16 {
        return Ok(None);
    }
    for mask in 0u32..(1 << differing.len()) {
        let mut candidate = a.to_vec();
        for (bit, &i) in differing.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                candidate[i] = b[i];
            }
        }
        let image = sys.apply(&candidate)?;
        if image == candidate {
            return Ok(Some(candidate));
        }
    }
    Ok(None)
}

fn coordinate_midrange(states: &[Vec<f64>]) -> Vec<f64> {
    let p = states[0].len();
    (0..p)
        .map(|i| {
            let lo = states.iter().map(|s| s[i]).fold(f64::INFINITY, f64::min);
            let hi = states.iter().map(|s| s[i]).fold(f64::NEG_INFINITY, f64::max);
            0.5 * (lo + hi)
        })
        .collect()
}

/// Settles `start` to a state fixed bitwise under the mapping. Root
/// coordinates hold still from the first step; for monotone means the free
/// coordinates climb from the bottom corner, so plain iteration converges.
/// Non-monotone means can trap the orbit in a cycle; the cascade then tries
/// componentwise mixtures of cycle states, restarts from the cycle's
/// coordinate midrange, and finally runs a damped (state-averaged) pass.
fn settle_fixed_point(sys: &AveragingSystem, start: Vec<f64>) -> Result<Vec<f64>> {
    let mut x = start;
    for _ in 0..4 {
        match run_plain(sys, x.clone(), FIXED_POINT_ITER)? {
            RunOutcome::Fixed(z) => return Ok(z),
            RunOutcome::Cycle(states) => {
                for pair in states.windows(2) {
                    if let Some(z) = try_mixes(sys, &pair[0], &pair[1])? {
                        return Ok(z);
                    }
                }
                let mid = coordinate_midrange(&states);
                if mid == x {
                    break;
                }
                x = mid;
            }
            RunOutcome::Out(z) => {
                x = z;
                break;
            }
        }
    }
    for _ in 0..FIXED_POINT_ITER {
        let image = sys.apply(&x)?;
        if image == x {
            return Ok(x);
        }
        let damped: Vec<f64> = x.iter().zip(&image).map(|(a, b)| 0.5 * (a + b)).collect();
        if damped == x {
            break;
        }
        x = damped;
    }
    let image = sys.apply(&x)?;
    if image == x {
        return Ok(x);
    }
    if let Some(z) = try_mixes(sys, &x, &image)? {
        return Ok(z);
    }
    Err(Error::WitnessNotCertified {
        residual: max_abs_diff(&image, &x),
    })
}

fn periodic_witness(
    sys: &AveragingSystem,
    graph: &crate::graph::DiGraph,
    report: &crate::graph::RootReport,
    gamma: f64,
    delta: f64,
) -> Result<WitnessReport> {
    let component = &report.components[0];
    let period = report
        .period
        .ok_or_else(|| Error::Internal("connected root without a cycle".into()))?
        as usize;
    if period < 2 {
        return Err(Error::Internal(
            "periodic witness requested for an aperiodic root".into(),
        ));
    }
    let classes = graph.period_partition(component)?;
    let p = sys.node_count();
    // gamma on the first class, delta on the rest of the root; off-root
    // coordinates take gamma by convention (they do not affect the root)
    let mut start = vec![gamma; p];
    for class in classes.iter().skip(1) {
        for &v in class {
            start[v] = delta;
        }
    }
    let mut orbit = vec![start.clone()];
    let mut x = start.clone();
    let mut root_liminf = f64::INFINITY;
    let mut root_limsup = f64::NEG_INFINITY;
    for n in 1..=3 * period {
        x = sys.apply(&x)?;
        for (k, class) in classes.iter().enumerate() {
            let expected = if k == n % period { gamma } else { delta };
            for &v in class {
                if x[v] != expected {
                    return Err(Error::WitnessNotCertified {
                        residual: (x[v] - expected).abs(),
                    });
                }
                root_liminf = root_liminf.min(x[v]);
                root_limsup = root_limsup.max(x[v]);
            }
        }
        orbit.push(x.clone());
    }
    Ok(WitnessReport::PeriodicRoot {
        period,
        classes,
        start,
        orbit,
        root_liminf,
        root_limsup,
    })
}
