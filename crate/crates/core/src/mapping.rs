//! Wiring means into a self-map of the state space. An averaging system
//! holds one mean per node plus an index vector saying which coordinates the
//! node reads; applying it evaluates every node's mean on its selected
//! coordinates. The incidence graph records who reads whom.

use std::fmt;

use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::means::MeanSpec;

/// A real interval with optional open endpoints; infinite endpoints are
/// expressed with `f64::INFINITY` / `NEG_INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(Error::InvalidSystem(format!(
                "invalid interval endpoints {lo}, {hi}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            lo_open,
            hi_open,
        })
    }

    /// The open positive half-line, the natural domain of power-mean systems.
    pub fn positive() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
            lo_open: true,
            hi_open: true,
        }
    }

    /// The whole real line, the natural domain of arithmetic-only systems.
    pub fn reals() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
            lo_open: true,
            hi_open: true,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, false, false)
    }

    pub fn contains(&self, x: f64) -> bool {
        if x.is_nan() {
            return false;
        }
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' },
        )
    }
}

/// A mean per node plus the 0-based index vector each node reads. Induces
/// the self-map whose i-th coordinate is `means[i]` evaluated on
/// `x[alpha[i][0]], ..., x[alpha[i][d_i - 1]]`.
#[derive(Debug, Clone)]
pub struct AveragingSystem {
    means: Vec<MeanSpec>,
    alpha: Vec<Vec<usize>>,
    domain: Interval,
}

impl AveragingSystem {
    pub fn new(means: Vec<MeanSpec>, alpha: Vec<Vec<usize>>, domain: Interval) -> Result<Self> {
        let p = means.len();
        if p == 0 {
            return Err(Error::InvalidSystem("a system needs at least one node".into()));
        }
        if alpha.len() != p {
            return Err(Error::InvalidSystem(format!(
                "{} index vectors for {p} nodes",
                alpha.len()
            )));
        }
        for (i, (mean, indices)) in means.iter().zip(&alpha).enumerate() {
            if mean.arity() != indices.len() {
                return Err(Error::InvalidSystem(format!(
                    "node {i}: mean arity {} but {} indices",
                    mean.arity(),
                    indices.len()
                )));
            }
            if let Some(&bad) = indices.iter().find(|&&j| j >= p) {
                return Err(Error::InvalidSystem(format!(
                    "node {i} reads coordinate {bad}, system has {p}"
                )));
            }
        }
        Ok(Self {
            means,
            alpha,
            domain,
        })
    }

    pub fn node_count(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[MeanSpec] {
        &self.means
    }

    pub fn alpha(&self) -> &[Vec<usize>] {
        &self.alpha
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn check_state(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.node_count(),
                actual: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            if !self.domain.contains(v) {
                return Err(Error::DomainViolation {
                    index: i,
                    value: v,
                    domain: self.domain.to_string(),
                });
            }
        }
        Ok(())
    }

    /// One application of the mean-type mapping. The output lies in
    /// `[min(x), max(x)]` componentwise, hence stays in the domain.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_state(x)?;
        let mut scratch = Vec::new();
        self.means
            .iter()
            .zip(&self.alpha)
            .map(|(mean, indices)| {
                scratch.clear();
                scratch.extend(indices.iter().map(|&j| x[j]));
                mean.evaluate(&scratch)
            })
            .collect()
    }

    /// The incidence graph: an edge (alpha[i][j], i) for every argument slot,
    /// oriented source-of-information to consumer. Duplicate reads collapse
    /// to one edge.
    pub fn incidence_graph(&self) -> DiGraph {
        let p = self.node_count();
        let edges = self
            .alpha
            .iter()
            .enumerate()
            .flat_map(|(i, indices)| indices.iter().map(move |&j| (j, i)));
        DiGraph::new(p, edges).expect("validated indices")
    }

    /// The subsystem on the root of the incidence graph, reindexed to
    /// 0..q-1 in ascending root order. Well-defined because no root node
    /// reads a coordinate outside the root; a violation means the incidence
    /// computation is broken and is reported as an internal error.
    pub fn restrict_to_root(&self) -> Result<RootSubsystem> {
        let root = self.incidence_graph().root().root;
        let mut new_index = vec![usize::MAX; self.node_count()];
        for (new, &old) in root.iter().enumerate() {
            new_index[old] = new;
        }
        let mut means = Vec::with_capacity(root.len());
        let mut alpha = Vec::with_capacity(root.len());
        for &v in &root {
            let remapped: Vec<usize> = self.alpha[v]
                .iter()
                .map(|&j| {
                    if new_index[j] == usize::MAX {
                        Err(Error::Internal(format!(
                            "root node {v} reads non-root coordinate {j}"
                        )))
                    } else {
                        Ok(new_index[j])
                    }
                })
                .collect::<Result<_>>()?;
            means.push(self.means[v].clone());
            alpha.push(remapped);
        }
        Ok(RootSubsystem {
            system: AveragingSystem::new(means, alpha, self.domain)?,
            root,
        })
    }
}

/// Result of restricting a system to its root: the subsystem plus the
/// ascending list of original root vertices (`root[i]` is subsystem node `i`).
#[derive(Debug, Clone)]
pub struct RootSubsystem {
    pub system: AveragingSystem,
    pub root: Vec<usize>,
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Two looped power-mean nodes feeding a harmonic/arithmetic tail; the
    /// root subsystem is the arithmetic-harmonic pair whose invariant mean is
    /// the geometric mean.
    pub fn agm_system() -> AveragingSystem {
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

    /// Two identity sources and two bumped-mean readers; started from
    /// (a, d, b, c) the last two coordinates swap forever.
    pub fn oscillating_system(a: f64, b: f64, c: f64, d: f64) -> AveragingSystem {
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

    /// Two frozen sources and two weighted-arithmetic readers; affine, so it
    /// is exactly a row-stochastic matrix.
    pub fn two_anchor_affine_system() -> AveragingSystem {
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
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use std::collections::BTreeSet;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "{actual} != {expected} (tol {tol})"
        );
    }

    #[test]
    fn agm_system_applies_to_the_written_out_form() {
        let sys = agm_system();
        let (x, y, z, t) = (1.0, 4.0, 7.0, 9.0);
        let out = sys.apply(&[x, y, z, t]).unwrap();
        assert_close(out[0], 2.0 * x * y / (x + y), 1e-15);
        assert_close(out[1], (x + y) / 2.0, 1e-15);
        assert_close(out[2], 2.0 * y * t / (y + t), 1e-15);
        assert_close(out[3], (z + t) / 2.0, 1e-15);
    }

    #[test]
    fn constant_states_are_fixed_points() {
        for sys in [agm_system(), two_anchor_affine_system()] {
            let x = vec![2.5; 4];
            assert_eq!(sys.apply(&x).unwrap(), x);
        }
        let sys = oscillating_system(0.0, 1.0, 2.0, 3.0);
        let x = vec![1.5; 4];
        assert_eq!(sys.apply(&x).unwrap(), x);
    }

    #[test]
    fn oscillating_system_swaps_its_two_readers() {
        let (a, b, c, d) = (0.0, 1.0, 2.0, 3.0);
        let sys = oscillating_system(a, b, c, d);
        let v1 = [a, d, b, c];
        let v2 = [a, d, c, b];
        let out1 = sys.apply(&v1).unwrap();
        let out2 = sys.apply(&v2).unwrap();
        for i in 0..4 {
            assert_close(out1[i], v2[i], 1e-12);
            assert_close(out2[i], v1[i], 1e-12);
        }
    }

    #[test]
    fn incidence_graph_of_agm_system_matches_the_ergodic_root_example() {
        let g = agm_system().incidence_graph();
        let expected: BTreeSet<(usize, usize)> = [
            (0, 0),
            (1, 1),
            (3, 3),
            (0, 1),
            (1, 0),
            (1, 2),
            (2, 3),
            (3, 2),
        ]
        .into_iter()
        .collect();
        assert_eq!(g.edges().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn single_self_reader_has_a_loop() {
        let sys = AveragingSystem::new(
            vec![MeanSpec::projection(0, 1).unwrap()],
            vec![vec![0]],
            Interval::reals(),
        )
        .unwrap();
        let g = sys.incidence_graph();
        assert_eq!(g.vertex_count(), 1);
        assert!(g.has_edge(0, 0));
    }

    #[test]
    fn affine_fixture_incidence_matches_the_funnel_graph() {
        let g = two_anchor_affine_system().incidence_graph();
        let expected: BTreeSet<(usize, usize)> = [
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (0, 2),
            (1, 2),
            (3, 2),
            (0, 3),
            (1, 3),
            (2, 3),
        ]
        .into_iter()
        .collect();
        assert_eq!(g.edges().collect::<BTreeSet<_>>(), expected);
    }

    #[test]
    fn duplicate_reads_collapse_to_one_edge() {
        let sys = AveragingSystem::new(
            vec![
                MeanSpec::weighted(vec![0.25, 0.25, 0.5]).unwrap(),
                MeanSpec::projection(0, 1).unwrap(),
            ],
            vec![vec![1, 1, 0], vec![1]],
            Interval::reals(),
        )
        .unwrap();
        let g = sys.incidence_graph();
        assert_eq!(g.edge_count(), 3); // (1,0), (0,0), (1,1)
        assert!(g.has_edge(1, 0));
        assert!(g.has_edge(0, 0));
    }

    #[test]
    fn agm_root_subsystem_is_the_arithmetic_harmonic_pair() {
        let restricted = agm_system().restrict_to_root().unwrap();
        assert_eq!(restricted.root, vec![0, 1]);
        let out = restricted.system.apply(&[1.0, 4.0]).unwrap();
        assert_close(out[0], 2.0 * 4.0 / 5.0, 1e-15);
        assert_close(out[1], 2.5, 1e-15);
    }

    #[test]
    fn irreducible_system_restricts_to_itself() {
        let sys = AveragingSystem::new(
            vec![
                MeanSpec::power(1.0, 2).unwrap(),
                MeanSpec::power(0.0, 2).unwrap(),
            ],
            vec![vec![0, 1], vec![0, 1]],
            Interval::positive(),
        )
        .unwrap();
        let restricted = sys.restrict_to_root().unwrap();
        assert_eq!(restricted.root, vec![0, 1]);
        let x = [2.0, 8.0];
        assert_eq!(
            restricted.system.apply(&x).unwrap(),
            sys.apply(&x).unwrap()
        );
    }

    #[test]
    fn affine_fixture_restricts_to_the_identity_pair() {
        let restricted = two_anchor_affine_system().restrict_to_root().unwrap();
        assert_eq!(restricted.root, vec![0, 1]);
        let x = [3.0, -1.0];
        assert_eq!(restricted.system.apply(&x).unwrap(), vec![3.0, -1.0]);
    }

    #[test]
    fn root_orbit_projection_commutes_with_restriction_bitwise() {
        let sys = agm_system();
        let restricted = sys.restrict_to_root().unwrap();
        let mut full = vec![1.3, 4.7, 0.9, 6.2];
        let mut projected: Vec<f64> = restricted.root.iter().map(|&v| full[v]).collect();
        for _ in 0..50 {
            full = sys.apply(&full).unwrap();
            projected = restricted.system.apply(&projected).unwrap();
            let reprojected: Vec<f64> = restricted.root.iter().map(|&v| full[v]).collect();
            assert_eq!(projected, reprojected, "projection must commute bitwise");
        }
    }

    #[test]
    fn apply_is_componentwise_bounded() {
        let sys = agm_system();
        let x = [0.5, 9.0, 2.0, 4.0];
        let out = sys.apply(&x).unwrap();
        for &v in &out {
            assert!((0.5..=9.0).contains(&v));
        }
    }

    #[test]
    fn domain_violations_are_reported_with_the_offending_index() {
        let sys = agm_system();
        match sys.apply(&[1.0, -2.0, 3.0, 4.0]) {
            Err(Error::DomainViolation { index: 1, .. }) => {}
            other => panic!("expected a domain violation, got {other:?}"),
        }
        assert!(matches!(
            sys.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn validation_rejects_bad_wiring() {
        let means = vec![MeanSpec::power(1.0, 2).unwrap()];
        assert!(AveragingSystem::new(means.clone(), vec![vec![0]], Interval::reals()).is_err());
        assert!(AveragingSystem::new(means, vec![vec![0, 5]], Interval::reals()).is_err());
        assert!(AveragingSystem::new(vec![], vec![], Interval::reals()).is_err());
    }

    #[test]
    fn monotone_means_make_the_mapping_componentwise_monotone() {
        let sys = agm_system();
        assert!(sys.means().iter().all(|m| m.flags().monotone));
        let x = [1.0, 4.0, 7.0, 9.0];
        let base = sys.apply(&x).unwrap();
        for i in 0..4 {
            let mut bumped = x;
            bumped[i] += 1e-4;
            let out = sys.apply(&bumped).unwrap();
            for k in 0..4 {
                assert!(out[k] >= base[k] - 1e-10, "coordinate {k} after bumping {i}");
            }
        }
    }

    #[test]
    fn homogeneous_systems_scale() {
        let sys = agm_system();
        let x = [1.0, 4.0, 7.0, 9.0];
        let out = sys.apply(&x).unwrap();
        for lambda in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = x.iter().map(|v| lambda * v).collect();
            let out_scaled = sys.apply(&scaled).unwrap();
            for i in 0..4 {
                let rel = (out_scaled[i] - lambda * out[i]).abs() / (lambda * out[i]).abs();
                assert!(rel <= 1e-12);
            }
        }
    }
}
