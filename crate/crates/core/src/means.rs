//! Parametrized mean families. Every family satisfies
//! `min(x) <= M(x) <= max(x)` on its domain; strict families keep both
//! inequalities strict on nonconstant input. Evaluation returns the common
//! value unchanged on constant input, so reflexivity is exact in floating
//! point.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Absolute tolerance for weight normalization and audit comparisons.
pub const MEAN_TOL: f64 = 1e-12;

/// One node's aggregation rule. Immutable after construction; evaluation is
/// pure.
#[derive(Debug, Clone, PartialEq)]
pub enum MeanSpec {
    /// Power mean with exponent `t` (`t = 0` is the geometric mean,
    /// `t = -inf`/`+inf` are min/max). Exponents other than 1 and the two
    /// infinities require strictly positive arguments.
    Power { exponent: f64, arity: usize },
    /// Arithmetic mean with nonnegative weights summing to 1.
    WeightedArithmetic { weights: Vec<f64> },
    /// Returns one argument unchanged; a weighted arithmetic mean with a
    /// trivial weight vector.
    Projection { index: usize, arity: usize },
    /// Symmetric continuous strict 3-variable mean built from the arithmetic
    /// mean plus two compactly supported bumps; see [`MeanSpec::bumped`].
    BumpedArithmetic(BumpedMean),
}

/// Analytic properties of a mean family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanFlags {
    pub strict: bool,
    pub monotone: bool,
    pub homogeneous: bool,
    pub symmetric: bool,
}

impl MeanSpec {
    pub fn power(exponent: f64, arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::InvalidMean("arity must be positive".into()));
        }
        if exponent.is_nan() {
            return Err(Error::InvalidMean("exponent must not be NaN".into()));
        }
        Ok(Self::Power { exponent, arity })
    }

    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMean("weight vector must be nonempty".into()));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidMean("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > MEAN_TOL {
            return Err(Error::InvalidMean(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(Self::WeightedArithmetic { weights })
    }

    pub fn projection(index: usize, arity: usize) -> Result<Self> {
        if arity == 0 || index >= arity {
            return Err(Error::InvalidMean(format!(
                "projection index {index} outside arity {arity}"
            )));
        }
        Ok(Self::Projection { index, arity })
    }

    /// Builds the symmetric strict 3-variable mean pinned to
    /// `F(a, d, b) = c` and `F(a, d, c) = b` on every argument permutation.
    ///
    /// The construction adds two tent bumps (max-metric distance to the
    /// permutation orbits of `(a, d, b)` and `(a, d, c)`, support radius `r`)
    /// to the plain arithmetic mean. Construction runs a deterministic grid
    /// audit plus seeded random sampling over `[a - r, d + r]^3` and rejects
    /// any radius for which the mean property or strictness fails.
    pub fn bumped(a: f64, b: f64, c: f64, d: f64, r: f64) -> Result<Self> {
        let mean = BumpedMean::new(a, b, c, d, r)?;
        Ok(Self::BumpedArithmetic(mean))
    }

    /// Default support radius: a quarter of the smallest gap among the
    /// anchors, which also keeps the two bump supports disjoint.
    pub fn bumped_default_radius(a: f64, b: f64, c: f64, d: f64) -> f64 {
        let gaps = [b - a, c - b, d - c];
        gaps.iter().copied().fold(f64::INFINITY, f64::min) / 4.0
    }

    pub fn arity(&self) -> usize {
        match self {
            Self::Power { arity, .. } => *arity,
            Self::WeightedArithmetic { weights } => weights.len(),
            Self::Projection { arity, .. } => *arity,
            Self::BumpedArithmetic(_) => 3,
        }
    }

    /// Evaluates the mean. Constant input returns the common value bit-exact.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                actual: x.len(),
            });
        }
        if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::MeanDomain {
                index: i,
                value: v,
                reason: "argument must be finite".into(),
            });
        }
        let (min, max) = min_max(x);
        if min == max {
            return Ok(x[0]);
        }
        match self {
            Self::Power { exponent, .. } => {
                let t = *exponent;
                if t == f64::INFINITY {
                    return Ok(max);
                }
                if t == f64::NEG_INFINITY {
                    return Ok(min);
                }
                if t == 1.0 {
                    return Ok(x.iter().sum::<f64>() / x.len() as f64);
                }
                if let Some((i, &v)) = x.iter().enumerate().find(|(_, v)| **v <= 0.0) {
                    return Err(Error::MeanDomain {
                        index: i,
                        value: v,
                        reason: format!("power mean with exponent {t} needs positive arguments"),
                    });
                }
                if t == 0.0 {
                    // geometric mean through logs, immune to overflow
                    let log_mean = x.iter().map(|v| v.ln()).sum::<f64>() / x.len() as f64;
                    Ok(log_mean.exp())
                } else {
                    let moment = x.iter().map(|v| v.powf(t)).sum::<f64>() / x.len() as f64;
                    Ok(moment.powf(1.0 / t))
                }
            }
            Self::WeightedArithmetic { weights } => {
                Ok(weights.iter().zip(x).map(|(w, v)| w * v).sum())
            }
            Self::Projection { index, .. } => Ok(x[*index]),
            Self::BumpedArithmetic(f) => Ok(f.evaluate(x[0], x[1], x[2])),
        }
    }

    pub fn flags(&self) -> MeanFlags {
        match self {
            Self::Power { exponent, .. } => MeanFlags {
                strict: exponent.is_finite(),
                monotone: true,
                homogeneous: true,
                symmetric: true,
            },
            Self::WeightedArithmetic { weights } => MeanFlags {
                strict: weights.iter().all(|&w| w > 0.0),
                monotone: true,
                homogeneous: true,
                symmetric: weights.windows(2).all(|w| w[0] == w[1]),
            },
            Self::Projection { .. } => MeanFlags {
                strict: false,
                monotone: true,
                homogeneous: true,
                // a 1-variable projection is trivially symmetric
                symmetric: self.arity() == 1,
            },
            Self::BumpedArithmetic(_) => MeanFlags {
                strict: true,
                monotone: false,
                homogeneous: false,
                symmetric: true,
            },
        }
    }

    /// Randomized audit of the mean property over `samples` vectors drawn
    /// uniformly from `domain`. For strict-flagged means, strictness on
    /// nonconstant vectors is audited too. Violations are reported, not
    /// raised.
    pub fn check_mean_property(
        &self,
        samples: usize,
        domain: (f64, f64),
        seed: u64,
    ) -> MeanPropertyReport {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let strict = self.flags().strict;
        let mut report = MeanPropertyReport {
            samples,
            ..MeanPropertyReport::default()
        };
        for _ in 0..samples {
            let x: Vec<f64> = (0..self.arity())
                .map(|_| rng.gen_range(domain.0..=domain.1))
                .collect();
            let value = match self.evaluate(&x) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let (min, max) = min_max(&x);
            let excess = (min - value).max(value - max);
            if excess > MEAN_TOL {
                report.mean_violations += 1;
                report.worst_excess = report.worst_excess.max(excess);
            }
            if strict && min != max && (value - min <= MEAN_TOL || max - value <= MEAN_TOL) {
                report.strictness_violations += 1;
            }
        }
        report
    }
}

/// Outcome of a randomized mean-property audit.
#[derive(Debug, Clone, Default)]
pub struct MeanPropertyReport {
    pub samples: usize,
    pub mean_violations: usize,
    pub strictness_violations: usize,
    pub worst_excess: f64,
}

impl MeanPropertyReport {
    pub fn clean(&self) -> bool {
        self.mean_violations == 0 && self.strictness_violations == 0
    }
}

/// The pinned 3-variable mean: arithmetic mean plus two symmetric tent bumps.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpedMean {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub radius: f64,
    amp_to_c: f64,
    amp_to_b: f64,
}

impl BumpedMean {
    fn new(a: f64, b: f64, c: f64, d: f64, r: f64) -> Result<Self> {
        if !(a < b && b < c && c < d) {
            return Err(Error::InvalidMean(format!(
                "anchors must be strictly ordered, got {a}, {b}, {c}, {d}"
            )));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidMean("support radius must be positive".into()));
        }
        // the two orbits are (c - b) apart in the max metric; disjoint
        // supports need 2r strictly below that
        if 2.0 * r >= c - b {
            return Err(Error::InvalidMean(format!(
                "support radius {r} too large: bump supports overlap (gap {})",
                c - b
            )));
        }
        let amp_to_c = c - (a + d + b) / 3.0;
        let amp_to_b = b - (a + d + c) / 3.0;
        let mean = Self {
            a,
            b,
            c,
            d,
            radius: r,
            amp_to_c,
            amp_to_b,
        };
        mean.audit()?;
        Ok(mean)
    }

    /// Max-metric distance from `(x, y, z)` to the closest permutation of
    /// `(p, q, s)`.
    fn orbit_distance(x: f64, y: f64, z: f64, p: f64, q: f64, s: f64) -> f64 {
        let perms = [
            (p, q, s),
            (p, s, q),
            (q, p, s),
            (q, s, p),
            (s, p, q),
            (s, q, p),
        ];
        perms
            .iter()
            .map(|&(u, v, w)| (x - u).abs().max((y - v).abs()).max((z - w).abs()))
            .fold(f64::INFINITY, f64::min)
    }

    fn evaluate(&self, x: f64, y: f64, z: f64) -> f64 {
        // canonical argument order makes symmetry exact in floating point
        let mut s = [x, y, z];
        s.sort_by(|a, b| a.partial_cmp(b).expect("finite arguments"));
        let [x, y, z] = s;
        let base = (x + y + z) / 3.0;
        let d1 = Self::orbit_distance(x, y, z, self.a, self.d, self.b);
        let d2 = Self::orbit_distance(x, y, z, self.a, self.d, self.c);
        let tent = |dist: f64| (1.0 - dist / self.radius).max(0.0);
        base + self.amp_to_c * tent(d1) + self.amp_to_b * tent(d2)
    }

    /// Deterministic grid (21 points per axis over the padded anchor box)
    /// plus seeded random samples; rejects the radius on any mean-property or
    /// strictness violation.
    fn audit(&self) -> Result<()> {
        let lo = self.a - self.radius;
        let hi = self.d + self.radius;
        let n = 21;
        let coord = |i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let check = |x: f64, y: f64, z: f64| -> Result<()> {
            let (min, max) = min_max(&[x, y, z]);
            if min == max {
                return Ok(());
            }
            let v = self.evaluate(x, y, z);
            if v <= min || v >= max {
                return Err(Error::InvalidMean(format!(
                    "radius {} fails strictness at ({x}, {y}, {z}): value {v}",
                    self.radius
                )));
            }
            Ok(())
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    check(coord(i), coord(j), coord(k))?;
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10_000 {
            check(
                rng.gen_range(lo..=hi),
                rng.gen_range(lo..=hi),
                rng.gen_range(lo..=hi),
            )?;
        }
        Ok(())
    }
}

fn min_max(x: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in x {
        min = min.min(v);
        max = max.max(v);
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(actual: f64, expected: f64, tol: f64) {
        assert!(
            (actual - expected).abs() <= tol,
            "{actual} != {expected} (tol {tol})"
        );
    }

    #[test]
    fn harmonic_mean_closed_form() {
        let h = MeanSpec::power(-1.0, 2).unwrap();
        let (x, y) = (3.0_f64, 5.0_f64);
        assert_close(h.evaluate(&[x, y]).unwrap(), 2.0 * x * y / (x + y), 1e-15);
        assert_eq!(h.evaluate(&[1.0, 1.0]).unwrap(), 1.0);
    }

    #[test]
    fn arithmetic_harmonic_iteration_reaches_the_geometric_mean() {
        let arithmetic = MeanSpec::power(1.0, 2).unwrap();
        let harmonic = MeanSpec::power(-1.0, 2).unwrap();
        let (mut x, mut y) = (1.0, 4.0);
        for _ in 0..64 {
            let h = harmonic.evaluate(&[x, y]).unwrap();
            let a = arithmetic.evaluate(&[x, y]).unwrap();
            x = h;
            y = a;
        }
        assert_close(x, 2.0, 1e-12);
        assert_close(y, 2.0, 1e-12);
    }

    #[test]
    fn weighted_arithmetic_matches_the_written_out_form() {
        let w = MeanSpec::weighted(vec![1.0 / 9.0, 2.0 / 9.0, 3.0 / 9.0, 3.0 / 9.0]).unwrap();
        let x = [2.0, 5.0, 7.0, 11.0];
        let expected = (x[0] + 2.0 * x[1] + 3.0 * x[2] + 3.0 * x[3]) / 9.0;
        assert_close(w.evaluate(&x).unwrap(), expected, 1e-15);
    }

    #[test]
    fn weight_validation() {
        assert!(MeanSpec::weighted(vec![0.5, 0.4]).is_err());
        assert!(MeanSpec::weighted(vec![1.5, -0.5]).is_err());
        assert!(MeanSpec::weighted(vec![]).is_err());
        assert!(MeanSpec::weighted(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn geometric_mean_uses_logs() {
        let g = MeanSpec::power(0.0, 3).unwrap();
        assert_close(g.evaluate(&[1.0, 8.0, 27.0]).unwrap(), 6.0, 1e-12);
        // values around 1e300 would overflow a naive product
        assert_close(
            g.evaluate(&[1e300, 1e300, 1e-300]).unwrap(),
            1e100,
            1e88,
        );
    }

    #[test]
    fn min_max_exponents() {
        let lo = MeanSpec::power(f64::NEG_INFINITY, 3).unwrap();
        let hi = MeanSpec::power(f64::INFINITY, 3).unwrap();
        assert_eq!(lo.evaluate(&[3.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(hi.evaluate(&[3.0, 1.0, 2.0]).unwrap(), 3.0);
        assert!(!lo.flags().strict);
        assert!(!hi.flags().strict);
    }

    #[test]
    fn power_mean_rejects_nonpositive_arguments() {
        let h = MeanSpec::power(-1.0, 2).unwrap();
        assert!(matches!(
            h.evaluate(&[0.0, 1.0]),
            Err(Error::MeanDomain { .. })
        ));
        let q = MeanSpec::power(2.0, 2).unwrap();
        assert!(q.evaluate(&[-1.0, 1.0]).is_err());
        // the arithmetic mean works on all reals
        let a = MeanSpec::power(1.0, 2).unwrap();
        assert_eq!(a.evaluate(&[-3.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let a = MeanSpec::power(1.0, 2).unwrap();
        assert!(matches!(
            a.evaluate(&[1.0, 2.0, 3.0]),
            Err(Error::ArityMismatch {
                expected: 2,
                actual: 3
            })
        ));
    }

    #[test]
    fn flags_by_family() {
        assert_eq!(
            MeanSpec::power(1.0, 2).unwrap().flags(),
            MeanFlags {
                strict: true,
                monotone: true,
                homogeneous: true,
                symmetric: true
            }
        );
        // a degenerate weight vector is a projection in disguise
        assert!(!MeanSpec::weighted(vec![1.0, 0.0]).unwrap().flags().strict);
        assert!(MeanSpec::weighted(vec![0.5, 0.5]).unwrap().flags().symmetric);
        assert!(!MeanSpec::weighted(vec![0.7, 0.3]).unwrap().flags().symmetric);
        let proj = MeanSpec::projection(0, 2).unwrap();
        assert!(!proj.flags().strict);
        assert!(proj.flags().monotone);
    }

    #[test]
    fn bumped_mean_hits_its_pinned_values() {
        let r = MeanSpec::bumped_default_radius(0.0, 1.0, 2.0, 3.0);
        let f = MeanSpec::bumped(0.0, 1.0, 2.0, 3.0, r).unwrap();
        for perm in [
            [0.0, 3.0, 1.0],
            [0.0, 1.0, 3.0],
            [3.0, 0.0, 1.0],
            [3.0, 1.0, 0.0],
            [1.0, 0.0, 3.0],
            [1.0, 3.0, 0.0],
        ] {
            assert_close(f.evaluate(&perm).unwrap(), 2.0, 1e-12);
        }
        for perm in [[0.0, 3.0, 2.0], [2.0, 0.0, 3.0], [3.0, 2.0, 0.0]] {
            assert_close(f.evaluate(&perm).unwrap(), 1.0, 1e-12);
        }
    }

    #[test]
    fn bumped_mean_is_reflexive_and_symmetric() {
        let f = MeanSpec::bumped(0.0, 1.0, 2.0, 3.0, 0.25).unwrap();
        for t in [0.0, 0.3, 1.7, 3.0] {
            assert_eq!(f.evaluate(&[t, t, t]).unwrap(), t);
        }
        let v = f.evaluate(&[0.1, 2.2, 2.9]).unwrap();
        assert_eq!(f.evaluate(&[2.2, 2.9, 0.1]).unwrap(), v);
        assert_eq!(f.evaluate(&[2.9, 0.1, 2.2]).unwrap(), v);
    }

    #[test]
    fn bumped_mean_rejects_oversized_radius() {
        assert!(MeanSpec::bumped(0.0, 1.0, 2.0, 3.0, 0.6).is_err());
        assert!(MeanSpec::bumped(0.0, 2.0, 1.0, 3.0, 0.1).is_err());
    }

    #[test]
    fn bumped_mean_strict_on_dense_grid() {
        let f = MeanSpec::bumped(0.0, 1.0, 2.0, 3.0, 0.25).unwrap();
        let n = 47usize; // ~1e5 points, offset from the audit grid
        let coord = |i: usize| 3.0 * i as f64 / (n - 1) as f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let (x, y, z) = (coord(i), coord(j), coord(k));
                    let (min, max) = min_max(&[x, y, z]);
                    if min == max {
                        continue;
                    }
                    let v = f.evaluate(&[x, y, z]).unwrap();
                    assert!(min < v && v < max, "not strict at ({x}, {y}, {z}): {v}");
                }
            }
        }
    }

    #[test]
    fn mean_property_audits() {
        let g = MeanSpec::power(0.0, 3).unwrap();
        assert!(g.check_mean_property(10_000, (0.1, 10.0), 0).clean());

        let proj = MeanSpec::projection(0, 2).unwrap();
        let report = proj.check_mean_property(10_000, (0.0, 1.0), 0);
        assert_eq!(report.mean_violations, 0);
        // projections attain the extremes, but strictness is not audited for
        // non-strict families
        assert_eq!(report.strictness_violations, 0);

        let f = MeanSpec::bumped(0.0, 1.0, 2.0, 3.0, 0.25).unwrap();
        assert!(f.check_mean_property(10_000, (0.0, 3.0), 1).clean());
    }

    #[test]
    fn power_means_are_monotone_by_finite_differences() {
        for t in [-2.0, -1.0, 0.0, 0.5, 1.0, 2.0, 3.0] {
            let m = MeanSpec::power(t, 3).unwrap();
            let base = [0.7, 1.9, 4.2];
            let v0 = m.evaluate(&base).unwrap();
            for i in 0..3 {
                let mut bumped = base;
                bumped[i] += 1e-3;
                let v1 = m.evaluate(&bumped).unwrap();
                assert!(v1 >= v0 - 1e-10, "t = {t}, coordinate {i}");
            }
        }
    }
}
