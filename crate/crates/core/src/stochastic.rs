//! The weighted-arithmetic special case. When every node aggregates with a
//! weighted arithmetic mean (projections included), the mapping is exactly a
//! row-stochastic matrix, and the limit of the iteration is the limit of the
//! matrix powers: stationary rows on the root components, absorption weights
//! elsewhere. An exact rational mode reproduces fraction-valued limits
//! bit-for-bit.

use num::rational::BigRational;
use num::{BigInt, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::graph::DiGraph;
use crate::mapping::AveragingSystem;
use crate::means::MeanSpec;

/// Row-sum tolerance for floating-point matrices.
const ROW_SUM_TOL: f64 = 1e-12;
/// Cap on repeated squarings in the cross-check (2^64-step horizon).
const MAX_SQUARINGS: usize = 64;

/// A square nonnegative matrix with unit row sums. Row i holds the weights
/// node i puts on everyone's current value, so applying the matrix is one
/// aggregation step: entry (i, j) > 0 exactly when j feeds i.
#[derive(Debug, Clone, PartialEq)]
pub struct RowStochasticMatrix {
    entries: Vec<Vec<f64>>,
}

impl RowStochasticMatrix {
    pub fn new(entries: Vec<Vec<f64>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                if !(v >= 0.0) {
                    return Err(Error::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::NotRowStochastic { row: i, sum });
            }
        }
        Ok(Self { entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    /// The influence graph of the positivity pattern: edge (j, i) whenever
    /// entry (i, j) is positive.
    pub fn pattern_graph(&self) -> DiGraph {
        let n = self.size();
        let edges = self.entries.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v > 0.0)
                .map(move |(j, _)| (j, i))
        });
        DiGraph::new(n, edges).expect("indices in range")
    }

    /// One aggregation step, A.x. Constant input returns the constant
    /// unchanged, matching mean evaluation.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.size() {
            return Err(Error::DimensionMismatch {
                expected: self.size(),
                actual: x.len(),
            });
        }
        if x.windows(2).all(|w| w[0] == w[1]) {
            return Ok(x.to_vec());
        }
        Ok(self
            .entries
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, v)| a * v).sum())
            .collect())
    }

    /// lim A^n, computed structurally: the stationary row of each root
    /// component of the pattern graph, absorption weights for everyone else.
    /// The result is cross-checked against repeated squaring of A; `tol`
    /// controls both the squaring stop and (scaled by 100, floored at 1e-10)
    /// the allowed disagreement. Errors when some root component is periodic,
    /// since the powers then have no limit.
    pub fn limit(&self, tol: f64) -> Result<Vec<Vec<f64>>> {
        let n = self.size();
        let graph = self.pattern_graph();
        let report = graph.root();
        let mut limit = vec![vec![0.0; n]; n];
        for component in &report.components {
            let period = graph.period(component)?;
            if period != 1 {
                return Err(Error::NoMatrixLimit {
                    component: component
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    period,
                });
            }
            let block = submatrix(&self.entries, component, component);
            let pi = stationary_distribution(&block, tol)?;
            for &i in component {
                for (k, &j) in component.iter().enumerate() {
                    limit[i][j] = pi[k];
                }
            }
        }
        let nonroot: Vec<usize> = (0..n).filter(|v| !report.root.contains(v)).collect();
        if !nonroot.is_empty() {
            let q = submatrix(&self.entries, &nonroot, &nonroot);
            let s = submatrix(&self.entries, &nonroot, &report.root);
            // (I - Q) B = S; B holds total absorption weights on root states
            let mut i_minus_q = q;
            for (r, row) in i_minus_q.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v = if r == c { 1.0 - *v } else { -*v };
                }
            }
            let b = solve_multi(i_minus_q, s)?;
            for (r, &i) in nonroot.iter().enumerate() {
                for c in 0..n {
                    limit[i][c] = (0..report.root.len())
                        .map(|k| b[r][k] * limit[report.root[k]][c])
                        .sum();
                }
            }
        }

        // independent route: repeated squaring until successive powers agree
        let mut power = self.entries.clone();
        for _ in 0..MAX_SQUARINGS {
            let squared = matmul(&power, &power);
            let diff = max_abs_matrix_diff(&squared, &power);
            power = squared;
            if diff < tol {
                break;
            }
        }
        let disagreement = max_abs_matrix_diff(&limit, &power);
        let allowed = (100.0 * tol).max(1e-10);
        if disagreement > allowed {
            return Err(Error::LimitCrossCheckFailed {
                difference: disagreement,
                tol: allowed,
            });
        }
        Ok(limit)
    }

    /// Row-major CSV, one matrix row per line.
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.entries)
    }

    /// Parses a row-major CSV matrix; cells may be plain numbers or rational
    /// literals like "1/3".
    pub fn from_csv(text: &str) -> Result<Self> {
        let entries = text
            .lines()
            .filter(|line| !line.trim().is_empty())
            .map(|line| {
                line.split(',')
                    .map(|cell| {
                        let cell = cell.trim();
                        match cell.parse::<f64>() {
                            Ok(v) => Ok(v),
                            Err(_) => parse_rational(cell)?.to_f64().ok_or_else(|| {
                                Error::InvalidSystem(format!("cell {cell:?} overflows f64"))
                            }),
                        }
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(entries)
    }
}

/// Row-major CSV rendering of any matrix.
pub fn matrix_to_csv(entries: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in entries {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Extracts the matrix of an affine system: entry (i, alpha[i][j]) picks up
/// weight j of node i's mean. Applying the system and multiplying by the
/// matrix agree exactly. Refuses any node whose mean is not a weighted
/// arithmetic mean or projection.
pub fn to_matrix(sys: &AveragingSystem) -> Result<RowStochasticMatrix> {
    let p = sys.node_count();
    let mut entries = vec![vec![0.0; p]; p];
    for (i, (mean, indices)) in sys.means().iter().zip(sys.alpha()).enumerate() {
        match mean {
            MeanSpec::WeightedArithmetic { weights } => {
                for (j, &w) in weights.iter().enumerate() {
                    entries[i][indices[j]] += w;
                }
            }
            MeanSpec::Projection { index, .. } => {
                entries[i][indices[*index]] += 1.0;
            }
            _ => return Err(Error::NotAffine { index: i }),
        }
    }
    RowStochasticMatrix::new(entries)
}

/// The unique stationary row of an irreducible aperiodic row-stochastic
/// block: pi with pi P = pi and sum(pi) = 1, by a partial-pivoting linear
/// solve. The residual must come in below `tol`.
pub fn stationary_distribution(p_block: &[Vec<f64>], tol: f64) -> Result<Vec<f64>> {
    let block = RowStochasticMatrix::new(p_block.to_vec())?;
    let k = block.size();
    let pattern = block.pattern_graph();
    let all: Vec<usize> = (0..k).collect();
    if !pattern.is_irreducible() || pattern.period(&all)? != 1 {
        return Err(Error::BadStochasticBlock);
    }
    // (P^T - I) pi = 0 with one row swapped for the normalization sum = 1;
    // the rows of P^T - I sum to zero, so dropping one keeps full information
    let mut a = vec![vec![0.0; k]; k];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = p_block[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[k - 1] = vec![1.0; k];
    let mut rhs = vec![vec![0.0]; k];
    rhs[k - 1][0] = 1.0;
    let solution = solve_multi(a, rhs)?;
    let pi: Vec<f64> = solution.into_iter().map(|row| row[0]).collect();
    let mut residual: f64 = 0.0;
    for j in 0..k {
        let image: f64 = (0..k).map(|i| pi[i] * p_block[i][j]).sum();
        residual = residual.max((image - pi[j]).abs());
    }
    if residual >= tol {
        return Err(Error::Internal(format!(
            "stationary residual {residual:e} exceeds {tol:e}"
        )));
    }
    Ok(pi)
}

fn submatrix(entries: &[Vec<f64>], rows: &[usize], cols: &[usize]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|&r| cols.iter().map(|&c| entries[r][c]).collect())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let inner = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..inner {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

fn max_abs_matrix_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Gaussian elimination with partial pivoting, multiple right-hand sides.
fn solve_multi(mut a: Vec<Vec<f64>>, mut rhs: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let width = rhs.first().map_or(0, |r| r.len());
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r, &s| {
                a[r][col]
                    .abs()
                    .partial_cmp(&a[s][col].abs())
                    .expect("finite entries")
            })
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row][j] -= factor * a[col][j];
            }
            for j in 0..width {
                rhs[row][j] -= factor * rhs[col][j];
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..width {
            let mut acc = rhs[col][j];
            for k in col + 1..n {
                acc -= a[col][k] * rhs[k][j];
            }
            rhs[col][j] = acc / a[col][col];
        }
    }
    Ok(rhs)
}

/// Parses a rational literal: "10/21", "3", or a plain decimal like "0.25".
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    let bad = |_| Error::InvalidSystem(format!("cannot parse rational literal {text:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(bad)?;
        let d: BigInt = den.trim().parse().map_err(bad)?;
        if d.is_zero() {
            return Err(Error::InvalidSystem(format!("zero denominator in {text:?}")));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let digits = frac_part.trim();
        let scale = BigInt::from(10u32).pow(digits.len() as u32);
        let int_part = if int_part.is_empty() { "0" } else { int_part };
        let whole: BigInt = int_part.parse().map_err(bad)?;
        let frac: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(bad)?
        };
        let negative = s.starts_with('-');
        let magnitude = whole.abs() * &scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(BigRational::new(signed, scale));
    }
    let n: BigInt = s.parse().map_err(bad)?;
    Ok(BigRational::from_integer(n))
}

/// Exact-arithmetic counterpart of [`RowStochasticMatrix`] for rational
/// weights; limits come out as exact fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalMatrix {
    entries: Vec<Vec<BigRational>>,
}

impl RationalMatrix {
    pub fn new(entries: Vec<Vec<BigRational>>) -> Result<Self> {
        let n = entries.len();
        for (i, row) in entries.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            if let Some(col) = row.iter().position(|v| v.is_negative()) {
                return Err(Error::NegativeEntry {
                    row: i,
                    col,
                    value: row[col].to_f64().unwrap_or(f64::NAN),
                });
            }
            let sum: BigRational = row.iter().cloned().sum();
            if !sum.is_one() {
                return Err(Error::NotRowStochastic {
                    row: i,
                    sum: sum.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn from_literals(rows: &[Vec<String>]) -> Result<Self> {
        let entries = rows
            .iter()
            .map(|row| row.iter().map(|s| parse_rational(s)).collect())
            .collect::<Result<Vec<Vec<BigRational>>>>()?;
        Self::new(entries)
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<BigRational>] {
        &self.entries
    }

    pub fn pattern_graph(&self) -> DiGraph {
        let n = self.size();
        let edges = self.entries.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, v)| v.is_positive())
                .map(move |(j, _)| (j, i))
        });
        DiGraph::new(n, edges).expect("indices in range")
    }

    /// lim A^n in exact rational arithmetic; same structure as the floating
    /// route, no cross-check needed.
    pub fn limit(&self) -> Result<RationalMatrix> {
        let n = self.size();
        let graph = self.pattern_graph();
        let report = graph.root();
        let zero = BigRational::zero();
        let mut limit = vec![vec![zero.clone(); n]; n];
        for component in &report.components {
            let period = graph.period(component)?;
            if period != 1 {
                return Err(Error::NoMatrixLimit {
                    component: component
                        .iter()
                        .map(|v| v.to_string())
                        .collect::<Vec<_>>()
                        .join(","),
                    period,
                });
            }
            let block = rational_submatrix(&self.entries, component, component);
            let pi = rational_stationary(&block)?;
            for &i in component {
                for (k, &j) in component.iter().enumerate() {
                    limit[i][j] = pi[k].clone();
                }
            }
        }
        let nonroot: Vec<usize> = (0..n).filter(|v| !report.root.contains(v)).collect();
        if !nonroot.is_empty() {
            let q = rational_submatrix(&self.entries, &nonroot, &nonroot);
            let s = rational_submatrix(&self.entries, &nonroot, &report.root);
            let mut i_minus_q = q;
            for (r, row) in i_minus_q.iter_mut().enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    let value = std::mem::replace(v, zero.clone());
                    *v = if r == c {
                        BigRational::one() - value
                    } else {
                        -value
                    };
                }
            }
            let b = rational_solve_multi(i_minus_q, s)?;
            for (r, &i) in nonroot.iter().enumerate() {
                for c in 0..n {
                    let mut acc = zero.clone();
                    for k in 0..report.root.len() {
                        acc += &b[r][k] * &limit[report.root[k]][c];
                    }
                    limit[i][c] = acc;
                }
            }
        }
        Ok(RationalMatrix { entries: limit })
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| v.to_f64().expect("rational fits in f64"))
                    .collect()
            })
            .collect()
    }

    /// Fractions in row-major CSV, integers without a slash.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.entries {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn rational_submatrix(
    entries: &[Vec<BigRational>],
    rows: &[usize],
    cols: &[usize],
) -> Vec<Vec<BigRational>> {
    rows.iter()
        .map(|&r| cols.iter().map(|&c| entries[r][c].clone()).collect())
        .collect()
}

fn rational_stationary(block: &[Vec<BigRational>]) -> Result<Vec<BigRational>> {
    let k = block.len();
    let mut a = vec![vec![BigRational::zero(); k]; k];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = block[j][i].clone()
                - if i == j {
                    BigRational::one()
                } else {
                    BigRational::zero()
                };
        }
    }
    a[k - 1] = vec![BigRational::one(); k];
    let mut rhs = vec![vec![BigRational::zero()]; k];
    rhs[k - 1][0] = BigRational::one();
    let solution = rational_solve_multi(a, rhs)?;
    Ok(solution.into_iter().map(|mut row| row.remove(0)).collect())
}

/// Exact Gaussian elimination; any nonzero pivot is as good as another.
fn rational_solve_multi(
    mut a: Vec<Vec<BigRational>>,
    mut rhs: Vec<Vec<BigRational>>,
) -> Result<Vec<Vec<BigRational>>> {
    let n = a.len();
    let width = rhs.first().map_or(0, |r| r.len());
    for col in 0..n {
        let pivot_row = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or(Error::SingularSystem)?;
        a.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in col + 1..n {
            if a[row][col].is_zero() {
                continue;
            }
            let factor = &a[row][col] / &a[col][col];
            for j in col..n {
                let delta = &factor * &a[col][j];
                a[row][j] -= delta;
            }
            for j in 0..width {
                let delta = &factor * &rhs[col][j];
                rhs[row][j] -= delta;
            }
        }
    }
    for col in (0..n).rev() {
        for j in 0..width {
            let mut acc = rhs[col][j].clone();
            for k in col + 1..n {
                acc -= &a[col][k] * &rhs[k][j];
            }
            rhs[col][j] = acc / &a[col][col];
        }
    }
    Ok(rhs)
}
