//! Substitution matrix, primitivity and Perron–Frobenius data.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::subst::{abelianise, BoundSubstitution};

/// Stopping tolerance on the ∞-norm change between power-iteration steps.
pub const POWER_TOLERANCE: f64 = 1e-13;
pub const POWER_MAX_ITERATIONS: usize = 1_000_000;
/// λ must exceed 1 by this much to count as expanding.
pub const EXPANDING_MARGIN: f64 = 1e-9;
const INTEGRAL_TOLERANCE: f64 = 1e-9;

/// Expected letter counts: entry (i, j) is E[|ϑ_P(a_j)|_{a_i}].
#[derive(Debug, Clone, PartialEq)]
pub struct SubstMatrix(pub DMatrix<f64>);

impl SubstMatrix {
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn pow(&self, k: u32) -> SubstMatrix {
        let mut out = DMatrix::identity(self.dim(), self.dim());
        for _ in 0..k {
            out = &out * &self.0;
        }
        SubstMatrix(out)
    }

    /// The entries as integers, when every entry is within 1e-9 of one.
    pub fn integral(&self) -> Option<DMatrix<i64>> {
        let mut out = DMatrix::zeros(self.dim(), self.dim());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let v = self.0[(i, j)];
                let r = v.round();
                if (v - r).abs() > INTEGRAL_TOLERANCE {
                    return None;
                }
                out[(i, j)] = r as i64;
            }
        }
        Some(out)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect())
            .collect()
    }
}

pub fn substitution_matrix(sub: &BoundSubstitution) -> SubstMatrix {
    let d = sub.size();
    let mut m = DMatrix::zeros(d, d);
    for (j, rule) in sub.rules().iter().enumerate() {
        for (word, p) in rule {
            let phi = abelianise(d, word);
            for (i, &count) in phi.0.iter().enumerate() {
                m[(i, j)] += p * count as f64;
            }
        }
    }
    SubstMatrix(m)
}

/// Letter-count matrix of a single marginal.
pub fn marginal_matrix(sub: &BoundSubstitution, choice: &[usize]) -> DMatrix<f64> {
    let d = sub.size();
    let mut m = DMatrix::zeros(d, d);
    for (j, &c) in choice.iter().enumerate() {
        let phi = abelianise(d, &sub.rules()[j][c].0);
        for (i, &count) in phi.0.iter().enumerate() {
            m[(i, j)] = count as f64;
        }
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Primitivity {
    pub primitive: bool,
    pub expanding: bool,
}

/// Positivity of the boolean pattern of M^w with w = (d−1)² + 1, plus λ > 1.
pub fn check_primitive(m: &SubstMatrix) -> Primitivity {
    let d = m.dim();
    let pattern: Vec<Vec<bool>> = (0..d)
        .map(|i| (0..d).map(|j| m.get(i, j) > 0.0).collect())
        .collect();
    let exponent = (d - 1) * (d - 1) + 1;
    let mut acc = pattern.clone();
    for _ in 1..exponent {
        acc = bool_mul(&acc, &pattern);
    }
    let primitive = acc.iter().all(|row| row.iter().all(|&b| b));
    let lambda = if primitive {
        perron_vector(&m.0).map(|(l, _)| l).unwrap_or(f64::NAN)
    } else {
        spectral_radius_estimate(&m.0)
    };
    Primitivity {
        primitive,
        expanding: lambda > 1.0 + EXPANDING_MARGIN,
    }
}

fn bool_mul(a: &[Vec<bool>], b: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).any(|k| a[i][k] && b[k][j])).collect())
        .collect()
}

/// Spectral radius of a non-negative matrix through power iteration on M + I,
/// whose dominant eigenvalue ρ + 1 is strictly dominant in modulus.
fn spectral_radius_estimate(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows();
    let shifted = m + DMatrix::<f64>::identity(d, d);
    let mut v = DVector::from_element(d, 1.0 / d as f64);
    let mut estimate = 0.0;
    for _ in 0..100_000 {
        let next = &shifted * &v;
        let norm = next.sum();
        if norm == 0.0 {
            return 0.0;
        }
        let next = next / norm;
        let change = (&next - &v).amax();
        v = next;
        estimate = norm - 1.0;
        if change < POWER_TOLERANCE {
            break;
        }
    }
    estimate
}

/// Dominant eigenvalue and 1-normalised positive eigenvector of a primitive
/// non-negative matrix.
fn perron_vector(m: &DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let d = m.nrows();
    let mut v = DVector::from_element(d, 1.0 / d as f64);
    for _ in 0..POWER_MAX_ITERATIONS {
        let next = m * &v;
        let norm = next.sum();
        let next = next / norm;
        let change = (&next - &v).amax();
        v = next;
        if change < POWER_TOLERANCE {
            let mv = m * &v;
            let lambda = v.dot(&mv) / v.dot(&v);
            return Ok((lambda, v));
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: POWER_MAX_ITERATIONS,
    })
}

/// λ with right vector R (‖R‖₁ = 1) and left vector L (LᵀR = 1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerronData {
    pub lambda: f64,
    /// λ as an integer, when M is integral and λ is within 1e-9 of one.
    pub lambda_exact: Option<i64>,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

impl PerronData {
    pub fn right_residual(&self, m: &SubstMatrix) -> f64 {
        let r = DVector::from_column_slice(&self.right);
        (&m.0 * &r - &r * self.lambda).amax()
    }

    pub fn left_residual(&self, m: &SubstMatrix) -> f64 {
        let l = DVector::from_column_slice(&self.left);
        (m.0.transpose() * &l - &l * self.lambda).amax()
    }

    /// Σ_a values[a]·R_a.
    pub fn weigh(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.right).map(|(v, r)| v * r).sum()
    }
}

pub fn perron_data(m: &SubstMatrix) -> Result<PerronData> {
    let flags = check_primitive(m);
    if !flags.primitive {
        return Err(Error::NotPrimitive);
    }
    let (lambda, right) = perron_vector(&m.0)?;
    if lambda <= 1.0 + EXPANDING_MARGIN {
        return Err(Error::NonExpanding { lambda });
    }
    let (_, left) = perron_vector(&m.0.transpose())?;
    let scale = left.dot(&right);
    let left = left / scale;
    let lambda_exact = m
        .integral()
        .filter(|_| (lambda - lambda.round()).abs() <= INTEGRAL_TOLERANCE)
        .map(|_| lambda.round() as i64);
    Ok(PerronData {
        lambda,
        lambda_exact,
        right: right.iter().copied().collect(),
        left: left.iter().copied().collect(),
    })
}

/// Monic integer characteristic polynomial det(xI − M), highest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CharPoly {
    pub coefficients: Vec<i128>,
}

impl CharPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, x: i128) -> i128 {
        self.coefficients.iter().fold(0, |acc, &c| acc * x + c)
    }

    /// True iff the polynomial is x^d − ℓ·x^{d−1}, i.e. ℓ is the only
    /// non-zero eigenvalue.
    pub fn only_nonzero_eigenvalue(&self, ell: i128) -> bool {
        self.coefficients[0] == 1
            && self.coefficients.get(1).copied() == Some(-ell)
            && self.coefficients[2..].iter().all(|&c| c == 0)
    }
}

/// Faddeev–LeVerrier in exact integer arithmetic.
pub fn char_poly(m: &SubstMatrix) -> Result<CharPoly> {
    let a = m.integral().ok_or(Error::NonIntegerMatrix)?;
    let d = a.nrows();
    let a: Vec<Vec<i128>> = (0..d)
        .map(|i| (0..d).map(|j| a[(i, j)] as i128).collect())
        .collect();
    let mut coefficients = vec![0i128; d + 1];
    coefficients[0] = 1;
    // M_0 = 0, c_d = 1; M_k = A M_{k-1} + c_{d-k+1} I, c_{d-k} = -tr(A M_k)/k
    let mut mk = vec![vec![0i128; d]; d];
    for k in 1..=d {
        let mut next = matmul(&a, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coefficients[k - 1];
        }
        mk = next;
        let am = matmul(&a, &mk);
        let trace: i128 = (0..d).map(|i| am[i][i]).sum();
        debug_assert_eq!(trace % k as i128, 0);
        coefficients[k] = -trace / k as i128;
    }
    Ok(CharPoly { coefficients })
}

fn matmul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use approx::assert_abs_diff_eq;

    fn matrix(rows: &[&[f64]]) -> SubstMatrix {
        let d = rows.len();
        SubstMatrix(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    #[test]
    fn period_doubling_matrix_is_p_independent() {
        for p in [0.1, 0.5, 0.9] {
            let sub = fixtures::bound("period-doubling", &[("p", p)]).unwrap();
            assert_eq!(substitution_matrix(&sub).rows(), vec![vec![1.0, 2.0], vec![1.0, 0.0]]);
        }
    }

    #[test]
    fn example_2_9_matrix_is_weighted_count() {
        let p = 0.3;
        let sub = fixtures::bound("example-2.9", &[("p", p)]).unwrap();
        let m = substitution_matrix(&sub);
        // column b = p·Φ(a) + (1 − p)·Φ(bb)
        assert_abs_diff_eq!(m.get(0, 1), p, epsilon = 1e-15);
        assert_abs_diff_eq!(m.get(1, 1), 2.0 * (1.0 - p), epsilon = 1e-15);
        assert_eq!((m.get(0, 0), m.get(1, 0)), (1.0, 2.0));
    }

    #[test]
    fn primitivity_flags() {
        let pd = check_primitive(&matrix(&[&[1.0, 2.0], &[1.0, 0.0]]));
        assert_eq!(pd, Primitivity { primitive: true, expanding: true });
        let id = check_primitive(&matrix(&[&[1.0, 0.0], &[0.0, 1.0]]));
        assert_eq!(id, Primitivity { primitive: false, expanding: false });
        // a -> ab, b -> b
        let red = check_primitive(&matrix(&[&[1.0, 0.0], &[1.0, 1.0]]));
        assert!(!red.primitive);
        // a -> ab, b -> bb: reducible but expanding
        let red2 = check_primitive(&matrix(&[&[1.0, 0.0], &[1.0, 2.0]]));
        assert!(!red2.primitive && red2.expanding);
    }

    #[test]
    fn perron_period_doubling() {
        let m = matrix(&[&[1.0, 2.0], &[1.0, 0.0]]);
        let pd = perron_data(&m).unwrap();
        assert_abs_diff_eq!(pd.lambda, 2.0, epsilon = 1e-12);
        assert_eq!(pd.lambda_exact, Some(2));
        assert_abs_diff_eq!(pd.right[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pd.right[1], 1.0 / 3.0, epsilon = 1e-12);
        assert!(pd.right_residual(&m) < 1e-9 && pd.left_residual(&m) < 1e-9);
    }

    #[test]
    fn perron_errors() {
        assert_eq!(perron_data(&matrix(&[&[1.0, 0.0], &[0.0, 1.0]])), Err(Error::NotPrimitive));
        // column-stochastic primitive matrix: λ = 1
        match perron_data(&matrix(&[&[0.5, 0.5], &[0.5, 0.5]])) {
            Err(Error::NonExpanding { lambda }) => assert_abs_diff_eq!(lambda, 1.0, epsilon = 1e-9),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn char_polys_by_hand() {
        // [[1,2],[1,0]]: x² − x − 2
        let pd = char_poly(&matrix(&[&[1.0, 2.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(pd.coefficients, vec![1, -1, -2]);
        assert!(!pd.only_nonzero_eigenvalue(2));
        assert_eq!(pd.eval(2), 0);
        // [[2,1],[1,2]]: x² − 4x + 3
        let e51 = char_poly(&matrix(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert_eq!(e51.coefficients, vec![1, -4, 3]);
        assert!(!e51.only_nonzero_eigenvalue(3));
        // [[1,1],[1,1]]: x² − 2x
        let e56 = char_poly(&matrix(&[&[1.0, 1.0], &[1.0, 1.0]])).unwrap();
        assert_eq!(e56.coefficients, vec![1, -2, 0]);
        assert!(e56.only_nonzero_eigenvalue(2));
        assert_eq!(char_poly(&matrix(&[&[0.5, 1.0], &[1.0, 0.0]])), Err(Error::NonIntegerMatrix));
    }

    #[test]
    fn char_poly_3x3_matches_cofactor_expansion() {
        let rows: [[i128; 3]; 3] = [[2, 1, 0], [1, 3, 1], [0, 2, 1]];
        let m = matrix(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 2.0, 1.0]]);
        let cp = char_poly(&m).unwrap();
        // det(xI − A) at a few integer points by cofactor expansion
        for x in -3i128..=3 {
            let b: Vec<Vec<i128>> = (0..3)
                .map(|i| (0..3).map(|j| if i == j { x } else { 0 } - rows[i][j]).collect())
                .collect();
            let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
                - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
                + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
            assert_eq!(cp.eval(x), det);
        }
    }

    #[test]
    fn constant_length_lambda_and_left_vector() {
        let sub = fixtures::bound("example-5.1", &[]).unwrap();
        let pd = perron_data(&substitution_matrix(&sub)).unwrap();
        assert_abs_diff_eq!(pd.lambda, 3.0, epsilon = 1e-9);
        for l in &pd.left {
            assert_abs_diff_eq!(*l, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn example_2_9_left_vector() {
        let sub = fixtures::bound("example-2.9", &[]).unwrap();
        let pd = perron_data(&substitution_matrix(&sub)).unwrap();
        assert_abs_diff_eq!(pd.lambda, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(pd.left[0] / pd.left[1], 2.0, epsilon = 1e-9);
    }
}
