use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::BuiltinError;
use crate::vector::{norm2, Vector};

/// `f(x) = ||Ax - b||` for a square `A` with known singular values and a
/// stored solution `x*` of `Ax = b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearResidual {
    n: usize,
    /// Row-major `n x n`.
    matrix: Vec<f64>,
    rhs: Vector,
    solution: Vector,
    singular_values: Vec<f64>,
}

impl LinearResidual {
    /// `A = diag(singular_values)` (all positive) and `b = A x*`.
    pub fn diagonal(singular_values: Vec<f64>, solution: Vector) -> Result<Self, BuiltinError> {
        let n = singular_values.len();
        if n != solution.dim() {
            return Err(BuiltinError::InvalidParameter(format!(
                "{} singular values for a solution of dimension {}",
                n,
                solution.dim()
            )));
        }
        if singular_values.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(BuiltinError::InvalidParameter(
                "singular values must be positive and finite".into(),
            ));
        }
        let mut matrix = vec![0.0; n * n];
        for (i, s) in singular_values.iter().enumerate() {
            matrix[i * n + i] = *s;
        }
        Ok(Self::assemble(n, matrix, solution, singular_values))
    }

    fn assemble(n: usize, matrix: Vec<f64>, solution: Vector, singular_values: Vec<f64>) -> Self {
        let rhs = Vector::from_raw(mat_vec(n, &matrix, &solution));
        Self {
            n,
            matrix,
            rhs,
            solution,
            singular_values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &Vector {
        &self.rhs
    }

    pub fn solution(&self) -> &Vector {
        &self.solution
    }

    pub fn sigma_min(&self) -> f64 {
        self.singular_values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.iter().copied().fold(0.0, f64::max)
    }

    /// Value `||r||` and subgradient `A^T r / ||r||` for `r = Ax - b`; zero
    /// subgradient where the residual vanishes.
    pub fn eval(&self, x: &Vector) -> (f64, Vector) {
        let mut r = mat_vec(self.n, &self.matrix, x);
        for (ri, bi) in r.iter_mut().zip(self.rhs.iter()) {
            *ri -= bi;
        }
        let r = Vector::from_raw(r);
        let len = norm2(&r);
        if len == 0.0 {
            return (0.0, Vector::zeros(self.n));
        }
        let mut g = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.matrix[i * self.n..(i + 1) * self.n];
            let ri = r[i] / len;
            for (gj, aij) in g.iter_mut().zip(row) {
                *gj += aij * ri;
            }
        }
        (len, Vector::from_raw(g))
    }
}

fn mat_vec(n: usize, matrix: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| matrix[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

fn spectrum(n: usize, condition: f64) -> Result<Vec<f64>, BuiltinError> {
    if n == 0 {
        return Err(BuiltinError::InvalidParameter("n must be at least 1".into()));
    }
    if !(condition >= 1.0 && condition.is_finite()) {
        return Err(BuiltinError::InvalidParameter(format!(
            "condition must be at least 1, got {condition}"
        )));
    }
    if n == 1 {
        if condition != 1.0 {
            return Err(BuiltinError::InvalidParameter(
                "a 1 x 1 matrix has condition number 1".into(),
            ));
        }
        return Ok(vec![1.0]);
    }
    // Geometric spacing from 1 to `condition`.
    Ok((0..n).map(|i| condition.powf(i as f64 / (n - 1) as f64)).collect())
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_raw((0..n).map(|_| StandardNormal.sample(rng)).collect())
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix, with the
/// sign of each column fixed by the diagonal of R.
fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random instance with `A = U diag(s) V^T`, singular values spaced
/// geometrically from 1 to `condition`, and a Gaussian solution `x*`.
pub fn generate_linear_residual(n: usize, condition: f64, seed: u64) -> Result<LinearResidual, BuiltinError> {
    let singular_values = spectrum(n, condition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solution = gaussian_vector(&mut rng, n);
    let u = random_orthogonal(&mut rng, n);
    let v = random_orthogonal(&mut rng, n);
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(singular_values.clone()));
    let a = u * s * v.transpose();
    let matrix: Vec<f64> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| a[(i, j)])
        .collect();
    Ok(LinearResidual::assemble(n, matrix, solution, singular_values))
}

/// As [`generate_linear_residual`] but without rotations: `A` is diagonal.
pub fn generate_linear_residual_diagonal(n: usize, condition: f64, seed: u64) -> Result<LinearResidual, BuiltinError> {
    let singular_values = spectrum(n, condition)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let solution = gaussian_vector(&mut rng, n);
    LinearResidual::diagonal(singular_values, solution)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_two_by_two() {
        let lr = generate_linear_residual_diagonal(2, 2.0, 7).unwrap();
        assert_eq!(lr.matrix(), &[1.0, 0.0, 0.0, 2.0]);
        assert_eq!((lr.sigma_min(), lr.sigma_max()), (1.0, 2.0));
        assert_eq!(lr.eval(lr.solution()).0, 0.0);
    }

    #[test]
    fn condition_one_is_an_isometry() {
        let lr = generate_linear_residual(2, 1.0, 3).unwrap();
        assert_eq!((lr.sigma_min(), lr.sigma_max()), (1.0, 1.0));
        let a = lr.matrix();
        // A^T A = I
        for i in 0..2 {
            for j in 0..2 {
                let dot: f64 = (0..2).map(|k| a[k * 2 + i] * a[k * 2 + j]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
        let x = Vector::from_slice(&[0.3, -2.0]).unwrap();
        assert!((lr.eval(&x).0 - x.dist(lr.solution())).abs() < 1e-12);
    }

    #[test]
    fn generated_singular_values_match_declared() {
        let lr = generate_linear_residual(6, 10.0, 11).unwrap();
        let a = DMatrix::from_row_slice(6, 6, lr.matrix());
        let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
        sv.sort_by(f64::total_cmp);
        assert!((sv[0] - 1.0).abs() < 1e-10);
        assert!((sv[5] - 10.0).abs() < 1e-10);
        assert!(lr.eval(lr.solution()).0 < 1e-12);
    }

    #[test]
    fn deterministic_given_seed() {
        let a = generate_linear_residual(5, 3.0, 42).unwrap();
        let b = generate_linear_residual(5, 3.0, 42).unwrap();
        assert_eq!(a, b);
        let c = generate_linear_residual(5, 3.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_parameters() {
        assert!(generate_linear_residual(0, 1.0, 0).is_err());
        assert!(generate_linear_residual(3, 0.5, 0).is_err());
        assert!(generate_linear_residual(1, 2.0, 0).is_err());
        assert!(generate_linear_residual(1, 1.0, 0).is_ok());
    }
}
