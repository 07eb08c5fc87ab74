//! Dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest condition number accepted for a regression design.
pub const MAX_DESIGN_CONDITION: f64 = 1e10;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Modulus of the largest eigenvalue of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Symmetrize and raise every eigenvalue to at least `floor`.
pub fn floor_eigenvalues(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = symmetrize(m).symmetric_eigen();
    if eig.eigenvalues.iter().all(|&l| l >= floor) {
        return symmetrize(m);
    }
    let clipped = eig.eigenvalues.map(|l| l.max(floor));
    let v = &eig.eigenvectors;
    symmetrize(&(v * DMatrix::from_diagonal(&clipped) * v.transpose()))
}

/// Shrink every eigenvalue of `m` whose modulus exceeds `max` back to modulus
/// `max`, leaving the others and the invariant subspaces untouched. Works on
/// the real Schur form, whose 1×1 and 2×2 diagonal blocks carry the spectrum.
pub fn clip_eigenvalue_modulus(m: &DMatrix<f64>, max: f64) -> DMatrix<f64> {
    let k = m.nrows();
    if k == 0 || spectral_radius(m) <= max {
        return m.clone();
    }
    let (q, mut t) = m.clone().schur().unpack();
    let mut i = 0;
    while i < k {
        if i + 1 < k && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let half_tr = 0.5 * (a + d);
            let disc = half_tr * half_tr - (a * d - b * c);
            let modulus = if disc < 0.0 {
                (a * d - b * c).sqrt()
            } else {
                half_tr.abs() + disc.sqrt()
            };
            if modulus > max {
                let f = max / modulus;
                t[(i, i)] *= f;
                t[(i, i + 1)] *= f;
                t[(i + 1, i)] *= f;
                t[(i + 1, i + 1)] *= f;
            }
            i += 2;
        } else {
            let l = t[(i, i)];
            if l.abs() > max {
                t[(i, i)] = max * l.signum();
            }
            i += 1;
        }
    }
    &q * t * q.transpose()
}

/// Ratio of the largest to the smallest singular value. Infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solve `P = A P A' + Q` for the stationary covariance of a VAR(1).
pub fn solve_discrete_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = a.nrows();
    if a.ncols() != k || q.nrows() != k || q.ncols() != k {
        return Err(Error::Size(format!(
            "Lyapunov equation needs square matrices of equal size, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let rho = spectral_radius(a);
    if rho >= 1.0 {
        return Err(Error::Stability(format!(
            "transition matrix has spectral radius {rho:.6} >= 1"
        )));
    }
    // vec(A P A') = (A ⊗ A) vec(P) for column-major vec.
    let lhs = DMatrix::<f64>::identity(k * k, k * k) - a.kronecker(a);
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Stability("Lyapunov system is singular".into()))?;
    Ok(symmetrize(&DMatrix::from_column_slice(k, k, sol.as_slice())))
}

/// Cholesky factor of a symmetric positive-definite matrix with a cheap
/// condition estimate taken from the factor's diagonal.
pub struct SpdFactor {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    log_det: f64,
    condition: f64,
}

impl SpdFactor {
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        let chol = m.clone().cholesky()?;
        let l = chol.l_dirty();
        let mut log_det = 0.0;
        let mut dmax = 0.0_f64;
        let mut dmin = f64::INFINITY;
        for i in 0..m.nrows() {
            let d = l[(i, i)];
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            log_det += 2.0 * d.ln();
            dmax = dmax.max(d);
            dmin = dmin.min(d);
        }
        let condition = if m.nrows() == 0 {
            1.0
        } else {
            (dmax / dmin).powi(2)
        };
        Some(Self {
            chol,
            log_det,
            condition,
        })
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    /// Lower bound on the 2-norm condition number.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// Ordinary least squares solved through a QR factorization.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub coefficients: DVector<f64>,
    pub residuals: DVector<f64>,
    pub ssr: f64,
    /// `(X'X)^{-1}`.
    pub xtx_inv: DMatrix<f64>,
    pub condition: f64,
}

impl LeastSquares {
    pub fn fit(y: &DVector<f64>, x: &DMatrix<f64>) -> Result<Self> {
        let (n, k) = x.shape();
        if y.len() != n {
            return Err(Error::Size(format!(
                "response has {} rows but design has {n}",
                y.len()
            )));
        }
        if n <= k {
            return Err(Error::Size(format!(
                "need more observations ({n}) than regressors ({k})"
            )));
        }
        let condition = condition_number(x);
        if !(condition < MAX_DESIGN_CONDITION) {
            return Err(Error::SingularDesign(format!(
                "design condition number {condition:.3e} exceeds {MAX_DESIGN_CONDITION:.0e}"
            )));
        }
        let qr = x.clone().qr();
        let r = qr.r();
        let qty = qr.q().transpose() * y;
        let coefficients = r
            .solve_upper_triangular(&qty)
            .ok_or_else(|| Error::SingularDesign("triangular factor is singular".into()))?;
        let r_inv = r
            .solve_upper_triangular(&DMatrix::identity(k, k))
            .ok_or_else(|| Error::SingularDesign("triangular factor is singular".into()))?;
        let xtx_inv = &r_inv * r_inv.transpose();
        let residuals = y - x * &coefficients;
        let ssr = residuals.norm_squared();
        Ok(Self {
            coefficients,
            residuals,
            ssr,
            xtx_inv,
            condition,
        })
    }

    /// Classical standard errors `sqrt(s² · diag((X'X)^{-1}))`, `s² = SSR/(n-k)`.
    pub fn standard_errors(&self) -> DVector<f64> {
        let n = self.residuals.len();
        let k = self.coefficients.len();
        let s2 = self.ssr / (n - k) as f64;
        DVector::from_iterator(k, (0..k).map(|i| (s2 * self.xtx_inv[(i, i)]).max(0.0).sqrt()))
    }
}

/// Serde adapter storing a matrix as `{rows, cols, data}` with `data` in row-major order.
pub mod row_major {
    use nalgebra::DMatrix;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
        let data = m.transpose().as_slice().to_vec();
        Repr {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<f64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.rows * r.cols != r.data.len() {
            return Err(D::Error::custom(format!(
                "matrix of shape {}x{} needs {} entries, got {}",
                r.rows,
                r.cols,
                r.rows * r.cols,
                r.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(r.rows, r.cols, &r.data))
    }
}

/// Serde adapter storing a vector as a plain JSON array.
pub mod plain_vector {
    use nalgebra::DVector;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &DVector<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DVector<f64>, D::Error> {
        Ok(DVector::from_vec(Vec::<f64>::deserialize(d)?))
    }
}
