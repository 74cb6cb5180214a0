use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub vectors: Mat<c64>,
}

fn fingerprint(m: MatRef<'_, c64>) -> String {
    let mut trace = 0.0;
    let mut frob = 0.0;
    for j in 0..m.ncols() {
        trace += m[(j, j)].re;
        for i in 0..m.nrows() {
            frob += m[(i, j)].norm_sqr();
        }
    }
    format!("n={} tr={trace:.6e} fro={:.6e}", m.nrows(), frob.sqrt())
}

pub fn eig_hermitian(m: MatRef<'_, c64>) -> Result<Spectrum> {
    crate::sequential_kernels();
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::NonConvergence {
        fingerprint: fingerprint(m),
        dim: n,
    })?;
    let eigenvalues: Vec<f64> = evd.S().column_vector().iter().map(|v| v.re).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence {
            fingerprint: fingerprint(m),
            dim: n,
        });
    }
    Ok(Spectrum {
        eigenvalues,
        vectors: evd.U().to_owned(),
    })
}

/// Real symmetric input; eigenvectors are returned as complex columns.
pub fn eig_symmetric(m: MatRef<'_, f64>) -> Result<Spectrum> {
    crate::sequential_kernels();
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    let fail = || Error::NonConvergence {
        fingerprint: format!("real n={n}"),
        dim: n,
    };
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|_| fail())?;
    let eigenvalues: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(fail());
    }
    let u = evd.U();
    Ok(Spectrum {
        eigenvalues,
        vectors: Mat::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0)),
    })
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V·diag(f(λ))·V†`.
    pub fn apply(&self, f: impl Fn(f64) -> c64) -> Mat<c64> {
        let n = self.dim();
        let fv: Vec<c64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let scaled = Mat::<c64>::from_fn(n, n, |i, j| self.vectors[(i, j)] * fv[j]);
        &scaled * self.vectors.adjoint()
    }

    /// `max |V†V − I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        let mut worst = 0.0f64;
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - c64::new(want, 0.0)).norm());
            }
        }
        worst
    }

    /// `max |HV − VΛ|`.
    pub fn residual(&self, h: MatRef<'_, c64>) -> f64 {
        let hv = h * &self.vectors;
        let mut worst = 0.0f64;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let r = hv[(i, j)] - self.vectors[(i, j)] * self.eigenvalues[j];
                worst = worst.max(r.norm());
            }
        }
        worst
    }

    pub fn is_sorted(&self) -> bool {
        self.eigenvalues.windows(2).all(|w| w[0] <= w[1])
    }
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max(m[(i, j)].norm());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn from_real(rows: &[&[f64]]) -> Mat<c64> {
        Mat::from_fn(rows.len(), rows.len(), |i, j| c64::new(rows[i][j], 0.0))
    }

    #[test]
    fn diagonal_input() {
        let m = from_real(&[&[3.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 2.0]]);
        let s = eig_hermitian(m.as_ref()).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        for (col, row) in [(0usize, 1usize), (1, 2), (2, 0)] {
            assert!((s.vectors[(row, col)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn pauli_x() {
        let m = from_real(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = eig_hermitian(m.as_ref()).unwrap();
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_rectangular() {
        let m = Mat::<c64>::zeros(2, 3);
        assert!(eig_hermitian(m.as_ref()).is_err());
    }

    proptest! {
        #[test]
        fn random_hermitian_invariants(seed in 0u64..1000, n in 1usize..24) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = Mat::<c64>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] = c64::new(rng.random_range(-2.0..2.0), 0.0);
                for j in 0..i {
                    let v = c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
            let s = eig_hermitian(m.as_ref()).unwrap();
            prop_assert!(s.is_sorted());
            prop_assert!(s.orthonormality_defect() <= 1e-9);
            prop_assert!(s.residual(m.as_ref()) <= 1e-8 * max_abs(m.as_ref()).max(1.0));
        }
    }
}
