//! Dense matrices on a truncated multi-mode Fock space.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) type CMatrix = DMatrix<Complex64>;

pub(crate) fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b`.
pub(crate) fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let x = a[(i, j)];
            if x == c(0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = x * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Single-mode annihilation operator on `n_max + 1` levels.
pub(crate) fn annihilation(n_max: usize) -> CMatrix {
    let d = n_max + 1;
    let mut a = CMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = c((n as f64).sqrt());
    }
    a
}

/// `op` acting on mode `k` of `m` modes, identity elsewhere.
pub(crate) fn embed(op: &CMatrix, k: usize, m: usize) -> CMatrix {
    let d = op.nrows();
    let id = CMatrix::identity(d, d);
    let mut out = CMatrix::identity(1, 1);
    for j in 0..m {
        out = kron(&out, if j == k { op } else { &id });
    }
    out
}

/// `e^{A}` for anti-Hermitian `A`, via the eigendecomposition of the Hermitian `iA`.
pub(crate) fn exp_anti_hermitian(a: &CMatrix) -> CMatrix {
    let h = a * Complex64::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * c(0.5);
    let eig = h.symmetric_eigen();
    let phases = eig.eigenvalues.map(|l| Complex64::new(0.0, -l).exp());
    let q = &eig.eigenvectors;
    q * CMatrix::from_diagonal(&phases) * q.adjoint()
}

/// Unitary `e^{−iHt}` from a Hermitian eigendecomposition.
pub(crate) struct Propagator {
    vectors: CMatrix,
    values: Vec<f64>,
}

impl Propagator {
    pub(crate) fn new(h: &CMatrix) -> Self {
        let sym = (h + h.adjoint()) * c(0.5);
        let eig = sym.symmetric_eigen();
        Propagator {
            vectors: eig.eigenvectors,
            values: eig.eigenvalues.iter().copied().collect(),
        }
    }

    pub(crate) fn unitary(&self, t: f64) -> CMatrix {
        let phases = nalgebra::DVector::from_iterator(
            self.values.len(),
            self.values
                .iter()
                .map(|&l| Complex64::new(0.0, -l * t).exp()),
        );
        &self.vectors * CMatrix::from_diagonal(&phases) * self.vectors.adjoint()
    }
}

/// Largest absolute entry of a matrix.
pub(crate) fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Occupation numbers of basis index `idx` for `m` modes of `n_max + 1` levels.
pub(crate) fn occupations(mut idx: usize, m: usize, n_max: usize) -> Vec<usize> {
    let d = n_max + 1;
    let mut out = vec![0; m];
    for k in (0..m).rev() {
        out[k] = idx % d;
        idx /= d;
    }
    out
}

pub(crate) fn check_dim(dim: usize, limit: usize) -> Result<()> {
    if dim > limit {
        return Err(Error::DimensionTooLarge { dim, limit });
    }
    Ok(())
}
