//! Complex linear-algebra helpers shared by the recovery and spectral stages:
//! SVD-based pseudo-inverse solves, condition numbers, null vectors, companion
//! -matrix polynomial rooting, and the structured (Toeplitz/Hankel) builders.
//!
//! Everything routes through nalgebra's sorted SVD so rank decisions use one
//! consistent cutoff convention: singular values below `rel_cutoff · σ_max`
//! count as zero.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Minimum-norm least-squares solution plus the diagnostics recovery reports.
#[derive(Debug, Clone)]
pub struct PinvSolution {
    pub x: DVector<Complex64>,
    /// Numerical rank at the cutoff used for the solve.
    pub rank: usize,
    /// σ_max/σ_min over all min(m, n) singular values (∞ when σ_min = 0).
    pub cond: f64,
    /// ‖Ax − b‖₂.
    pub residual: f64,
}

/// Solves `A x = b` through the Moore-Penrose inverse, dropping singular
/// values below `rel_cutoff · σ_max`.
pub fn pinv_solve(
    a: &DMatrix<Complex64>,
    b: &DVector<Complex64>,
    rel_cutoff: f64,
) -> Result<PinvSolution> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u");
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sigma = &svd.singular_values;
    let sigma_max = sigma.max();
    let cutoff = rel_cutoff * sigma_max;

    // Sorted descending, so the kept values are a prefix.
    let rank = sigma.iter().take_while(|&&s| s > cutoff).count();
    let mut coeffs = u.adjoint() * b;
    for i in 0..coeffs.len() {
        coeffs[i] = if i < rank {
            coeffs[i] / Complex64::new(sigma[i], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let x = v_t.adjoint() * coeffs;
    let residual = (a * &x - b).norm();
    let sigma_min = sigma[sigma.len() - 1];
    let cond = if sigma_min > 0.0 {
        sigma_max / sigma_min
    } else {
        f64::INFINITY
    };
    Ok(PinvSolution {
        x,
        rank,
        cond,
        residual,
    })
}

/// 2-norm condition number σ_max/σ_min (∞ for singular matrices).
pub fn condition_number(a: &DMatrix<Complex64>) -> f64 {
    let sigma = a.clone().singular_values();
    let max = sigma.max();
    let min = sigma.min();
    if min > 0.0 {
        max / min
    } else {
        f64::INFINITY
    }
}

/// Right singular vector of the smallest singular value, plus the two
/// smallest singular values so callers can detect an ambiguous null space.
pub fn smallest_right_singular_vector(
    a: &DMatrix<Complex64>,
) -> Result<(DVector<Complex64>, f64, f64)> {
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("svd with v_t");
    let sigma = &svd.singular_values;
    let n = sigma.len();
    if n < 2 {
        return Err(Error::IllPosed("need at least a 2-column system".into()));
    }
    let vec = v_t.row(n - 1).adjoint();
    Ok((vec, sigma[n - 1], sigma[n - 2]))
}

/// Roots of `c[0] + c[1] z + … + c[n] zⁿ` via the companion-matrix
/// eigenproblem. The leading coefficient must be meaningfully nonzero.
///
/// The QR iteration can cycle without converging when all eigenvalues share
/// one modulus — e.g. the cyclic companion of `zⁿ - 1`, which is exactly what
/// equally spaced delays produce. The iteration is therefore bounded, and on
/// failure the companion matrix is retried under a tiny deterministic
/// perturbation (1e-10 relative, which moves well-separated roots by about
/// the same amount).
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len().saturating_sub(1);
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if lead.norm() <= 1e-14 * scale {
        return Err(Error::IllPosed(
            "leading polynomial coefficient is numerically zero".into(),
        ));
    }
    if n == 1 {
        return Ok(vec![-coeffs[0] / lead]);
    }
    let mut companion = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n - 1 {
        companion[(i + 1, i)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        companion[(i, n - 1)] = -coeffs[i] / lead;
    }
    if let Some(eig) = bounded_eigenvalues(&companion) {
        return Ok(eig);
    }
    let norm = companion.norm();
    for attempt in 0..3u64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0FFEE + attempt);
        let noise = DMatrix::from_fn(n, n, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * 1e-10 * norm
        });
        if let Some(eig) = bounded_eigenvalues(&(&companion + noise)) {
            return Ok(eig);
        }
    }
    Err(Error::RootFindingFailure)
}

fn bounded_eigenvalues(m: &DMatrix<Complex64>) -> Option<Vec<Complex64>> {
    m.clone()
        .try_schur(f64::EPSILON, 10_000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
}

/// Hankel lift `H[i, j] = values[i + j]` with the given row count.
pub fn hankel(values: &[Complex64], rows: usize) -> DMatrix<Complex64> {
    let cols = values.len() + 1 - rows;
    DMatrix::from_fn(rows, cols, |i, j| values[i + j])
}

/// Inverse of the Hankel lift: average each anti-diagonal back into a
/// sequence of the original length.
pub fn hankel_collapse(h: &DMatrix<Complex64>) -> Vec<Complex64> {
    let (rows, cols) = h.shape();
    let len = rows + cols - 1;
    let mut sums = vec![Complex64::new(0.0, 0.0); len];
    let mut counts = vec![0usize; len];
    for i in 0..rows {
        for j in 0..cols {
            sums[i + j] += h[(i, j)];
            counts[i + j] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, &c)| s / c as f64)
        .collect()
}

/// Convolution (annihilation) matrix of a sequence against a length-`l + 1`
/// filter: row `r` holds `values[r + l], values[r + l - 1], …, values[r]`, so
/// `M · h` stacks every full window of the convolution `values * h`.
pub fn annihilation_matrix(values: &[Complex64], l: usize) -> DMatrix<Complex64> {
    let rows = values.len() - l;
    DMatrix::from_fn(rows, l + 1, |r, c| values[r + l - c])
}
