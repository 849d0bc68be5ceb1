//! Tiny dense solvers for the support-sized systems the coder needs.
//! Systems here are m x m with m = sparsity (single digits), so a direct
//! Cholesky is both fast enough and deterministic.

/// Solve (G + ridge*I) c = rhs for a symmetric positive semidefinite G
/// given in row-major order. Falls back to a small fixed ridge when the
/// factorization hits a non-positive pivot, so nearly collinear atom
/// selections still produce a usable least-squares fit.
pub fn solve_spd(gram: &[f64], rhs: &[f64], ridge: f64) -> Option<Vec<f64>> {
    let n = rhs.len();
    debug_assert_eq!(gram.len(), n * n);
    if let Some(c) = cholesky_solve(gram, rhs, ridge, n) {
        return Some(c);
    }
    let fallback = ridge.max(1e-12);
    cholesky_solve(gram, rhs, fallback, n)
}

fn cholesky_solve(gram: &[f64], rhs: &[f64], ridge: f64, n: usize) -> Option<Vec<f64>> {
    // Lower-triangular factor L with G + ridge*I = L L^T.
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = gram[i * n + j];
            if i == j {
                sum += ridge;
            }
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return None;
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    // Forward then backward substitution.
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        let mut sum = rhs[i];
        for k in 0..i {
            sum -= l[i * n + k] * y[k];
        }
        y[i] = sum / l[i * n + i];
    }
    let mut x = vec![0.0f64; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in (i + 1)..n {
            sum -= l[k * n + i] * x[k];
        }
        x[i] = sum / l[i * n + i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_identity() {
        let g = vec![1.0, 0.0, 0.0, 1.0];
        let c = solve_spd(&g, &[2.0, -3.0], 0.0).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-12);
        assert!((c[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn solves_general_spd() {
        // G = A^T A for A = [[1,1],[0,1]], rhs = A^T [1, 2].
        let g = vec![1.0, 1.0, 1.0, 2.0];
        let rhs = vec![1.0, 3.0];
        let c = solve_spd(&g, &rhs, 0.0).unwrap();
        // Exact solution of the normal equations: c = [-1, 2].
        assert!((c[0] + 1.0).abs() < 1e-12);
        assert!((c[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_falls_back_to_ridge() {
        // Two identical atoms: singular Gram.
        let g = vec![1.0, 1.0, 1.0, 1.0];
        let c = solve_spd(&g, &[1.0, 1.0], 0.0).unwrap();
        assert!(c.iter().all(|v| v.is_finite()));
    }
}
