//! Log-domain numerics shared across the model and the planners.

/// Numerically stable `log(exp(a) + exp(b))`.
pub fn log_sum_exp_pair(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Numerically stable `log Σ exp(x_i)` over a slice.
///
/// Empty input and all `-inf` input both yield `-inf`. Summation order is
/// the slice order, so results are reproducible.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|&x| (x - m).exp()).sum();
    m + sum.ln()
}

/// 2×2 symmetric matrix utilities for position-distribution covariances.
pub mod mat2 {
    /// Determinant of a 2×2 matrix.
    pub fn det(m: &[[f64; 2]; 2]) -> f64 {
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Inverse of a 2×2 matrix; caller guarantees a nonzero determinant.
    pub fn inverse(m: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
        let d = det(m);
        [[m[1][1] / d, -m[0][1] / d], [-m[1][0] / d, m[0][0] / d]]
    }

    /// Symmetric positive-definite check: symmetry within `tol`, positive
    /// trace and determinant (equivalent to both eigenvalues > 0).
    pub fn is_spd(m: &[[f64; 2]; 2], tol: f64) -> bool {
        let scale = m[0][0].abs().max(m[1][1].abs()).max(1.0);
        (m[0][1] - m[1][0]).abs() <= tol * scale
            && m[0][0] + m[1][1] > 0.0
            && det(m) > 0.0
            && m.iter().flatten().all(|v| v.is_finite())
    }
}
