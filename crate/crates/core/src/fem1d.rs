//! Piecewise-linear finite elements for `-u'' = x` on `(0, 1)` with
//! homogeneous Dirichlet conditions.

use crate::linalg::thomas_solve;
use crate::scalar::Scalar;

/// Mesh width `2^{-level-1}`.
pub fn mesh_width<T: Scalar>(level: u32) -> T {
    T::of(2f64.powi(-(level as i32) - 1))
}

/// Number of interior nodes, `2^{level+1} - 1`.
pub fn interior_nodes(level: u32) -> usize {
    (1usize << (level + 1)) - 1
}

/// Interior nodal values of the finite element solution with constant load `x`.
pub fn solve<T: Scalar>(x: T, level: u32) -> Vec<T> {
    let n = interior_nodes(level);
    let h = mesh_width::<T>(level);
    let inv_h = T::one() / h;
    let off = vec![-inv_h; n.saturating_sub(1)];
    let diag = vec![T::of(2.0) * inv_h; n];
    let rhs = vec![x * h; n];
    thomas_solve(&off, &diag, &off, &rhs)
}

/// Evaluates the piecewise-linear interpolant of interior nodal values at `z`
/// (boundary values are zero).
pub fn interpolate<T: Scalar>(nodal: &[T], level: u32, z: T) -> T {
    let n = nodal.len();
    let cells = n + 1;
    let s = z * T::of(cells as f64);
    let s = s.max(T::zero()).min(T::of(cells as f64));
    let mut c = s.floor().to_usize().unwrap_or(0);
    if c >= cells {
        c = cells - 1;
    }
    let t = s - T::of(c as f64);
    let node = |i: usize| -> T {
        if i == 0 || i > n {
            T::zero()
        } else {
            nodal[i - 1]
        }
    };
    debug_assert_eq!(n, interior_nodes(level));
    node(c) * (T::one() - t) + node(c + 1) * t
}

/// Closed-form solution `x z (1 - z) / 2`.
pub fn exact_solution<T: Scalar>(x: T, z: T) -> T {
    T::of(0.5) * x * z * (T::one() - z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_load_gives_zero_solution() {
        assert!(solve(0.0f64, 4).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nodal_exactness_at_midpoint() {
        for level in 0..6 {
            let u = solve(1.0f64, level);
            let mid = interpolate(&u, level, 0.5);
            assert!((mid - 0.125).abs() < 1e-13, "level {level}: {mid}");
        }
    }

    #[test]
    fn interpolation_error_decays_quadratically() {
        let x = 0.2581f64;
        let obs: Vec<f64> = (1..=10).map(|i| i as f64 / 10.0).collect();
        let errs: Vec<f64> = (1..=8)
            .map(|level| {
                let u = solve(x, level);
                obs.iter()
                    .map(|&z| (interpolate(&u, level, z) - exact_solution(x, z)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let pts: Vec<(f64, f64)> = errs.iter().enumerate().map(|(i, e)| ((i + 1) as f64, e.log2())).collect();
        let slope = crate::ratefit::least_squares(&pts).slope;
        assert!((slope + 2.0).abs() < 0.1, "slope {slope}, errors {errs:?}");
    }

    #[test]
    fn single_precision_solve() {
        let u = solve(1.0f32, 3);
        assert!((interpolate(&u, 3, 0.5f32) - 0.125).abs() < 1e-5);
    }
}
