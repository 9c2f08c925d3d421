//! Cardinal cubic B-splines on the unit interval.
//!
//! A z-density spline has `4z + 3` basis functions `S_i(x) = S(4z·x + 4 − i)`
//! for `i = 1..=4z+3`, all sharing the same piecewise-cubic bump `S` supported
//! on `[0, 4]`. At any `x ∈ [0, 1]` at most four consecutive basis functions
//! are non-zero, so evaluation and gradients only ever touch a 4-wide window.
//!
//! Basis indices are 1-based in the mathematical sense. Storage is 0-based:
//! basis `i` lives at `theta[i - 1]`. [`BasisWindow::first_index`] keeps the
//! 1-based convention; [`BasisWindow::offset`] gives the storage offset.

use crate::error::{Error, Result};
use crate::sparse::SparseGrad;

/// Width of the non-zero window of a cubic B-spline basis.
pub const WINDOW: usize = 4;

/// Number of basis functions (and coefficients) of a z-density spline.
#[inline]
pub fn basis_count(z: usize) -> usize {
    4 * z + 3
}

/// The cubic B-spline bump `S`.
///
/// Exactly zero outside `[0, 4]`, `C²` everywhere, maximum `2/3` at `x = 2`.
pub fn activation_s(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(bump(x))
}

#[inline]
pub(crate) fn bump(x: f64) -> f64 {
    if (0.0..1.0).contains(&x) {
        x * x * x / 6.0
    } else if (1.0..2.0).contains(&x) {
        let t = x - 1.0;
        (-3.0 * t * t * t + 3.0 * t * t + 3.0 * t + 1.0) / 6.0
    } else if (2.0..3.0).contains(&x) {
        let t = x - 2.0;
        (3.0 * t * t * t - 6.0 * t * t + 4.0) / 6.0
    } else if (3.0..4.0).contains(&x) {
        let t = 4.0 - x;
        t * t * t / 6.0
    } else {
        0.0
    }
}

/// Argument of the bump for basis `index` (1-based) at scaled position `u = 4z·x`.
///
/// Every evaluation path (window and dense) goes through this so that both
/// produce bit-identical basis values.
#[inline]
fn basis_arg(u: f64, index: usize) -> f64 {
    u + (4.0 - index as f64)
}

#[inline]
pub(crate) fn check_unit(x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(x));
    }
    Ok(())
}

/// The four basis values that can be non-zero at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisWindow {
    /// 1-based index of the first basis function in the window.
    pub first_index: usize,
    /// `values[j]` is `S_{first_index + j}(x)`.
    pub values: [f64; WINDOW],
}

impl BasisWindow {
    /// 0-based storage offset of the first window entry.
    #[inline]
    pub fn offset(&self) -> usize {
        self.first_index - 1
    }

    /// 1-based indices covered by the window.
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first_index..self.first_index + WINDOW
    }

    /// Windows that share no basis index.
    pub fn is_disjoint(&self, other: &BasisWindow) -> bool {
        self.first_index + WINDOW <= other.first_index
            || other.first_index + WINDOW <= self.first_index
    }

    /// Dot product of the window with 0-based coefficients.
    #[inline]
    pub fn dot(&self, theta: &[f64]) -> f64 {
        let o = self.offset();
        let mut acc = 0.0;
        for (j, s) in self.values.iter().enumerate() {
            acc += theta[o + j] * s;
        }
        acc
    }
}

/// Non-zero basis window of a z-density spline at `x ∈ [0, 1]`.
pub fn basis_window(z: usize, x: f64) -> Result<BasisWindow> {
    if z == 0 {
        return Err(Error::InvalidConfig("partition number must be >= 1".into()));
    }
    check_unit(x)?;
    Ok(window_unchecked(z, x))
}

#[inline]
pub(crate) fn window_unchecked(z: usize, x: f64) -> BasisWindow {
    let u = (4 * z) as f64 * x;
    // at x = 1 the floor would point past the last basis; clamp to 4z so the
    // window is 4z..=4z+3
    let first_index = (u.floor() as usize + 1).min(4 * z);
    let mut values = [0.0; WINDOW];
    for (j, v) in values.iter_mut().enumerate() {
        *v = bump(basis_arg(u, first_index + j));
    }
    BasisWindow {
        first_index,
        values,
    }
}

/// All `4z + 3` basis values at `x`, evaluated one by one.
///
/// Slow reference path; used to cross-check the windowed evaluation.
pub fn dense_basis(z: usize, x: f64) -> Result<Vec<f64>> {
    if z == 0 {
        return Err(Error::InvalidConfig("partition number must be >= 1".into()));
    }
    check_unit(x)?;
    let u = (4 * z) as f64 * x;
    Ok((1..=basis_count(z)).map(|i| bump(basis_arg(u, i))).collect())
}

/// A one-variable cardinal cubic B-spline with `4z + 3` coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ZDensitySpline {
    z: usize,
    theta: Vec<f64>,
}

impl ZDensitySpline {
    pub fn new(z: usize, theta: Vec<f64>) -> Result<Self> {
        if z == 0 {
            return Err(Error::InvalidConfig("partition number must be >= 1".into()));
        }
        if theta.len() != basis_count(z) {
            return Err(Error::SizeMismatch {
                expected: basis_count(z),
                got: theta.len(),
            });
        }
        Ok(Self { z, theta })
    }

    pub fn zeros(z: usize) -> Result<Self> {
        Self::new(z, vec![0.0; basis_count(z)])
    }

    pub fn z(&self) -> usize {
        self.z
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// `Σ θ_i S_i(x)`, summed over the non-zero window only.
    pub fn forward(&self, x: f64) -> Result<f64> {
        Ok(basis_window(self.z, x)?.dot(&self.theta))
    }

    /// `Σ θ_i S_i(x)` summed over every basis function.
    pub fn forward_dense(&self, x: f64) -> Result<f64> {
        let basis = dense_basis(self.z, x)?;
        let mut acc = 0.0;
        for (t, s) in self.theta.iter().zip(&basis) {
            acc += t * s;
        }
        Ok(acc)
    }

    /// Gradient w.r.t. the coefficients: entry `i` is `S_i(x)`.
    pub fn param_grad(&self, x: f64) -> Result<SparseGrad> {
        let w = basis_window(self.z, x)?;
        let mut g = SparseGrad::with_capacity(self.theta.len(), WINDOW);
        push_window(&mut g, &w, 0, 1.0);
        Ok(g)
    }
}

/// Append `scale · window` to `grad` at storage base `base`, skipping exact zeros.
#[inline]
pub(crate) fn push_window(grad: &mut SparseGrad, w: &BasisWindow, base: usize, scale: f64) {
    let o = base + w.offset();
    for (j, s) in w.values.iter().enumerate() {
        let v = scale * s;
        if v != 0.0 {
            grad.push(o + j, v);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn activation_known_values() {
        assert_eq!(activation_s(0.0).unwrap(), 0.0);
        assert_eq!(activation_s(1.0).unwrap(), 1.0 / 6.0);
        assert_eq!(activation_s(2.0).unwrap(), 2.0 / 3.0);
        assert_eq!(activation_s(3.0).unwrap(), 1.0 / 6.0);
        assert_eq!(activation_s(4.0).unwrap(), 0.0);
        assert_eq!(activation_s(5.0).unwrap(), 0.0);
        assert_eq!(activation_s(-0.5).unwrap(), 0.0);
    }

    #[test]
    fn activation_rejects_non_finite() {
        assert_eq!(activation_s(f64::NAN), Err(Error::NonFinite));
        assert_eq!(activation_s(f64::INFINITY), Err(Error::NonFinite));
    }

    #[test]
    fn activation_is_c2_at_knots() {
        // one-sided stencils that are exact for cubics, so only rounding remains
        let h = 1e-3;
        for k in [1.0, 2.0, 3.0] {
            let l = |j: f64| bump(k - j * h);
            let r = |j: f64| bump(k + j * h);
            let d1_left = (11.0 * l(0.0) - 18.0 * l(1.0) + 9.0 * l(2.0) - 2.0 * l(3.0)) / (6.0 * h);
            let d1_right = -(11.0 * r(0.0) - 18.0 * r(1.0) + 9.0 * r(2.0) - 2.0 * r(3.0)) / (6.0 * h);
            let d2_left = (2.0 * l(0.0) - 5.0 * l(1.0) + 4.0 * l(2.0) - l(3.0)) / (h * h);
            let d2_right = (2.0 * r(0.0) - 5.0 * r(1.0) + 4.0 * r(2.0) - r(3.0)) / (h * h);
            assert!(close(bump(k - 1e-12), bump(k), 1e-6));
            assert!(close(d1_left, d1_right, 1e-6), "S' jumps at {k}: {d1_left} vs {d1_right}");
            assert!(close(d2_left, d2_right, 1e-6), "S'' jumps at {k}: {d2_left} vs {d2_right}");
        }
        // the outer knots 0 and 4 as well
        for (k, d1, d2) in [(0.0, 0.0, 0.0), (4.0, 0.0, 0.0)] {
            let h = 1e-3;
            let inner = if k == 0.0 { 1.0 } else { -1.0 };
            let f = |j: f64| bump(k + inner * j * h);
            let one = inner * -(11.0 * f(0.0) - 18.0 * f(1.0) + 9.0 * f(2.0) - 2.0 * f(3.0)) / (6.0 * h);
            let two = (2.0 * f(0.0) - 5.0 * f(1.0) + 4.0 * f(2.0) - f(3.0)) / (h * h);
            assert!(close(one, d1, 1e-6) && close(two, d2, 1e-6));
        }
    }

    #[test]
    fn window_boundary_examples() {
        let w = basis_window(1, 0.0).unwrap();
        assert_eq!(w.first_index, 1);
        assert_eq!(w.values, [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0]);

        let w = basis_window(1, 1.0).unwrap();
        assert_eq!(w.first_index, 4);
        assert_eq!(w.values, [0.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0]);
    }

    #[test]
    fn window_rejects_outside_unit_interval() {
        assert!(matches!(basis_window(3, -1e-12), Err(Error::Domain(_))));
        assert!(matches!(basis_window(3, 1.0 + 1e-12), Err(Error::Domain(_))));
        assert_eq!(basis_window(3, f64::NAN), Err(Error::NonFinite));
        assert!(basis_window(0, 0.5).is_err());
    }

    #[test]
    fn window_matches_dense_basis() {
        for z in [1, 2, 5, 20] {
            for k in 0..=1000 {
                let x = k as f64 / 1000.0;
                let w = basis_window(z, x).unwrap();
                let dense = dense_basis(z, x).unwrap();
                for (i, d) in dense.iter().enumerate() {
                    let idx = i + 1;
                    let expected = if w.indices().contains(&idx) {
                        w.values[idx - w.first_index]
                    } else {
                        0.0
                    };
                    assert_eq!(d.to_bits(), expected.to_bits(), "z={z} x={x} i={idx}");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_z20_midpoint() {
        let dense = dense_basis(20, 0.5).unwrap();
        assert_eq!(dense.len(), 83);
        assert!(dense.iter().all(|v| *v >= 0.0));
        assert!(close(dense.iter().sum::<f64>(), 1.0, 1e-12));
    }

    #[test]
    fn forward_examples() {
        let s = ZDensitySpline::zeros(4).unwrap();
        assert_eq!(s.forward(0.3).unwrap(), 0.0);

        let s = ZDensitySpline::new(3, vec![2.5; basis_count(3)]).unwrap();
        for k in 0..=50 {
            assert!(close(s.forward(k as f64 / 50.0).unwrap(), 2.5, 1e-12));
        }

        let mut theta = vec![0.0; basis_count(1)];
        theta[1] = 1.0; // basis index 2
        let s = ZDensitySpline::new(1, theta).unwrap();
        assert_eq!(s.forward(0.0).unwrap(), 2.0 / 3.0);
    }

    #[test]
    fn forward_window_is_bit_identical_to_dense() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for z in [1, 2, 5, 20] {
            let theta: Vec<f64> = (0..basis_count(z)).map(|_| rng.random_range(-3.0..3.0)).collect();
            let s = ZDensitySpline::new(z, theta).unwrap();
            for _ in 0..500 {
                let x: f64 = rng.random();
                assert_eq!(
                    s.forward(x).unwrap().to_bits(),
                    s.forward_dense(x).unwrap().to_bits()
                );
            }
            for x in [0.0, 1.0] {
                assert_eq!(
                    s.forward(x).unwrap().to_bits(),
                    s.forward_dense(x).unwrap().to_bits()
                );
            }
        }
    }

    #[test]
    fn param_grad_boundary_example() {
        let s = ZDensitySpline::zeros(1).unwrap();
        let g = s.param_grad(0.0).unwrap();
        // storage is 0-based: basis 1,2,3 → 0,1,2
        assert_eq!(g.entries(), &[(0, 1.0 / 6.0), (1, 2.0 / 3.0), (2, 1.0 / 6.0)]);
        assert_eq!(g.dim(), 7);
    }

    #[test]
    fn param_grad_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for z in [1, 3, 20] {
            let theta: Vec<f64> = (0..basis_count(z)).map(|_| rng.random_range(-1.0..1.0)).collect();
            let s = ZDensitySpline::new(z, theta).unwrap();
            for _ in 0..10 {
                let x: f64 = rng.random();
                let dense = s.param_grad(x).unwrap().to_dense();
                let h = 1e-6;
                for (i, &gi) in dense.iter().enumerate() {
                    let mut plus = s.clone();
                    plus.theta_mut()[i] += h;
                    let mut minus = s.clone();
                    minus.theta_mut()[i] -= h;
                    let fd = (plus.forward(x).unwrap() - minus.forward(x).unwrap()) / (2.0 * h);
                    assert!(close(fd, gi, 1e-8), "z={z} i={i} fd={fd} g={gi}");
                }
            }
        }
    }

    #[test]
    fn distant_points_have_disjoint_windows() {
        for z in [1, 2, 5, 20] {
            let step = 1.0 / (7.0 * z as f64);
            let n = (1.0 / step) as usize;
            for a in 0..=n {
                for b in 0..=n {
                    let x = (a as f64 * step).min(1.0);
                    let y = (b as f64 * step).min(1.0);
                    if (x - y).abs() > 1.0 / z as f64 {
                        // index windows may touch at an entry that is exactly zero
                        let s = ZDensitySpline::zeros(z).unwrap();
                        let gx = s.param_grad(x).unwrap();
                        let gy = s.param_grad(y).unwrap();
                        assert!(gx.support_disjoint(&gy), "z={z} x={x} y={y}");
                    }
                }
            }
        }
    }

    mod properties {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_sparsity_bounds_and_unity(z in prop::sample::select(vec![1usize, 2, 5, 20]), x in 0.0f64..=1.0) {
                let w = basis_window(z, x).unwrap();
                let nnz = w.values.iter().filter(|v| **v != 0.0).count();
                prop_assert!(nnz <= 4);
                prop_assert!(nnz >= 3);
                prop_assert!(w.values.iter().all(|v| (0.0..=2.0 / 3.0).contains(v)));
                let brute: f64 = dense_basis(z, x).unwrap().iter().sum();
                prop_assert!((brute - 1.0).abs() <= 1e-12);
                let l1: f64 = w.values.iter().sum();
                prop_assert!(l1 < 4.0);
                prop_assert!((l1 - 1.0).abs() <= 1e-12);
            }

            #[test]
            fn distal_orthogonality(z in 1usize..25, x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
                prop_assume!((x - y).abs() > 1.0 / z as f64);
                let s = ZDensitySpline::zeros(z).unwrap();
                let gx = s.param_grad(x).unwrap();
                let gy = s.param_grad(y).unwrap();
                prop_assert!(gx.support_disjoint(&gy));
                prop_assert_eq!(gx.dot(&gy).unwrap().to_bits(), 0f64.to_bits());
            }
        }
    }
}
