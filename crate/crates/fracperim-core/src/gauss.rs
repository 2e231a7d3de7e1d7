//! Gauss–Hermite quadrature, tensor grids and grid functions.
//!
//! All quadrature here targets the standard Gaussian *probability* measure
//! `dγ(x) = (2π)^{−d/2} e^{−|x|²/2} dx`: weights sum to one, and an `n`-point
//! one-dimensional rule integrates polynomials up to degree `2n − 1`
//! exactly, so in particular `∫ x^{2k} dγ = (2k−1)!!` for `2k ≤ 2n − 1`.
//!
//! Nodes and weights come from the Golub–Welsch connection: the probabilists'
//! Hermite polynomials satisfy the symmetric three-term recurrence with
//! Jacobi matrix `diag = 0`, `offdiag_k = √k`, so the nodes are the
//! eigenvalues of that matrix and each weight is the squared first component
//! of the corresponding unit eigenvector. The eigensolve is a small implicit
//! QL iteration with Wilkinson-style shifts that tracks only the first row of
//! the eigenvector matrix — the full matrix is never formed.
//!
//! [`TensorGrid`] takes products of one-dimensional rules across up to three
//! axes, and [`GridFunction`] stores nodal values of a function on such a
//! grid together with the bilinear structure (`∫ u v dγ` by quadrature).
//! [`GridFunction::cylindrical_projection`] is the conditional expectation
//! onto functions of the first `m` coordinates — a building block for
//! dimension-reduction arguments, and an exact `L²_γ` contraction already at
//! the discrete level (it averages trailing axes with their own quadrature
//! weights).

#[cfg(not(feature = "std"))]
#[allow(unused_imports)]
use num_traits::Float;

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Maximum supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Default nodes per axis: enough for degree-≤ 63 exact integration in one
/// and two dimensions; reduced in three dimensions to keep grids affordable.
pub fn default_nodes_per_axis(dim: usize) -> usize {
    if dim <= 2 {
        64
    } else {
        32
    }
}

// Relative deflation threshold and iteration cap for the QL sweep.
const QL_EPS: f64 = 2.220_446_049_250_313e-16;
const QL_MAX_ITER: usize = 50;

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix that
/// accumulates only the first component of each eigenvector.
///
/// On entry `d` holds the diagonal, `e` the subdiagonal (`e[i]` couples rows
/// `i` and `i+1`; `e[n−1]` is workspace), and `z` the first row of the
/// identity. On exit `d` holds unordered eigenvalues and `z[i]` the first
/// component of the corresponding unit eigenvector.
fn tridiag_eigen_first_component(d: &mut [f64], e: &mut [f64], z: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0usize;
        'sweep: loop {
            // Find the first deflated subdiagonal entry at or after l.
            let mut m = l;
            while m < n - 1 {
                if e[m].abs() <= QL_EPS * (d[m].abs() + d[m + 1].abs()) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break 'sweep; // eigenvalue at position l converged
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    routine: "tridiagonal QL eigensolver",
                    iterations: QL_MAX_ITER,
                });
            }
            // Wilkinson-style shift from the leading 2×2 block.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Rotation annihilated prematurely: absorb the shift and
                    // restart the sweep from the deflated configuration.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    continue 'sweep;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                // Apply the rotation to the tracked first-row components.
                f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// A one-dimensional Gaussian quadrature rule (nodes and positive weights,
/// weights summing to one).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the `n`-point Gauss–Hermite rule for the standard Gaussian
    /// probability measure on the line.
    ///
    /// Nodes are returned in increasing order, exactly antisymmetric
    /// (`x_i = −x_{n−1−i}`, with a hard zero middle node for odd `n`), and
    /// the weights are symmetric, positive, and renormalised to sum to one.
    /// `n = 1` gives the single node `0` with weight `1`; `n = 2` gives
    /// nodes `±1` with weights `1/2`.
    pub fn gauss_hermite(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize {
                name: "n",
                expected: "at least 1",
                value: 0,
            });
        }
        let mut d = vec![0.0f64; n];
        let mut e: Vec<f64> = (1..=n).map(|k| (k as f64).sqrt()).collect();
        let mut z = vec![0.0f64; n];
        z[0] = 1.0;
        tridiag_eigen_first_component(&mut d, &mut e, &mut z)?;

        // Sort nodes ascending, carrying the weights along.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let mut nodes: Vec<f64> = order.iter().map(|&i| d[i]).collect();
        let mut weights: Vec<f64> = order.iter().map(|&i| z[i] * z[i]).collect();

        // Enforce the exact symmetry of the Hermite rule: pair up mirrored
        // nodes and average, pin the middle node of an odd rule to zero.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (nodes[j] - nodes[i]);
            nodes[i] = -x;
            nodes[j] = x;
            let w = 0.5 * (weights[i] + weights[j]);
            weights[i] = w;
            weights[j] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// True when the rule has no nodes (never, for rules built here).
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature nodes in increasing order.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights (positive, summing to one).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f` against the one-dimensional Gaussian measure.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Probabilists' Hermite polynomial `He_n(x)`.
///
/// Defined by `He_0 = 1`, `He_1 = x`, `He_{n+1}(x) = x He_n(x) − n He_{n−1}(x)`;
/// orthogonal against `γ₁` with `∫ He_n² dγ = n!`. Grows like `√(n!)`, so for
/// large degrees prefer [`hermite_orthonormal`].
pub fn hermite(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0f64, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let next = x * cur - k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal Hermite polynomial `h_n(x) = He_n(x)/√(n!)`.
///
/// Evaluated with the normalised recurrence
/// `h_{n+1} = (x h_n − √n h_{n−1}) / √(n+1)`, which stays well-scaled for
/// degrees in the thousands. Satisfies `∫ h_n h_m dγ = δ_{nm}`.
pub fn hermite_orthonormal(n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (1.0f64, x);
    if n == 0 {
        return prev;
    }
    for k in 1..n {
        let kf = k as f64;
        let next = (x * cur - kf.sqrt() * prev) / (kf + 1.0).sqrt();
        prev = cur;
        cur = next;
    }
    cur
}

/// Fills `out[k] = h_k(x)` for `k = 0..out.len()` in one recurrence pass.
pub fn hermite_orthonormal_row(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    for k in 1..out.len() - 1 {
        let kf = k as f64;
        out[k + 1] = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
    }
}

/// A tensor product of one-dimensional Gaussian rules over `1..=3` axes.
///
/// Nodes are indexed in row-major (C) order: the last axis varies fastest.
/// The product weights sum to one because each factor's weights do.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<QuadratureRule>,
}

impl TensorGrid {
    /// Builds a grid from per-axis rules. Rejects dimension `0` or `> 3`.
    pub fn from_rules(axes: Vec<QuadratureRule>) -> Result<Self> {
        if axes.is_empty() || axes.len() > MAX_DIM {
            return Err(Error::InvalidSize {
                name: "dim",
                expected: "1, 2 or 3",
                value: axes.len(),
            });
        }
        Ok(TensorGrid { axes })
    }

    /// Builds a grid with the same `n`-point Gauss–Hermite rule on each axis.
    pub fn uniform(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidSize {
                name: "dim",
                expected: "1, 2 or 3",
                value: dim,
            });
        }
        let rule = QuadratureRule::gauss_hermite(n)?;
        Ok(TensorGrid {
            axes: vec![rule; dim],
        })
    }

    /// Builds the default grid for a dimension (64 nodes per axis for
    /// `d ≤ 2`, 32 for `d = 3`).
    pub fn default_for_dim(dim: usize) -> Result<Self> {
        Self::uniform(dim, default_nodes_per_axis(dim))
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Nodes per axis.
    pub fn shape(&self) -> [usize; MAX_DIM] {
        let mut s = [1usize; MAX_DIM];
        for (k, rule) in self.axes.iter().enumerate() {
            s[k] = rule.len();
        }
        s
    }

    /// Total number of grid nodes.
    pub fn len(&self) -> usize {
        self.axes.iter().map(QuadratureRule::len).product()
    }

    /// True when the grid has no nodes (never, for grids built here).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The rule on axis `k`.
    pub fn axis(&self, k: usize) -> &QuadratureRule {
        &self.axes[k]
    }

    /// Decomposes a flat node index into per-axis indices.
    pub fn multi_index(&self, flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0usize; MAX_DIM];
        let mut rem = flat;
        for k in (0..self.dim()).rev() {
            let n = self.axes[k].len();
            idx[k] = rem % n;
            rem /= n;
        }
        idx
    }

    /// Writes the coordinates of the node with flat index `flat` into `out`
    /// (first `dim` entries).
    pub fn node_into(&self, flat: usize, out: &mut [f64]) {
        let idx = self.multi_index(flat);
        for k in 0..self.dim() {
            out[k] = self.axes[k].nodes()[idx[k]];
        }
    }

    /// Product quadrature weight of the node with flat index `flat`.
    pub fn weight(&self, flat: usize) -> f64 {
        let idx = self.multi_index(flat);
        let mut w = 1.0;
        for k in 0..self.dim() {
            w *= self.axes[k].weights()[idx[k]];
        }
        w
    }

    /// True when two grids have identical axes (same nodes and weights).
    pub fn same_as(&self, other: &TensorGrid) -> bool {
        self == other
    }
}

/// Nodal values of a function on a [`TensorGrid`], with quadrature-backed
/// integrals and inner products.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<TensorGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    /// Samples `f` at every grid node (row-major order).
    pub fn from_fn(grid: &Arc<TensorGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let dim = grid.dim();
        let mut buf = [0.0f64; MAX_DIM];
        let values = (0..grid.len())
            .map(|i| {
                grid.node_into(i, &mut buf);
                f(&buf[..dim])
            })
            .collect();
        GridFunction {
            grid: Arc::clone(grid),
            values,
        }
    }

    /// Wraps existing nodal values; their length must match the grid.
    pub fn from_values(grid: &Arc<TensorGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                context: "value vector length vs grid size",
            });
        }
        Ok(GridFunction {
            grid: Arc::clone(grid),
            values,
        })
    }

    /// The constant function `c`.
    pub fn constant(grid: &Arc<TensorGrid>, c: f64) -> Self {
        GridFunction {
            grid: Arc::clone(grid),
            values: vec![c; grid.len()],
        }
    }

    /// The underlying grid.
    pub fn grid(&self) -> &Arc<TensorGrid> {
        &self.grid
    }

    /// Nodal values in row-major order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable nodal values.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `∫ u dγ` by quadrature.
    pub fn integrate(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.grid.weight(i) * v)
            .sum()
    }

    /// `∫ u w dγ` by quadrature; the grids must match.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (&a, &b))| self.grid.weight(i) * a * b)
            .sum())
    }

    /// `‖u‖_{L²_γ}` by quadrature.
    pub fn l2_norm(&self) -> f64 {
        let sq: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(i, &v)| self.grid.weight(i) * v * v)
            .sum();
        sq.max(0.0).sqrt()
    }

    /// Largest pointwise difference `max_i |u_i − w_i|`; grids must match.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (&a, &b)| m.max((a - b).abs())))
    }

    fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                context: "two grid functions on different grids",
            })
        }
    }

    /// Conditional expectation onto functions of the first `m` coordinates.
    ///
    /// Returns the function `x ↦ ∫ u(x_1,…,x_m, z) dγ_{d−m}(z)` sampled on
    /// the *same* grid (constant along the trailing axes). `m = dim` is the
    /// identity; `m = 0` the constant `∫ u dγ`. The operation is idempotent
    /// and an `L²_γ` contraction exactly at the discrete level, because the
    /// trailing average uses the trailing axes' own quadrature weights.
    pub fn cylindrical_projection(&self, m: usize) -> Result<GridFunction> {
        let dim = self.grid.dim();
        if m > dim {
            return Err(Error::InvalidSize {
                name: "m",
                expected: "at most the grid dimension",
                value: m,
            });
        }
        if m == dim {
            return Ok(self.clone());
        }
        let shape = self.grid.shape();
        let head: usize = shape[..m].iter().product();
        let tail: usize = shape[m..dim].iter().product();
        // Average over the trailing block for each leading index…
        let mut averages = vec![0.0f64; head];
        for h in 0..head {
            let mut acc = 0.0;
            for t in 0..tail {
                let flat = h * tail + t;
                // Tail weight = product weight / head weight; build directly.
                let idx = self.grid.multi_index(flat);
                let mut w = 1.0;
                for k in m..dim {
                    w *= self.grid.axis(k).weights()[idx[k]];
                }
                acc += w * self.values[flat];
            }
            averages[h] = acc;
        }
        // …then broadcast back over the trailing axes.
        let mut values = vec![0.0f64; self.values.len()];
        for h in 0..head {
            for t in 0..tail {
                values[h * tail + t] = averages[h];
            }
        }
        Ok(GridFunction {
            grid: Arc::clone(&self.grid),
            values,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn double_factorial(k: i64) -> f64 {
        // (−1)!! = 1 by convention; k!! = k(k−2)(k−4)…
        let mut v = 1.0;
        let mut i = k;
        while i > 1 {
            v *= i as f64;
            i -= 2;
        }
        v
    }

    // ----- one-dimensional rules -----------------------------------------

    #[test]
    fn one_point_rule_is_the_mean() {
        let r = QuadratureRule::gauss_hermite(1).unwrap();
        assert_eq!(r.nodes(), &[0.0]);
        assert_eq!(r.weights(), &[1.0]);
    }

    #[test]
    fn two_point_rule_is_plus_minus_one() {
        let r = QuadratureRule::gauss_hermite(2).unwrap();
        assert_abs_diff_eq!(r.nodes()[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.nodes()[1], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights()[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn three_point_rule_matches_closed_form() {
        // Known closed form: nodes ±√3, 0 with weights 1/6, 2/3, 1/6.
        let r = QuadratureRule::gauss_hermite(3).unwrap();
        let s3 = 3.0f64.sqrt();
        assert_abs_diff_eq!(r.nodes()[0], -s3, epsilon = 1e-14);
        assert_eq!(r.nodes()[1], 0.0);
        assert_abs_diff_eq!(r.nodes()[2], s3, epsilon = 1e-14);
        assert_abs_diff_eq!(r.weights()[0], 1.0 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.weights()[2], 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_zero_points() {
        assert!(QuadratureRule::gauss_hermite(0).is_err());
    }

    #[test]
    fn nodes_symmetric_weights_positive_sum_one() {
        for n in [1, 2, 3, 5, 8, 16, 31, 64, 101] {
            let r = QuadratureRule::gauss_hermite(n).unwrap();
            let sum: f64 = r.weights().iter().sum();
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
            for i in 0..n {
                assert!(r.weights()[i] > 0.0);
                // Exact antisymmetry is enforced, not just approximate.
                assert_eq!(r.nodes()[i], -r.nodes()[n - 1 - i]);
                if i > 0 {
                    assert!(r.nodes()[i] > r.nodes()[i - 1]);
                }
            }
            if n % 2 == 1 {
                assert_eq!(r.nodes()[n / 2], 0.0);
            }
        }
    }

    #[test]
    fn gaussian_moments_exact_to_degree_2n_minus_1() {
        // ∫ x^k dγ = (k−1)!! for even k, 0 for odd k, exactly up to 2n−1.
        for n in [1, 2, 3, 4, 7, 10, 16] {
            let r = QuadratureRule::gauss_hermite(n).unwrap();
            for k in 0..2 * n {
                let m = r.integrate(|x| x.powi(k as i32));
                if k % 2 == 1 {
                    // Odd moments vanish by symmetry; the residual is pure
                    // rounding, bounded relative to the absolute-moment scale.
                    let scale: f64 = r.integrate(|x| x.abs().powi(k as i32));
                    assert_abs_diff_eq!(m, 0.0, epsilon = 1e-14 * scale.max(1.0));
                } else {
                    let exact = double_factorial(k as i64 - 1);
                    assert_relative_eq!(m, exact, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn sixteen_point_rule_fourth_moment() {
        let r = QuadratureRule::gauss_hermite(16).unwrap();
        let m4 = r.integrate(|x| x.powi(4));
        assert_abs_diff_eq!(m4, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn orthonormal_gram_matrix_at_64_nodes() {
        // Degrees ≤ 30 on the 64-node rule: ‖VᵀWV − I‖_max < 1e−9.
        let r = QuadratureRule::gauss_hermite(64).unwrap();
        let deg = 30usize;
        let mut rows = vec![vec![0.0f64; deg + 1]; r.len()];
        for (i, &x) in r.nodes().iter().enumerate() {
            hermite_orthonormal_row(x, &mut rows[i]);
        }
        let mut worst = 0.0f64;
        for a in 0..=deg {
            for b in 0..=deg {
                let g: f64 = (0..r.len()).map(|i| r.weights()[i] * rows[i][a] * rows[i][b]).sum();
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        assert!(worst < 1e-9, "max Gram deviation {worst:.3e}");
    }

    // ----- Hermite polynomials -------------------------------------------

    #[test]
    fn hermite_low_degrees_and_pinned_value() {
        for &x in &[-1.7, 0.0, 0.3, 2.2] {
            assert_eq!(hermite(0, x), 1.0);
            assert_eq!(hermite(1, x), x);
            assert_abs_diff_eq!(hermite(2, x), x * x - 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(hermite(3, x), x * x * x - 3.0 * x, epsilon = 1e-13);
        }
        // He_6(0) = −15 (equals −5!! with the alternating-sign pattern).
        assert_eq!(hermite(6, 0.0), -15.0);
    }

    #[test]
    fn orthonormal_matches_scaled_hermite() {
        // h_n = He_n/√(n!) for moderate n.
        let mut fact = 1.0f64;
        for n in 1..=12usize {
            fact *= n as f64;
            for &x in &[-2.1, -0.4, 0.9, 3.0] {
                assert_relative_eq!(
                    hermite_orthonormal(n, x),
                    hermite(n, x) / fact.sqrt(),
                    max_relative = 1e-12,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn orthonormal_row_matches_pointwise() {
        let mut row = vec![0.0f64; 21];
        hermite_orthonormal_row(0.7, &mut row);
        for (n, &v) in row.iter().enumerate() {
            assert_eq!(v, hermite_orthonormal(n, 0.7));
        }
    }

    // ----- tensor grids ---------------------------------------------------

    #[test]
    fn tensor_grid_shapes_and_weight_sum() {
        let g = TensorGrid::uniform(2, 16).unwrap();
        assert_eq!(g.dim(), 2);
        assert_eq!(g.len(), 256);
        assert_eq!(g.shape()[..2], [16, 16]);
        let total: f64 = (0..g.len()).map(|i| g.weight(i)).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-10);

        let g3 = TensorGrid::default_for_dim(3).unwrap();
        assert_eq!(g3.shape(), [32, 32, 32]);
        let total3: f64 = (0..g3.len()).map(|i| g3.weight(i)).sum();
        assert_abs_diff_eq!(total3, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn tensor_grid_rejects_bad_dimensions() {
        assert!(TensorGrid::uniform(0, 8).is_err());
        assert!(TensorGrid::uniform(4, 8).is_err());
        assert!(TensorGrid::from_rules(vec![]).is_err());
    }

    #[test]
    fn node_coordinates_compose_axis_nodes() {
        let g = TensorGrid::uniform(2, 4).unwrap();
        let mut buf = [0.0f64; MAX_DIM];
        for flat in 0..g.len() {
            let idx = g.multi_index(flat);
            g.node_into(flat, &mut buf);
            assert_eq!(buf[0], g.axis(0).nodes()[idx[0]]);
            assert_eq!(buf[1], g.axis(1).nodes()[idx[1]]);
            // Row-major: last axis fastest.
            assert_eq!(flat, idx[0] * 4 + idx[1]);
        }
    }

    #[test]
    fn mixed_moment_in_two_dimensions() {
        let grid = Arc::new(TensorGrid::uniform(2, 8).unwrap());
        let u = GridFunction::from_fn(&grid, |x| x[0] * x[0] * x[1].powi(4));
        // ∫x₁²dγ · ∫x₂⁴dγ = 1 · 3.
        assert_relative_eq!(u.integrate(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn orthonormal_product_norm() {
        let grid = Arc::new(TensorGrid::uniform(2, 16).unwrap());
        let u = GridFunction::from_fn(&grid, |x| {
            hermite_orthonormal(2, x[0]) * hermite_orthonormal(1, x[1])
        });
        assert_relative_eq!(u.l2_norm(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let g1 = Arc::new(TensorGrid::uniform(1, 8).unwrap());
        let g2 = Arc::new(TensorGrid::uniform(1, 9).unwrap());
        let u = GridFunction::constant(&g1, 1.0);
        let w = GridFunction::constant(&g2, 1.0);
        assert!(u.inner(&w).is_err());
        assert!(u.max_abs_diff(&w).is_err());
    }

    // ----- cylindrical projection ----------------------------------------

    #[test]
    fn projection_identity_and_constant_cases() {
        let grid = Arc::new(TensorGrid::uniform(2, 12).unwrap());
        let u = GridFunction::from_fn(&grid, |x| (x[0] - 0.3).tanh() + x[1] * x[1]);
        let full = u.cylindrical_projection(2).unwrap();
        assert_eq!(full.values(), u.values());
        let zero = u.cylindrical_projection(0).unwrap();
        let mean = u.integrate();
        for &v in zero.values() {
            assert_abs_diff_eq!(v, mean, epsilon = 1e-14);
        }
        assert!(u.cylindrical_projection(3).is_err());
    }

    #[test]
    fn projection_of_separable_function_integrates_the_tail() {
        let grid = Arc::new(TensorGrid::uniform(2, 16).unwrap());
        let u = GridFunction::from_fn(&grid, |x| x[0].sin() * (1.0 + x[1] * x[1]));
        let p = u.cylindrical_projection(1).unwrap();
        // ∫(1 + x₂²) dγ = 2, so the projection is 2·sin(x₁).
        let expect = GridFunction::from_fn(&grid, |x| 2.0 * x[0].sin());
        assert!(p.max_abs_diff(&expect).unwrap() < 1e-13);
    }

    #[test]
    fn projection_idempotent_and_contractive() {
        let grid = Arc::new(TensorGrid::uniform(2, 10).unwrap());
        let u = GridFunction::from_fn(&grid, |x| {
            (x[0] * 1.3 - 0.2).cos() + 0.5 * x[0] * x[1] + (x[1] * 0.7).exp()
        });
        let p1 = u.cylindrical_projection(1).unwrap();
        let p2 = p1.cylindrical_projection(1).unwrap();
        assert!(p1.max_abs_diff(&p2).unwrap() < 1e-14);
        assert!(p1.l2_norm() <= u.l2_norm() + 1e-14);
        let p0 = u.cylindrical_projection(0).unwrap();
        assert!(p0.l2_norm() <= p1.l2_norm() + 1e-14);
    }
}
