//! Stage-1 estimation: least squares on the inverse-propensity signal
//! `z = B * o` collected under uniformly random prices, plus the grid-scale
//! schedule derived from the Stage-1 length.
//!
//! With `p ~ Unif[0, B]` and `0 <= y <= B`, `E[B * 1{p <= y} | x] = E[y | x] = <x, theta*>`,
//! so ordinary least squares of `z` on `x` is consistent for `theta*`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Relative eigenvalue cutoff used by [`solve_theta`] by default.
pub const DEFAULT_EIG_TOL: f64 = 1e-10;

/// Running sums `sum x x^T` and `sum z x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignAccumulator {
    dim: usize,
    gram: Vec<f64>,
    moment: Vec<f64>,
    count: u64,
}

impl DesignAccumulator {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            gram: vec![0.0; dim * dim],
            moment: vec![0.0; dim],
            count: 0,
        }
    }

    /// Adds one Stage-1 round with signal `z = price_cap * o`.
    pub fn accumulate(&mut self, x: &[f64], purchased: bool, price_cap: f64) {
        debug_assert_eq!(x.len(), self.dim);
        let z = if purchased { price_cap } else { 0.0 };
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut self.gram[i * self.dim..(i + 1) * self.dim];
            for (g, &xj) in row.iter_mut().zip(x) {
                *g += xi * xj;
            }
            self.moment[i] += z * xi;
        }
        self.count += 1;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `sum x x^T`.
    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn moment(&self) -> &[f64] {
        &self.moment
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Least-squares estimate together with a rank diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSolve {
    pub theta: Vec<f64>,
    /// Number of eigenvalues kept by the pseudoinverse.
    pub rank: usize,
}

impl ThetaSolve {
    pub fn rank_deficient(&self) -> bool {
        self.rank < self.theta.len()
    }
}

/// `gram^+ * moment`, where eigenvalues below `eig_tol * lambda_max` are
/// treated as zero. This is the minimum-norm least-squares solution.
pub fn solve_theta(acc: &DesignAccumulator, eig_tol: f64) -> ThetaSolve {
    let d = acc.dim;
    let gram = DMatrix::from_row_slice(d, d, &acc.gram);
    let moment = DVector::from_column_slice(&acc.moment);
    let eig = gram.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let cutoff = eig_tol * lambda_max;

    let mut theta = DVector::zeros(d);
    let mut rank = 0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff && lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            theta += v * (v.dot(&moment) / lambda);
            rank += 1;
        }
    }
    ThetaSolve {
        theta: theta.iter().copied().collect(),
        rank,
    }
}

/// Stage-1 output consumed by the later stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaHat {
    pub theta: Vec<f64>,
    /// Grid scale `Delta`, in residual units.
    pub delta: f64,
    /// Stage-1 length.
    pub t1: u64,
}

/// Practical grid-scale schedule `delta_mult * sqrt(d ln T / t1)`.
///
/// The theoretical schedule replaces `delta_mult` with `C_theta B B_x^2 / lambda_0`;
/// those constants are rarely known, so only the multiplier form is implemented.
pub fn delta_for(horizon: u64, t1: u64, dim: usize, delta_mult: f64) -> f64 {
    assert!(t1 >= 1, "Stage-1 length must be positive");
    delta_mult * (dim as f64 * (horizon as f64).ln() / t1 as f64).sqrt()
}

/// `ceil(T^(2/3))`, computed exactly in integers.
pub fn stage_length(horizon: u64) -> u64 {
    let target = u128::from(horizon) * u128::from(horizon);
    let mut n = ((horizon as f64).powf(2.0 / 3.0).floor() as u128).saturating_sub(1);
    while n * n * n < target {
        n += 1;
    }
    while n > 0 && (n - 1) * (n - 1) * (n - 1) >= target {
        n -= 1;
    }
    n as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn accumulate_examples() {
        let mut acc = DesignAccumulator::new(3);
        acc.accumulate(&[1.0, 0.0, 0.0], true, 4.0);
        assert_eq!(acc.moment(), &[4.0, 0.0, 0.0]);
        assert_eq!(acc.gram()[0], 1.0);
        acc.accumulate(&[0.0, 1.0, 0.0], false, 4.0);
        assert_eq!(acc.moment(), &[4.0, 0.0, 0.0]);
        assert_eq!(acc.gram()[4], 1.0);
        assert_eq!(acc.count(), 2);
    }

    #[test]
    fn diagonal_design_recovers_signals() {
        let mut acc = DesignAccumulator::new(3);
        acc.accumulate(&[1.0, 0.0, 0.0], true, 4.0);
        acc.accumulate(&[0.0, 1.0, 0.0], false, 4.0);
        acc.accumulate(&[0.0, 0.0, 1.0], true, 4.0);
        let sol = solve_theta(&acc, DEFAULT_EIG_TOL);
        assert!(!sol.rank_deficient());
        for (a, b) in sol.theta.iter().zip([4.0, 0.0, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_signals_are_recovered_exactly() {
        // Feed z = <x, theta*> directly through the moment sums.
        let theta_star = [2.0, 0.125, -0.3, 0.7];
        let mut acc = DesignAccumulator::new(4);
        let mut state = 1u64;
        for _ in 0..50 {
            let x: Vec<f64> = (0..4)
                .map(|i| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    if i == 0 { 1.0 } else { (state >> 11) as f64 / (1u64 << 53) as f64 }
                })
                .collect();
            let z: f64 = x.iter().zip(&theta_star).map(|(a, b)| a * b).sum();
            for i in 0..4 {
                for j in 0..4 {
                    acc.gram[i * 4 + j] += x[i] * x[j];
                }
                acc.moment[i] += z * x[i];
            }
            acc.count += 1;
        }
        let sol = solve_theta(&acc, DEFAULT_EIG_TOL);
        for (a, b) in sol.theta.iter().zip(theta_star) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn rank_one_design_gives_minimum_norm_solution() {
        let v = [1.0, 2.0, -1.0];
        let mut acc = DesignAccumulator::new(3);
        for _ in 0..5 {
            acc.accumulate(&v, true, 4.0);
        }
        let sol = solve_theta(&acc, DEFAULT_EIG_TOL);
        assert_eq!(sol.rank, 1);
        assert!(sol.rank_deficient());
        // theta = (v . z / |v|^2) v with z = 4 for every row.
        let scale = 4.0 / 6.0;
        for (a, b) in sol.theta.iter().zip(v) {
            assert!((a - scale * b).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_schedule() {
        let t1 = stage_length(1000);
        assert_eq!(t1, 100);
        let delta = delta_for(1000, t1, 5, 0.35);
        assert!((delta - 0.35 * (5.0 * 1000f64.ln() / 100.0).sqrt()).abs() < 1e-15);
        assert!((delta - 0.20569).abs() < 1e-5);
        let quarter = delta_for(1000, 4 * t1, 5, 0.35);
        assert!((delta / quarter - 2.0).abs() < 1e-12);
        assert_eq!(delta_for(1000, t1, 5, 0.0), 0.0);
    }

    #[test]
    fn stage_length_is_exact_ceiling() {
        assert_eq!(stage_length(8), 4);
        assert_eq!(stage_length(27), 9);
        assert_eq!(stage_length(500), 63);
        assert_eq!(stage_length(64_000), 1600);
        assert_eq!(stage_length(1_000_000), 10_000);
        assert_eq!(stage_length(1_000_001), 10_001);
    }

    proptest! {
        #[test]
        fn accumulation_order_does_not_matter(rows in prop::collection::vec((prop::collection::vec(0.0f64..1.0, 3), any::<bool>()), 2..20)) {
            let mut fwd = DesignAccumulator::new(3);
            let mut rev = DesignAccumulator::new(3);
            for (x, o) in &rows { fwd.accumulate(x, *o, 4.0); }
            for (x, o) in rows.iter().rev() { rev.accumulate(x, *o, 4.0); }
            prop_assert_eq!(fwd.count(), rev.count());
            for (a, b) in fwd.gram().iter().zip(rev.gram()) { prop_assert!((a - b).abs() < 1e-12); }
            for (a, b) in fwd.moment().iter().zip(rev.moment()) { prop_assert!((a - b).abs() < 1e-12); }
        }

        #[test]
        fn pseudoinverse_matches_direct_solve(rows in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 4), any::<bool>()), 12..40)) {
            let mut acc = DesignAccumulator::new(4);
            for (x, o) in &rows { acc.accumulate(x, *o, 4.0); }
            let gram = DMatrix::from_row_slice(4, 4, acc.gram());
            let sv = gram.singular_values();
            let cond = sv.max() / sv.min();
            prop_assume!(cond <= 1e6);
            let direct = gram.lu().solve(&DVector::from_column_slice(acc.moment())).unwrap();
            let sol = solve_theta(&acc, DEFAULT_EIG_TOL);
            let scale = direct.norm().max(1e-12);
            for (a, b) in sol.theta.iter().zip(direct.iter()) {
                prop_assert!((a - b).abs() <= 1e-8 * scale);
            }
        }

        #[test]
        fn gram_is_symmetric_psd(rows in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 1..20)) {
            let mut acc = DesignAccumulator::new(3);
            for x in &rows { acc.accumulate(x, true, 1.0); }
            let gram = DMatrix::from_row_slice(3, 3, acc.gram());
            prop_assert_eq!(gram.clone(), gram.transpose());
            let min = gram.clone().symmetric_eigen().eigenvalues.min();
            prop_assert!(min >= -1e-9 * gram.norm());
        }
    }
}
