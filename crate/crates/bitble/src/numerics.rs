//! Low-level kernels shared by every synthesis path: binary reflected Gray
//! codes, the Walsh-Hadamard/Gray solver that decouples multiplexed rotations,
//! and the rotation-Z binary tree solver.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! - The decoupling system is `M^n b~ = b` with `M^n = H^{(x)n} P_G`, where
//!   `H` has unnormalized entries `+-1` and `P_G` maps unit vector `e_j` to
//!   `e_{g_j}`. The `1/2^n` factor lives in the inverse transform, so for
//!   n = 1 the solution is `((b0+b1)/2, (b0-b1)/2)`.
//! - Control indices are 1-based and count bit positions of the Gray word
//!   from the most significant end, matching the printed top-down numbering
//!   of control wires: index 1 is the MSB flip, index n the LSB flip.

use crate::{Error, Result};

/// An n-bit binary reflected Gray code word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GrayCode {
    pub bits: u32,
    pub width: u32,
}

const MAX_GRAY_BITS: u32 = 30;

fn check_width(n: u32) -> Result<()> {
    if n < 1 || n > MAX_GRAY_BITS {
        return Err(Error::arg(format!(
            "gray code width must be in 1..={MAX_GRAY_BITS}, got {n}"
        )));
    }
    Ok(())
}

/// The j-th binary reflected Gray code, `j XOR (j >> 1)`.
#[inline]
pub fn gray_code(j: u32) -> u32 {
    j ^ (j >> 1)
}

/// The canonical n-bit Gray sequence of length `2^n`.
pub fn gray_sequence(n: u32) -> Result<Vec<GrayCode>> {
    check_width(n)?;
    Ok((0..1u32 << n)
        .map(|j| GrayCode {
            bits: gray_code(j),
            width: n,
        })
        .collect())
}

/// Control indices for the closed CNOT cycle of a 2^n-slot multiplexor.
///
/// Entry `j` names the single bit flipped between consecutive Gray codes
/// `g_j` and `g_{j+1 mod 2^n}`; the wrap-around flip closes the cycle so the
/// chain composes to the identity.
pub fn control_schedule(n: u32) -> Result<Vec<u32>> {
    check_width(n)?;
    let len = 1u32 << n;
    Ok((0..len)
        .map(|j| {
            let flip = gray_code(j) ^ gray_code((j + 1) % len);
            debug_assert_eq!(flip.count_ones(), 1);
            n - flip.trailing_zeros()
        })
        .collect())
}

fn check_power_of_two(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::arg(format!(
            "angle vector length must be a power of two, got {len}"
        )));
    }
    Ok(len.trailing_zeros())
}

/// In-place unnormalized Walsh-Hadamard butterflies.
pub fn fwht_in_place(values: &mut [f64]) {
    let len = values.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Solves `M^n b~ = b` in place. `scratch` must be at least as long as
/// `values`; only its first `values.len()` slots are used.
pub(crate) fn fwht_gray_solve_in_place(values: &mut [f64], scratch: &mut [f64]) {
    let len = values.len();
    fwht_in_place(values);
    let inv = 1.0 / len as f64;
    let scratch = &mut scratch[..len];
    for (j, slot) in scratch.iter_mut().enumerate() {
        *slot = values[gray_code(j as u32) as usize] * inv;
    }
    values.copy_from_slice(scratch);
}

/// Single-qubit rotation parameters of the decoupled multiplexor, in emission
/// order: `b~_j = FWHT(b)[g_j] / 2^n`. Runs in `O(n 2^n)`.
pub fn fwht_gray_solve(beta: &[f64]) -> Result<Vec<f64>> {
    check_power_of_two(beta.len())?;
    let mut values = beta.to_vec();
    let mut scratch = vec![0.0; beta.len()];
    fwht_gray_solve_in_place(&mut values, &mut scratch);
    Ok(values)
}

/// Solves the rotation-Z binary tree system for `2^n` leaf phases.
///
/// Returns the global angle and the `2^n - 1` tree angles in breadth-first
/// order. Leaf phases are recovered from the output by giving the root the
/// value `-global/2` and adding `-theta/2` on even branches and `+theta/2`
/// on odd branches. Runs in `Theta(2^n)`.
pub fn rz_tree_solve(phases: &[f64]) -> Result<(f64, Vec<f64>)> {
    let n = check_power_of_two(phases.len())?;
    if n == 0 {
        return Err(Error::arg(
            "a single phase is a pure global phase; callers handle it directly",
        ));
    }
    let mut work = phases.to_vec();
    let mut saved = vec![0.0; phases.len()];
    let mut len = phases.len();
    while len >= 2 {
        let half = len / 2;
        saved[..len].copy_from_slice(&work[..len]);
        for j in 0..half {
            work[j] = (saved[2 * j] + saved[2 * j + 1]) / 2.0;
            work[half + j] = -saved[2 * j] + saved[2 * j + 1];
        }
        len = half;
    }
    let global = -saved[0] - saved[1];
    let thetas = work[1..].to_vec();
    Ok((global, thetas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense `M^n = H^{(x)n} P_G` with unnormalized +-1 Hadamard entries.
    fn dense_m(n: u32) -> Vec<Vec<f64>> {
        let len = 1usize << n;
        let mut m = vec![vec![0.0; len]; len];
        for c in 0..len {
            for j in 0..len {
                let dot = (c as u32 & gray_code(j as u32)).count_ones();
                m[c][j] = if dot % 2 == 0 { 1.0 } else { -1.0 };
            }
        }
        m
    }

    fn gauss_solve(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            b.swap(col, pivot);
            let d = m[col][col];
            for row in 0..n {
                if row == col {
                    continue;
                }
                let f = m[row][col] / d;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    m[row][k] -= f * m[col][k];
                }
                b[row] -= f * b[col];
            }
        }
        (0..n).map(|i| b[i] / m[i][i]).collect()
    }

    /// Dense inverse of the rotation-Z tree matrix, built recursively:
    /// `(M^1)^-1 = [[-1,-1],[-1,1]]` and
    /// `(M^t)^-1 = diag((M^{t-1})^-1 / 2, I) * ([[1,1],[-1,1]] (x) I) * P`,
    /// where `P` gathers adjacent leaf pairs (even leaves first). The gather
    /// keeps the recursion consistent with the adjacent-pair additive tree
    /// whose base case is the printed 2x2 inverse.
    fn dense_rz_inverse(t: u32) -> Vec<Vec<f64>> {
        let mut inv = vec![vec![-1.0, -1.0], vec![-1.0, 1.0]];
        for level in 2..=t {
            let half = 1usize << (level - 1);
            let len = 2 * half;
            // right factor times the pair-gathering permutation:
            // row i forms p_{2i} + p_{2i+1}, row half+i forms -p_{2i} + p_{2i+1}
            let mut right = vec![vec![0.0; len]; len];
            for i in 0..half {
                right[i][2 * i] = 1.0;
                right[i][2 * i + 1] = 1.0;
                right[half + i][2 * i] = -1.0;
                right[half + i][2 * i + 1] = 1.0;
            }
            let mut next = vec![vec![0.0; len]; len];
            for r in 0..len {
                for c in 0..len {
                    let mut acc = 0.0;
                    if r < half {
                        for k in 0..half {
                            acc += inv[r][k] / 2.0 * right[k][c];
                        }
                    } else {
                        acc = right[r][c];
                    }
                    next[r][c] = acc;
                }
            }
            inv = next;
        }
        inv
    }

    fn seeded_vec(seed: u64, len: usize) -> Vec<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect()
    }

    #[test]
    fn gray_sequence_one_bit() {
        let seq = gray_sequence(1).unwrap();
        assert_eq!(seq.iter().map(|g| g.bits).collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn gray_sequence_three_bits_is_reflected() {
        let seq = gray_sequence(3).unwrap();
        let bits: Vec<u32> = seq.iter().map(|g| g.bits).collect();
        assert_eq!(bits, vec![0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100]);
    }

    #[test]
    fn gray_sequence_two_bits() {
        let bits: Vec<u32> = gray_sequence(2).unwrap().iter().map(|g| g.bits).collect();
        assert_eq!(bits, (0..4).map(|j| j ^ (j >> 1)).collect::<Vec<u32>>());
    }

    #[test]
    fn gray_width_out_of_range() {
        assert!(gray_sequence(0).is_err());
        assert!(gray_sequence(31).is_err());
        assert!(control_schedule(0).is_err());
    }

    #[test]
    fn gray_neighbors_differ_in_one_bit() {
        for n in 1..=10u32 {
            let seq = gray_sequence(n).unwrap();
            let len = seq.len();
            for j in 0..len {
                let flip = seq[j].bits ^ seq[(j + 1) % len].bits;
                assert_eq!(flip.count_ones(), 1, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn control_schedule_fixtures() {
        assert_eq!(control_schedule(3).unwrap(), vec![3, 2, 3, 1, 3, 2, 3, 1]);
        assert_eq!(control_schedule(1).unwrap(), vec![1, 1]);
        assert_eq!(control_schedule(2).unwrap(), vec![2, 1, 2, 1]);
    }

    #[test]
    fn control_schedule_reflection_structure() {
        // The flip masks XOR to zero (the cycle closes) and for n >= 2 the
        // index nearest the target, n, appears every other slot: 2^{n-1}
        // times in total.
        for n in 1..=8u32 {
            let sched = control_schedule(n).unwrap();
            let mask = sched.iter().fold(0u32, |acc, &s| acc ^ (1 << (n - s)));
            assert_eq!(mask, 0);
            let lsb_count = sched.iter().filter(|&&s| s == n).count();
            let expect = if n == 1 { 2 } else { 1 << (n - 1) };
            assert_eq!(lsb_count, expect);
        }
    }

    #[test]
    fn fwht_solve_one_bit_fixture() {
        let (b0, b1) = (0.7, -1.9);
        let solved = fwht_gray_solve(&[b0, b1]).unwrap();
        assert_eq!(solved, vec![(b0 + b1) / 2.0, (b0 - b1) / 2.0]);
    }

    #[test]
    fn fwht_solve_zero_is_zero() {
        let solved = fwht_gray_solve(&[0.0; 8]).unwrap();
        assert!(solved.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn fwht_solve_rejects_bad_length() {
        assert!(fwht_gray_solve(&[1.0, 2.0, 3.0]).is_err());
        assert!(fwht_gray_solve(&[]).is_err());
    }

    #[test]
    fn fwht_solve_matches_dense_solve() {
        let beta = seeded_vec(11, 8);
        let solved = fwht_gray_solve(&beta).unwrap();
        let dense = gauss_solve(dense_m(3), beta);
        for (a, b) in solved.iter().zip(dense.iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn fwht_round_trip_reproduces_input() {
        for n in 1..=10u32 {
            let beta = seeded_vec(100 + n as u64, 1 << n);
            let solved = fwht_gray_solve(&beta).unwrap();
            let m = dense_m(n);
            for (c, row) in m.iter().enumerate() {
                let back: f64 = row.iter().zip(solved.iter()).map(|(m, s)| m * s).sum();
                assert!((back - beta[c]).abs() < 1e-12, "n={n} c={c}");
            }
        }
    }

    #[test]
    fn rz_solve_one_bit_matches_inverse_matrix() {
        let (p0, p1) = (0.3, 2.1);
        let (global, thetas) = rz_tree_solve(&[p0, p1]).unwrap();
        assert!((global - (-p0 - p1)).abs() < 1e-15);
        assert_eq!(thetas.len(), 1);
        assert!((thetas[0] - (-p0 + p1)).abs() < 1e-15);
    }

    #[test]
    fn rz_solve_zero_phases() {
        let (global, thetas) = rz_tree_solve(&[0.0; 8]).unwrap();
        assert_eq!(global, 0.0);
        assert!(thetas.iter().all(|&t| t == 0.0));
    }

    #[test]
    fn rz_solve_rejects_single_phase() {
        assert!(rz_tree_solve(&[1.0]).is_err());
    }

    #[test]
    fn rz_solve_matches_dense_inverse() {
        let phases = seeded_vec(7, 8);
        let (global, thetas) = rz_tree_solve(&phases).unwrap();
        let inv = dense_rz_inverse(3);
        let expected: Vec<f64> = inv
            .iter()
            .map(|row| row.iter().zip(phases.iter()).map(|(m, p)| m * p).sum())
            .collect();
        assert!((global - expected[0]).abs() < 1e-12);
        for (k, theta) in thetas.iter().enumerate() {
            assert!((theta - expected[k + 1]).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rz_leaves_rebuild_from_tree() {
        for n in 1..=6u32 {
            let phases = seeded_vec(40 + n as u64, 1 << n);
            let (global, thetas) = rz_tree_solve(&phases).unwrap();
            for (k, &phase) in phases.iter().enumerate() {
                let mut value = -global / 2.0;
                let mut node = 0usize; // in-level node index, walked from the root
                for t in 0..n {
                    let branch = (k >> (n - 1 - t)) & 1;
                    let theta = thetas[(1 << t) - 1 + node];
                    value += if branch == 0 { -theta / 2.0 } else { theta / 2.0 };
                    node = node * 2 + branch;
                }
                assert!((value - phase).abs() < 1e-12, "n={n} k={k}");
            }
        }
    }

    proptest! {
        #[test]
        fn prop_fwht_round_trip(seed in 0u64..500, n in 1u32..8) {
            let beta = seeded_vec(seed, 1 << n);
            let solved = fwht_gray_solve(&beta).unwrap();
            // multiply back with M = H P_G without materializing it
            for c in 0..beta.len() {
                let mut acc = 0.0;
                for (j, s) in solved.iter().enumerate() {
                    let dot = (c as u32 & gray_code(j as u32)).count_ones();
                    acc += if dot % 2 == 0 { *s } else { -*s };
                }
                prop_assert!((acc - beta[c]).abs() < 1e-12);
            }
        }

        #[test]
        fn prop_gray_flip_masks_cancel(n in 1u32..12) {
            let sched = control_schedule(n).unwrap();
            let mask = sched.iter().fold(0u32, |acc, &s| acc ^ (1 << (n - s)));
            prop_assert_eq!(mask, 0);
        }
    }
}
