//! Rotation-Y and rotation-Z binary tree angles for an arbitrary complex
//! state, and the multiplexor state-preparation circuit built from them.
//!
//! The magnitude tree is multiplicative: a node holds the Euclidean norm of
//! its subtree and its angle splits that weight over the two children,
//! `left = node * cos(angle/2)`, `right = node * sin(angle/2)`. The phase
//! tree is additive with the root carrying `-global/2` and each edge
//! contributing `-theta/2` (even branch) or `+theta/2` (odd branch).
//!
//! Under the `exp(+i theta sigma/2)` gate convention the emitted gate angles
//! are the negated tree angles; the statevector oracle pins this down.

use num_complex::Complex64;

use crate::circuit::Circuit;
use crate::demux::{emit_multiplexor, Axis, DemuxMethod};
use crate::numerics::rz_tree_solve;
use crate::{Error, Result};

/// A normalized complex amplitude vector of power-of-two length.
#[derive(Debug, Clone)]
pub struct TargetState {
    amplitudes: Vec<Complex64>,
}

impl TargetState {
    /// Normalizes on ingestion; rejects zero vectors, non-power-of-two
    /// lengths and non-finite entries.
    pub fn new(mut amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() || !amplitudes.len().is_power_of_two() {
            return Err(Error::arg(format!(
                "state length must be a power of two, got {}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::arg("state has non-finite amplitudes"));
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::arg("cannot normalize the zero state"));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(TargetState { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn qubits(&self) -> u32 {
        self.amplitudes.len().trailing_zeros()
    }
}

/// Half-angle split of a nonnegative pair: `phi` with
/// `cos(phi/2) = left/r`, `sin(phi/2) = right/r`; zero when both vanish.
pub fn pair_angle(left: f64, right: f64) -> Result<f64> {
    if left < 0.0 || right < 0.0 {
        return Err(Error::arg(format!(
            "pair_angle needs nonnegative inputs, got ({left}, {right})"
        )));
    }
    if left == 0.0 && right == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * right.atan2(left))
}

/// Output of the bottom-up magnitude sweep.
#[derive(Debug, Clone)]
pub struct RyTree {
    /// Breadth-first angles, node `(t, k)` at index `2^t - 1 + k`.
    pub angles: Vec<f64>,
    /// Root value: the Euclidean norm of the input.
    pub root: f64,
    /// Tree nodes computed; one per parent.
    pub ops: u64,
}

/// Bottom-up rotation-Y tree over `2^n` nonnegative magnitudes, `Theta(2^n)`.
pub fn ry_tree_angles(magnitudes: &[f64]) -> Result<RyTree> {
    let len = magnitudes.len();
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::arg(format!(
            "magnitude vector length must be a power of two, got {len}"
        )));
    }
    if magnitudes.iter().any(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::arg("magnitudes must be finite and nonnegative"));
    }
    let mut angles = vec![0.0; len - 1];
    let mut level = magnitudes.to_vec();
    let mut ops = 0u64;
    let mut width = len / 2;
    while width >= 1 {
        for k in 0..width {
            let (left, right) = (level[2 * k], level[2 * k + 1]);
            angles[width - 1 + k] = pair_angle(left, right)?;
            level[k] = left.hypot(right);
            ops += 1;
        }
        width /= 2;
    }
    Ok(RyTree {
        angles,
        root: level[0],
        ops,
    })
}

/// Rotation-Z tree angles for `2^n` leaf phases: `(global, thetas)` in
/// breadth-first order.
pub fn rz_phase_tree(phases: &[f64]) -> Result<(f64, Vec<f64>)> {
    rz_tree_solve(phases)
}

/// All rotation parameters of one state preparation.
#[derive(Debug, Clone)]
pub struct StatePrepAngles {
    pub y_angles: Vec<f64>,
    pub z_angles: Option<Vec<f64>>,
    pub global_phase_angle: f64,
    pub is_real: bool,
    pub ops: u64,
}

/// Computes the magnitude tree, and the phase tree unless every amplitude is
/// real and nonnegative.
pub fn state_prep_angles(state: &TargetState) -> Result<StatePrepAngles> {
    let amps = state.amplitudes();
    let len = amps.len();
    let is_real = amps.iter().all(|a| a.im == 0.0 && a.re >= 0.0);
    let mut ops = len as u64; // magnitude extraction
    let magnitudes: Vec<f64> = amps.iter().map(|a| a.norm()).collect();
    let tree = ry_tree_angles(&magnitudes)?;
    ops += tree.ops;
    let (global, z_angles) = if is_real || len == 1 {
        (0.0, None)
    } else {
        let phases: Vec<f64> = amps.iter().map(|a| a.arg()).collect();
        ops += len as u64; // phase extraction
        let (global, thetas) = rz_tree_solve(&phases)?;
        ops += (len - 1) as u64; // one combine per tree node
        (global, Some(thetas))
    };
    Ok(StatePrepAngles {
        y_angles: tree.angles,
        z_angles,
        global_phase_angle: global,
        is_real,
        ops,
    })
}

/// Builds the state-preparation circuit: the rotation-Y multiplexor cascade
/// followed by the rotation-Z multiplexors for complex inputs. The state's
/// global phase is tracked as circuit metadata, not as a gate. `cutoff`
/// `Some(delta)` compresses the result; `None` keeps every emitted slot.
pub fn state_prep_circuit(
    state: &TargetState,
    method: DemuxMethod,
    cutoff: Option<f64>,
) -> Result<Circuit> {
    if let Some(delta) = cutoff {
        if delta < 0.0 || !delta.is_finite() {
            return Err(Error::arg(format!("cutoff must be >= 0, got {delta}")));
        }
    }
    let n = state.qubits() as usize;
    let angles = state_prep_angles(state)?;
    let mut circuit = Circuit::new(n.max(1));
    circuit.metadata.protocol = Some("stateprep".into());
    circuit.global_phase = -angles.global_phase_angle / 2.0;

    let level_slice = |tree: &[f64], t: usize| -> Vec<f64> {
        tree[(1 << t) - 1..(2 << t) - 1].iter().map(|a| -a).collect()
    };
    for t in 0..n {
        emit_multiplexor(
            &mut circuit,
            Axis::Y,
            level_slice(&angles.y_angles, t),
            (0..t).collect(),
            Vec::new(),
            t,
            method,
            false,
        )?;
    }
    if let Some(z) = &angles.z_angles {
        for t in 0..n {
            emit_multiplexor(
                &mut circuit,
                Axis::Z,
                level_slice(z, t),
                (0..t).collect(),
                Vec::new(),
                t,
                method,
                false,
            )?;
        }
    }
    match cutoff {
        Some(delta) => crate::circuit::compress(&circuit, delta),
        None => Ok(circuit),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::count_gates;
    use crate::simulate::apply_to_state;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn random_state(seed: u64, n: u32, complex: bool) -> TargetState {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| {
                let re = rng.gen_range(-1.0..1.0);
                let im = if complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
                Complex64::new(re, im)
            })
            .collect();
        TargetState::new(amps).unwrap()
    }

    fn prepared_state(circuit: &Circuit) -> Vec<Complex64> {
        let mut state = vec![Complex64::new(0.0, 0.0); 1 << circuit.num_qubits];
        state[0] = Complex64::new(1.0, 0.0);
        apply_to_state(circuit, &mut state).unwrap();
        state
    }

    fn l2_error(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn pair_angle_fixtures() {
        assert_eq!(pair_angle(1.0, 0.0).unwrap(), 0.0);
        assert_eq!(pair_angle(0.0, 1.0).unwrap(), PI);
        assert!((pair_angle(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap() - PI / 2.0).abs() < 1e-15);
        assert_eq!(pair_angle(0.0, 0.0).unwrap(), 0.0);
        assert!(pair_angle(-0.1, 1.0).is_err());
    }

    #[test]
    fn ry_tree_point_mass() {
        let tree = ry_tree_angles(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(tree.angles.iter().all(|&a| a == 0.0));
        assert!((tree.root - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_tree_uniform_four() {
        let tree = ry_tree_angles(&[0.5; 4]).unwrap();
        assert_eq!(tree.angles.len(), 3);
        for a in &tree.angles {
            assert!((a - PI / 2.0).abs() < 1e-15);
        }
        assert!((tree.root - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_tree_single_pair() {
        let tree = ry_tree_angles(&[0.0, 1.0]).unwrap();
        assert_eq!(tree.angles, vec![PI]);
        assert!((tree.root - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ry_tree_zero_vector() {
        let tree = ry_tree_angles(&[0.0; 8]).unwrap();
        assert!(tree.angles.iter().all(|&a| a == 0.0));
        assert_eq!(tree.root, 0.0);
    }

    #[test]
    fn ry_tree_leaf_reconstruction() {
        let mags: Vec<f64> = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
            (0..16).map(|_| rng.gen_range(0.0..2.0)).collect()
        };
        let tree = ry_tree_angles(&mags).unwrap();
        // walk down from the root, multiplying edge weights
        let n = 4;
        for (k, &mag) in mags.iter().enumerate() {
            let mut value = tree.root;
            let mut node = 0usize;
            for t in 0..n {
                let branch = (k >> (n - 1 - t)) & 1;
                let angle = tree.angles[(1 << t) - 1 + node];
                value *= if branch == 0 {
                    (angle / 2.0).cos()
                } else {
                    (angle / 2.0).sin()
                };
                node = node * 2 + branch;
            }
            assert!((value - mag).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn rz_phase_tree_fixture() {
        let (global, thetas) = rz_phase_tree(&[0.0, PI]).unwrap();
        assert!((global + PI).abs() < 1e-15);
        assert!((thetas[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn rz_phase_tree_leaf_reconstruction() {
        let phases: Vec<f64> = {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
            (0..4).map(|_| rng.gen_range(-PI..PI)).collect()
        };
        let (global, thetas) = rz_phase_tree(&phases).unwrap();
        for (k, &phase) in phases.iter().enumerate() {
            let mut value = -global / 2.0;
            let mut node = 0usize;
            for t in 0..2 {
                let branch = (k >> (1 - t)) & 1;
                let theta = thetas[(1 << t) - 1 + node];
                value += if branch == 0 { -theta / 2.0 } else { theta / 2.0 };
                node = node * 2 + branch;
            }
            assert!((value - phase).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_state_compresses_to_nothing() {
        let state = TargetState::new(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])
        .unwrap();
        let circuit =
            state_prep_circuit(&state, DemuxMethod::Permutative, Some(0.0)).unwrap();
        assert!(circuit.gates.is_empty());
    }

    #[test]
    fn uniform_state_layout_and_action() {
        let state = TargetState::new(vec![Complex64::new(0.5, 0.0); 4]).unwrap();
        let circuit = state_prep_circuit(&state, DemuxMethod::Permutative, None).unwrap();
        let counts = count_gates(&circuit);
        assert_eq!(counts.ry, 3);
        assert_eq!(counts.rz, 0);
        assert_eq!(counts.cnot, 2);
        for gate in &circuit.gates {
            if let Some(angle) = gate.angle() {
                assert!(angle == 0.0 || (angle.abs() - PI / 2.0).abs() < 1e-15);
            }
        }
        let out = prepared_state(&circuit);
        assert!(l2_error(&out, state.amplitudes()) < 1e-12);
    }

    #[test]
    fn random_complex_states_prepare_exactly() {
        for n in 1..=4u32 {
            for seed in 0..4u64 {
                let state = random_state(100 * n as u64 + seed, n, true);
                for method in [DemuxMethod::Permutative, DemuxMethod::Recursive] {
                    let circuit = state_prep_circuit(&state, method, Some(0.0)).unwrap();
                    let out = prepared_state(&circuit);
                    assert!(
                        l2_error(&out, state.amplitudes()) < 1e-10,
                        "n={n} seed={seed}"
                    );
                }
            }
        }
    }

    #[test]
    fn real_nonnegative_state_skips_phase_tree() {
        let state = TargetState::new(vec![
            Complex64::new(0.2, 0.0),
            Complex64::new(0.9, 0.0),
            Complex64::new(0.1, 0.0),
            Complex64::new(0.4, 0.0),
        ])
        .unwrap();
        let angles = state_prep_angles(&state).unwrap();
        assert!(angles.is_real);
        assert!(angles.z_angles.is_none());
        let circuit = state_prep_circuit(&state, DemuxMethod::Recursive, Some(0.0)).unwrap();
        assert_eq!(count_gates(&circuit).rz, 0);
        let out = prepared_state(&circuit);
        assert!(l2_error(&out, state.amplitudes()) < 1e-12);
    }

    #[test]
    fn real_state_with_signs_uses_phase_tree() {
        let state = TargetState::new(vec![
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(-0.5, 0.0),
        ])
        .unwrap();
        let angles = state_prep_angles(&state).unwrap();
        assert!(!angles.is_real);
        let circuit = state_prep_circuit(&state, DemuxMethod::Permutative, Some(0.0)).unwrap();
        let out = prepared_state(&circuit);
        assert!(l2_error(&out, state.amplitudes()) < 1e-12);
    }

    #[test]
    fn operation_counter_is_linear() {
        for n in 1..=10u32 {
            let state = random_state(7 + n as u64, n, true);
            let angles = state_prep_angles(&state).unwrap();
            assert!(angles.ops <= 8 * (1u64 << n), "n={n} ops={}", angles.ops);
        }
    }

    #[test]
    fn negative_cutoff_rejected() {
        let state = random_state(1, 2, false);
        assert!(state_prep_circuit(&state, DemuxMethod::Permutative, Some(-1.0)).is_err());
    }

    #[test]
    fn zero_state_rejected() {
        assert!(TargetState::new(vec![Complex64::new(0.0, 0.0); 4]).is_err());
        assert!(TargetState::new(vec![Complex64::new(1.0, 0.0); 3]).is_err());
    }
}
