//! Dense verification oracle: statevector propagation, full unitary
//! construction and the block-encoding error measurement.
//!
//! Wire 0 is the most significant bit of a basis index, so a register drawn
//! first occupies the high bits and the `<0|...|0>` ancilla block of a
//! synthesized circuit is the literal top-left block of its unitary.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, Gate};
use crate::matrix::ComplexMatrix;
use crate::{Error, Result};

const UNITARY_QUBIT_CAP: usize = 14;
const STATE_QUBIT_CAP: usize = 24;

/// Full unitary of a circuit.
#[derive(Debug, Clone)]
pub struct DenseUnitary {
    pub matrix: ComplexMatrix,
    pub qubits: usize,
}

impl DenseUnitary {
    /// Largest entry of `U U^dag - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let dim = self.matrix.rows();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..dim {
                    acc += self.matrix[(r, k)] * self.matrix[(c, k)].conj();
                }
                let expect = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }
}

#[inline]
fn bit_of(num_qubits: usize, wire: usize) -> usize {
    num_qubits - 1 - wire
}

fn ry_coeffs(angle: f64) -> (f64, f64) {
    ((angle / 2.0).cos(), (angle / 2.0).sin())
}

fn rz_coeffs(angle: f64) -> (Complex64, Complex64) {
    (
        Complex64::from_polar(1.0, angle / 2.0),
        Complex64::from_polar(1.0, -angle / 2.0),
    )
}

/// Applies the circuit to a state vector in place, `O(2^q)` per gate.
pub fn apply_to_state(circuit: &Circuit, state: &mut [Complex64]) -> Result<()> {
    let q = circuit.num_qubits;
    if q > STATE_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "statevector path caps at {STATE_QUBIT_CAP} qubits, circuit has {q}"
        )));
    }
    if state.len() != 1 << q {
        return Err(Error::arg(format!(
            "state length {} does not match {} qubits",
            state.len(),
            q
        )));
    }
    let dim = 1usize << q;
    for gate in &circuit.gates {
        match *gate {
            Gate::Ry { target, angle } => {
                let mask = 1usize << bit_of(q, target);
                let (c, s) = ry_coeffs(angle);
                for i in 0..dim {
                    if i & mask == 0 {
                        let j = i | mask;
                        let (a0, a1) = (state[i], state[j]);
                        state[i] = c * a0 + s * a1;
                        state[j] = -s * a0 + c * a1;
                    }
                }
            }
            Gate::Rz { target, angle } => {
                let mask = 1usize << bit_of(q, target);
                let (e0, e1) = rz_coeffs(angle);
                for (i, amp) in state.iter_mut().enumerate() {
                    *amp *= if i & mask == 0 { e0 } else { e1 };
                }
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << bit_of(q, control);
                let tmask = 1usize << bit_of(q, target);
                for i in 0..dim {
                    if i & cmask != 0 && i & tmask == 0 {
                        state.swap(i, i | tmask);
                    }
                }
            }
            Gate::Swap { a, b } => {
                let amask = 1usize << bit_of(q, a);
                let bmask = 1usize << bit_of(q, b);
                for i in 0..dim {
                    if i & amask != 0 && i & bmask == 0 {
                        state.swap((i ^ amask) | bmask, i);
                    }
                }
            }
        }
    }
    let phase = Complex64::from_polar(1.0, circuit.global_phase);
    for amp in state.iter_mut() {
        *amp *= phase;
    }
    Ok(())
}

/// Propagates a row-major bundle of column vectors through the circuit.
/// `data` holds 2^q rows of `cols` entries each.
fn apply_to_columns(circuit: &Circuit, data: &mut [Complex64], cols: usize) {
    let q = circuit.num_qubits;
    let dim = 1usize << q;
    debug_assert_eq!(data.len(), dim * cols);
    let swap_rows = |data: &mut [Complex64], r0: usize, r1: usize| {
        for k in 0..cols {
            data.swap(r0 * cols + k, r1 * cols + k);
        }
    };
    for gate in &circuit.gates {
        match *gate {
            Gate::Ry { target, angle } => {
                let mask = 1usize << bit_of(q, target);
                let (c, s) = ry_coeffs(angle);
                for r in 0..dim {
                    if r & mask == 0 {
                        let (head, tail) = data.split_at_mut((r | mask) * cols);
                        let row0 = &mut head[r * cols..r * cols + cols];
                        let row1 = &mut tail[..cols];
                        for (a0, a1) in row0.iter_mut().zip(row1.iter_mut()) {
                            let (x, y) = (*a0, *a1);
                            *a0 = c * x + s * y;
                            *a1 = -s * x + c * y;
                        }
                    }
                }
            }
            Gate::Rz { target, angle } => {
                let mask = 1usize << bit_of(q, target);
                let (e0, e1) = rz_coeffs(angle);
                for r in 0..dim {
                    let e = if r & mask == 0 { e0 } else { e1 };
                    for amp in &mut data[r * cols..(r + 1) * cols] {
                        *amp *= e;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let cmask = 1usize << bit_of(q, control);
                let tmask = 1usize << bit_of(q, target);
                for r in 0..dim {
                    if r & cmask != 0 && r & tmask == 0 {
                        swap_rows(data, r, r | tmask);
                    }
                }
            }
            Gate::Swap { a, b } => {
                let amask = 1usize << bit_of(q, a);
                let bmask = 1usize << bit_of(q, b);
                for r in 0..dim {
                    if r & amask != 0 && r & bmask == 0 {
                        swap_rows(data, r, (r ^ amask) | bmask);
                    }
                }
            }
        }
    }
    let phase = Complex64::from_polar(1.0, circuit.global_phase);
    for amp in data.iter_mut() {
        *amp *= phase;
    }
}

/// Builds the full `2^q x 2^q` unitary by propagating every basis column.
pub fn circuit_to_unitary(circuit: &Circuit) -> Result<DenseUnitary> {
    let q = circuit.num_qubits;
    if q > UNITARY_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "dense unitary path caps at {UNITARY_QUBIT_CAP} qubits, circuit has {q}"
        )));
    }
    let dim = 1usize << q;
    let mut matrix = ComplexMatrix::identity(dim);
    apply_to_columns(circuit, matrix.data_mut(), dim);
    Ok(DenseUnitary { matrix, qubits: q })
}

/// Spectral norm (largest singular value) by power iteration on `B^dag B`.
pub fn spectral_norm(b: &ComplexMatrix) -> f64 {
    let (rows, cols) = (b.rows(), b.cols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..cols)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = |x: &[Complex64]| x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n0 = norm(&v);
    if n0 == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|z| *z /= n0);
    let mut w = vec![Complex64::new(0.0, 0.0); rows];
    let mut sigma = 0.0f64;
    for _ in 0..1500 {
        for (r, slot) in w.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in 0..cols {
                acc += b[(r, c)] * v[c];
            }
            *slot = acc;
        }
        let new_sigma = norm(&w);
        if new_sigma == 0.0 {
            return 0.0;
        }
        for (c, slot) in v.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                acc += b[(r, c)].conj() * w[r];
            }
            *slot = acc;
        }
        let vn = norm(&v);
        v.iter_mut().for_each(|z| *z /= vn);
        if (new_sigma - sigma).abs() <= 1e-14 * new_sigma.max(1e-300) {
            return new_sigma;
        }
        sigma = new_sigma;
    }
    sigma
}

/// Block-encoding error of Definition `(alpha, a, eps)`: the spectral norm of
/// `A - alpha * (<0|^a (x) I) U (|0>^a (x) I)`.
pub fn verify_block(
    circuit: &Circuit,
    a: &ComplexMatrix,
    alpha: f64,
    ancilla: usize,
) -> Result<f64> {
    let n = a.qubits()?;
    if circuit.num_qubits != ancilla + n as usize {
        return Err(Error::arg(format!(
            "circuit has {} qubits, expected ancilla {} + system {}",
            circuit.num_qubits, ancilla, n
        )));
    }
    if circuit.num_qubits > UNITARY_QUBIT_CAP {
        return Err(Error::ResourceLimit(format!(
            "verification caps at {UNITARY_QUBIT_CAP} qubits, circuit has {}",
            circuit.num_qubits
        )));
    }
    let dim = 1usize << circuit.num_qubits;
    let block_dim = 1usize << n;
    // propagate the 2^n ancilla-zero basis columns together
    let mut data = vec![Complex64::new(0.0, 0.0); dim * block_dim];
    for j in 0..block_dim {
        data[j * block_dim + j] = Complex64::new(1.0, 0.0);
    }
    apply_to_columns(circuit, &mut data, block_dim);
    // top 2^n rows are the <0|^a components; form A - alpha * block
    let mut diff = ComplexMatrix::zeros(block_dim, block_dim);
    for k in 0..block_dim {
        for j in 0..block_dim {
            diff[(k, j)] = a[(k, j)] - alpha * data[k * block_dim + j];
        }
    }
    Ok(spectral_norm(&diff))
}
