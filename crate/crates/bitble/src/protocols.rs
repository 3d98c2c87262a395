//! Full block-encoding synthesis: the three binary tree protocols and the
//! `fable` baseline.
//!
//! Register layout (wire 0 first): the preparation ancillas, then for the
//! `mu_p` protocol two extra single-qubit wires, then the n-qubit system
//! register. The system register controls every preparation multiplexor from
//! below, which is what makes the split-control demultiplexors pay off.
//!
//! | protocol  | factor      | decoupling  | ancilla |
//! |-----------|-------------|-------------|---------|
//! | `bitble1` | Frobenius   | recursive   | n       |
//! | `bitble2` | Frobenius   | permutative | n       |
//! | `bitble3` | `mu_p`      | recursive   | n + 2   |
//! | `fable`   | `2^n max|A|`| permutative | n + 1   |

use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::circuit::{compress, Circuit, Gate};
use crate::demux::{emit_multiplexor, Axis, DemuxMethod};
use crate::matrix::ComplexMatrix;
use crate::state_prep::ry_tree_angles;
use crate::numerics::rz_tree_solve;
use crate::{Error, Result};

/// Which encoding to synthesize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Bitble1,
    Bitble2,
    Bitble3,
    Fable,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::Bitble1 => "bitble1",
            Protocol::Bitble2 => "bitble2",
            Protocol::Bitble3 => "bitble3",
            Protocol::Fable => "fable",
        }
    }

    pub const ALL: [Protocol; 4] = [
        Protocol::Bitble1,
        Protocol::Bitble2,
        Protocol::Bitble3,
        Protocol::Fable,
    ];
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bitble1" => Ok(Protocol::Bitble1),
            "bitble2" => Ok(Protocol::Bitble2),
            "bitble3" => Ok(Protocol::Bitble3),
            "fable" => Ok(Protocol::Fable),
            other => Err(Error::arg(format!(
                "unknown protocol '{other}' (expected bitble1|bitble2|bitble3|fable)"
            ))),
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Tracks live bytes of the angle pipeline's buffers.
#[derive(Default)]
struct MemoryMeter {
    live: AtomicU64,
    peak: AtomicU64,
}

impl MemoryMeter {
    fn grab(&self, bytes: u64) {
        let live = self.live.fetch_add(bytes, Ordering::Relaxed) + bytes;
        self.peak.fetch_max(live, Ordering::Relaxed);
    }

    fn release(&self, bytes: u64) {
        self.live.fetch_sub(bytes, Ordering::Relaxed);
    }

    fn peak(&self) -> u64 {
        self.peak.load(Ordering::Relaxed)
    }
}

const F64_BYTES: u64 = 8;

/// All rotation parameters of one protocol run, laid out per multiplexor:
/// level `t` holds `2^(n+t)` angles indexed `(node << n) | column`.
#[derive(Debug, Clone)]
pub struct ProtocolAngles {
    pub n: u32,
    pub is_complex: bool,
    pub ry_mux: Vec<Vec<f64>>,
    pub rz_mux: Option<Vec<Vec<f64>>>,
    /// Per-column global phase angles, the very first multiplexed rotation.
    pub global_rz: Option<Vec<f64>>,
    /// Column-norm tree in breadth-first order (Frobenius protocols).
    pub norm_tree: Option<Vec<f64>>,
    /// Row-side multiplexor vectors (`mu_p` protocol).
    pub row_mux: Option<Vec<Vec<f64>>>,
    /// Doubled chi rotations on the two extra wires (`mu_p` protocol).
    pub chi_col: Option<Vec<f64>>,
    pub chi_row: Option<Vec<f64>>,
    /// Peak bytes held by angle buffers while computing.
    pub peak_bytes: u64,
}

/// Frobenius norm; rejects the all-zero matrix (its factor would vanish).
pub fn frobenius(a: &ComplexMatrix) -> Result<f64> {
    if a.is_zero() {
        return Err(Error::arg("zero matrix has no block-encoding factor"));
    }
    Ok(a.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}

fn column_power_sums(a: &ComplexMatrix, q: f64) -> Vec<f64> {
    let (rows, cols) = (a.rows(), a.cols());
    (0..cols)
        .map(|j| (0..rows).map(|k| a[(k, j)].norm().powf(q)).sum())
        .collect()
}

fn row_power_sums(a: &ComplexMatrix, q: f64) -> Vec<f64> {
    (0..a.rows())
        .map(|k| a.row(k).iter().map(|z| z.norm().powf(q)).sum())
        .collect()
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(0.0, f64::max)
}

/// `sqrt(S_2p(A^T) * S_2(1-p)(A))` where `S_q` is the largest q-norm of any
/// row raised to the q-th power.
pub fn mu_p(a: &ComplexMatrix, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("p must lie in [0, 1], got {p}")));
    }
    if a.is_zero() {
        return Err(Error::arg("zero matrix has no block-encoding factor"));
    }
    let s_cols = max_of(&column_power_sums(a, 2.0 * p));
    let s_rows = max_of(&row_power_sums(a, 2.0 * (1.0 - p)));
    Ok((s_cols * s_rows).sqrt())
}

fn is_complex_input(a: &ComplexMatrix) -> bool {
    a.data().iter().any(|z| z.im != 0.0 || z.re < 0.0)
}

struct ColumnTrees {
    y: Vec<f64>,
    z: Option<Vec<f64>>,
    global: f64,
    root: f64,
}

/// Per-column magnitude/phase trees over `weight(|a|)`, in parallel.
fn column_trees(
    a: &ComplexMatrix,
    with_phases: bool,
    weight: impl Fn(f64) -> f64 + Sync,
    meter: &MemoryMeter,
) -> Result<Vec<ColumnTrees>> {
    let n = a.qubits()?;
    let size = 1usize << n;
    let per_column = (2 * size) as u64 * F64_BYTES * if with_phases { 2 } else { 1 };
    meter.grab(per_column * size as u64);
    (0..size)
        .into_par_iter()
        .map(|j| {
            let magnitudes: Vec<f64> = (0..size).map(|k| weight(a[(k, j)].norm())).collect();
            let tree = ry_tree_angles(&magnitudes)?;
            let (global, z) = if with_phases {
                let phases: Vec<f64> = (0..size).map(|k| a[(k, j)].arg()).collect();
                let (global, thetas) = rz_tree_solve(&phases)?;
                (global, Some(thetas))
            } else {
                (0.0, None)
            };
            Ok(ColumnTrees {
                y: tree.angles,
                z,
                global,
                root: tree.root,
            })
        })
        .collect()
}

/// Re-lays per-column trees as multiplexor vectors: level `t`, node `o`,
/// column `j` lands at index `(o << n) | j`.
fn trees_to_mux(trees: &[ColumnTrees], n: u32, meter: &MemoryMeter) -> Vec<Vec<f64>> {
    let size = 1usize << n;
    let mut mux = Vec::with_capacity(n as usize);
    for t in 0..n as usize {
        meter.grab(((size << t) as u64) * F64_BYTES);
        let mut level = vec![0.0; size << t];
        for (j, tree) in trees.iter().enumerate() {
            for node in 0..1usize << t {
                level[(node << n) | j] = tree.y[(1 << t) - 1 + node];
            }
        }
        mux.push(level);
    }
    mux
}

fn z_trees_to_mux(trees: &[ColumnTrees], n: u32, meter: &MemoryMeter) -> Vec<Vec<f64>> {
    let size = 1usize << n;
    let mut mux = Vec::with_capacity(n as usize);
    for t in 0..n as usize {
        meter.grab(((size << t) as u64) * F64_BYTES);
        let mut level = vec![0.0; size << t];
        for (j, tree) in trees.iter().enumerate() {
            let z = tree.z.as_ref().expect("phase trees present");
            for node in 0..1usize << t {
                level[(node << n) | j] = z[(1 << t) - 1 + node];
            }
        }
        mux.push(level);
    }
    mux
}

fn release_trees(trees: Vec<ColumnTrees>, with_phases: bool, n: u32, meter: &MemoryMeter) {
    let size = 1u64 << n;
    let per_column = 2 * size * F64_BYTES * if with_phases { 2 } else { 1 };
    meter.release(per_column * size);
    drop(trees);
}

/// Angle computation for the Frobenius-normalized protocols: per-column
/// magnitude trees, phase trees when any entry has a nonzero phase, and the
/// column-norm tree. `O(n 4^n)` time.
pub fn bitble_angles(a: &ComplexMatrix) -> Result<ProtocolAngles> {
    let n = a.qubits()?;
    if a.is_zero() {
        return Err(Error::arg("zero matrix has no block-encoding"));
    }
    let meter = MemoryMeter::default();
    let is_complex = is_complex_input(a);
    let trees = column_trees(a, is_complex, |m| m, &meter)?;
    let ry_mux = trees_to_mux(&trees, n, &meter);
    let rz_mux = is_complex.then(|| z_trees_to_mux(&trees, n, &meter));
    let global_rz = is_complex.then(|| trees.iter().map(|t| t.global).collect());
    let col_norms: Vec<f64> = trees.iter().map(|t| t.root).collect();
    release_trees(trees, is_complex, n, &meter);
    let norm_tree = ry_tree_angles(&col_norms)?.angles;
    Ok(ProtocolAngles {
        n,
        is_complex,
        ry_mux,
        rz_mux,
        global_rz,
        norm_tree: Some(norm_tree),
        row_mux: None,
        chi_col: None,
        chi_row: None,
        peak_bytes: meter.peak(),
    })
}

/// Angle computation for the `mu_p` protocol: column trees over `|a|^p`,
/// row trees over `|a|^(1-p)`, and the chi rotations that rescale each
/// column/row to the dominating norm.
pub fn bitble3_angles(a: &ComplexMatrix, p: f64) -> Result<ProtocolAngles> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("p must lie in [0, 1], got {p}")));
    }
    let n = a.qubits()?;
    if a.is_zero() {
        return Err(Error::arg("zero matrix has no block-encoding"));
    }
    let meter = MemoryMeter::default();
    let is_complex = is_complex_input(a);

    let col_trees = column_trees(a, is_complex, |m| m.powf(p), &meter)?;
    let ry_mux = trees_to_mux(&col_trees, n, &meter);
    let rz_mux = is_complex.then(|| z_trees_to_mux(&col_trees, n, &meter));
    let global_rz = is_complex.then(|| col_trees.iter().map(|t| t.global).collect());
    release_trees(col_trees, is_complex, n, &meter);

    // row trees: magnitude trees of each row state, no phases
    let size = 1usize << n;
    meter.grab((2 * size * size) as u64 * F64_BYTES);
    let row_trees: Vec<ColumnTrees> = (0..size)
        .into_par_iter()
        .map(|k| {
            let magnitudes: Vec<f64> =
                a.row(k).iter().map(|z| z.norm().powf(1.0 - p)).collect();
            let tree = ry_tree_angles(&magnitudes)?;
            Ok(ColumnTrees {
                y: tree.angles,
                z: None,
                global: 0.0,
                root: tree.root,
            })
        })
        .collect::<Result<_>>()?;
    // the row-side mux layout is indexed (node << n) | row
    let row_mux = trees_to_mux(&row_trees, n, &meter);
    meter.release((2 * size * size) as u64 * F64_BYTES);
    drop(row_trees);

    let s_cols = column_power_sums(a, 2.0 * p);
    let s_rows = row_power_sums(a, 2.0 * (1.0 - p));
    let (max_col, max_row) = (max_of(&s_cols), max_of(&s_rows));
    let chi = |sums: &[f64], max: f64| -> Vec<f64> {
        sums.iter()
            .map(|&s| 2.0 * (s / max).sqrt().min(1.0).acos())
            .collect()
    };
    Ok(ProtocolAngles {
        n,
        is_complex,
        ry_mux,
        rz_mux,
        global_rz,
        norm_tree: None,
        row_mux: Some(row_mux),
        chi_col: Some(chi(&s_cols, max_col)),
        chi_row: Some(chi(&s_rows, max_row)),
        peak_bytes: meter.peak(),
    })
}

/// Synthesis bookkeeping reported alongside the circuit.
#[derive(Debug, Clone, Copy, Default)]
pub struct SynthStats {
    /// Wall-clock over angle computation, decoupling and compression.
    pub synth_ms: f64,
    /// Peak bytes of the angle buffers.
    pub angle_peak_bytes: u64,
}

/// A synthesized block-encoding.
#[derive(Debug, Clone)]
pub struct EncodingResult {
    pub circuit: Circuit,
    pub alpha: f64,
    pub ancilla: usize,
    pub verified_error: Option<f64>,
    pub stats: SynthStats,
}

fn negated(mut v: Vec<f64>) -> Vec<f64> {
    v.iter_mut().for_each(|x| *x = -*x);
    v
}

fn tree_level(tree: &[f64], t: usize) -> Vec<f64> {
    tree[(1 << t) - 1..(2 << t) - 1].to_vec()
}

fn synth_bitble(a: &ComplexMatrix, method: DemuxMethod) -> Result<(Circuit, f64, u64)> {
    let alpha = frobenius(a)?;
    let mut angles = bitble_angles(a)?;
    let n = angles.n as usize;
    let system: Vec<usize> = (n..2 * n).collect();
    let mut circuit = Circuit::new(2 * n);
    circuit.metadata.alpha = Some(alpha);
    circuit.metadata.ancilla = Some(n);

    if let Some(global) = angles.global_rz.take() {
        emit_multiplexor(
            &mut circuit,
            Axis::Z,
            negated(global),
            Vec::new(),
            system.clone(),
            0,
            method,
            false,
        )?;
    }
    for t in 0..n {
        emit_multiplexor(
            &mut circuit,
            Axis::Y,
            negated(std::mem::take(&mut angles.ry_mux[t])),
            (0..t).collect(),
            system.clone(),
            t,
            method,
            false,
        )?;
    }
    if let Some(rz) = angles.rz_mux.take() {
        for (t, level) in rz.into_iter().enumerate() {
            emit_multiplexor(
                &mut circuit,
                Axis::Z,
                negated(level),
                (0..t).collect(),
                system.clone(),
                t,
                method,
                false,
            )?;
        }
    }
    for i in 0..n {
        circuit.push(Gate::Swap { a: i, b: n + i });
    }
    let norm_tree = angles.norm_tree.take().expect("frobenius norm tree");
    for t in (0..n).rev() {
        emit_multiplexor(
            &mut circuit,
            Axis::Y,
            negated(tree_level(&norm_tree, t)),
            (0..t).collect(),
            Vec::new(),
            t,
            method,
            true,
        )?;
    }
    Ok((circuit, alpha, angles.peak_bytes))
}

fn synth_bitble3(a: &ComplexMatrix, p: f64) -> Result<(Circuit, f64, u64)> {
    let method = DemuxMethod::Recursive;
    let alpha = mu_p(a, p)?;
    let mut angles = bitble3_angles(a, p)?;
    let n = angles.n as usize;
    let (e1, e2) = (n, n + 1);
    let system: Vec<usize> = (n + 2..2 * n + 2).collect();
    let mut circuit = Circuit::new(2 * n + 2);
    circuit.metadata.alpha = Some(alpha);
    circuit.metadata.ancilla = Some(n + 2);

    if let Some(global) = angles.global_rz.take() {
        emit_multiplexor(
            &mut circuit,
            Axis::Z,
            negated(global),
            Vec::new(),
            system.clone(),
            0,
            method,
            false,
        )?;
    }
    for t in 0..n {
        emit_multiplexor(
            &mut circuit,
            Axis::Y,
            negated(std::mem::take(&mut angles.ry_mux[t])),
            (0..t).collect(),
            system.clone(),
            t,
            method,
            false,
        )?;
    }
    if let Some(rz) = angles.rz_mux.take() {
        for (t, level) in rz.into_iter().enumerate() {
            emit_multiplexor(
                &mut circuit,
                Axis::Z,
                negated(level),
                (0..t).collect(),
                system.clone(),
                t,
                method,
                false,
            )?;
        }
    }
    emit_multiplexor(
        &mut circuit,
        Axis::Y,
        negated(angles.chi_col.take().expect("column chi angles")),
        Vec::new(),
        system.clone(),
        e1,
        method,
        false,
    )?;
    for i in 0..n {
        circuit.push(Gate::Swap { a: i, b: n + 2 + i });
    }
    emit_multiplexor(
        &mut circuit,
        Axis::Y,
        negated(angles.chi_row.take().expect("row chi angles")),
        Vec::new(),
        system.clone(),
        e2,
        method,
        true,
    )?;
    let row_mux = angles.row_mux.take().expect("row trees");
    for (t, level) in row_mux.into_iter().enumerate().rev() {
        emit_multiplexor(
            &mut circuit,
            Axis::Y,
            negated(level),
            (0..t).collect(),
            system.clone(),
            t,
            method,
            true,
        )?;
    }
    Ok((circuit, alpha, angles.peak_bytes))
}

fn synth_fable(a: &ComplexMatrix) -> Result<(Circuit, f64, u64)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    let n = a.qubits()? as usize;
    let max_abs = a.max_abs();
    if max_abs == 0.0 {
        return Err(Error::arg("zero matrix has no block-encoding"));
    }
    let alpha = (1u64 << n) as f64 * max_abs;
    let is_complex = is_complex_input(a);
    let size = 1usize << n;
    let meter = MemoryMeter::default();

    let mut circuit = Circuit::new(2 * n + 1);
    circuit.metadata.alpha = Some(alpha);
    circuit.metadata.ancilla = Some(n + 1);
    let row_register: Vec<usize> = (1..n + 1).collect();
    let controls: Vec<usize> = (1..2 * n + 1).collect();

    // H up to phase: RY(pi/2) then RZ(pi) contributes exp(-i pi/2) each
    let hadamard_layer = |circuit: &mut Circuit| {
        for &w in &row_register {
            circuit.push(Gate::Ry { target: w, angle: FRAC_PI_2 });
            circuit.push(Gate::Rz { target: w, angle: PI });
            circuit.global_phase -= FRAC_PI_2;
        }
    };

    hadamard_layer(&mut circuit);
    meter.grab((size * size) as u64 * F64_BYTES);
    let ry_angles: Vec<f64> = (0..size * size)
        .map(|idx| {
            let (i, j) = (idx >> n, idx & (size - 1));
            -2.0 * (a[(i, j)].norm() / max_abs).min(1.0).acos()
        })
        .collect();
    emit_multiplexor(
        &mut circuit,
        Axis::Y,
        ry_angles,
        Vec::new(),
        controls.clone(),
        0,
        DemuxMethod::Permutative,
        false,
    )?;
    meter.release((size * size) as u64 * F64_BYTES);
    if is_complex {
        meter.grab((size * size) as u64 * F64_BYTES);
        let rz_angles: Vec<f64> = (0..size * size)
            .map(|idx| {
                let (i, j) = (idx >> n, idx & (size - 1));
                2.0 * a[(i, j)].arg()
            })
            .collect();
        emit_multiplexor(
            &mut circuit,
            Axis::Z,
            rz_angles,
            Vec::new(),
            controls,
            0,
            DemuxMethod::Permutative,
            false,
        )?;
        meter.release((size * size) as u64 * F64_BYTES);
    }
    for i in 0..n {
        circuit.push(Gate::Swap { a: 1 + i, b: n + 1 + i });
    }
    hadamard_layer(&mut circuit);
    Ok((circuit, alpha, meter.peak()))
}

/// Synthesizes a block-encoding of `a`. `p` is only used by the `mu_p`
/// protocol; `cutoff` `Some(delta)` compresses the circuit, `None` keeps
/// every emitted slot.
pub fn synthesize(
    a: &ComplexMatrix,
    protocol: Protocol,
    p: f64,
    cutoff: Option<f64>,
) -> Result<EncodingResult> {
    if let Some(delta) = cutoff {
        if delta < 0.0 || !delta.is_finite() {
            return Err(Error::arg(format!("cutoff must be >= 0, got {delta}")));
        }
    }
    let start = Instant::now();
    let (mut circuit, alpha, angle_peak_bytes) = match protocol {
        Protocol::Bitble1 => synth_bitble(a, DemuxMethod::Recursive)?,
        Protocol::Bitble2 => synth_bitble(a, DemuxMethod::Permutative)?,
        Protocol::Bitble3 => synth_bitble3(a, p)?,
        Protocol::Fable => synth_fable(a)?,
    };
    circuit.metadata.protocol = Some(protocol.name().into());
    if let Some(delta) = cutoff {
        circuit = compress(&circuit, delta)?;
    }
    let synth_ms = start.elapsed().as_secs_f64() * 1e3;
    let ancilla = circuit.metadata.ancilla.expect("ancilla recorded");
    Ok(EncodingResult {
        circuit,
        alpha,
        ancilla,
        verified_error: None,
        stats: SynthStats {
            synth_ms,
            angle_peak_bytes,
        },
    })
}

/// Outcome of synthesizing `A` and `cA` side by side.
#[derive(Debug, Clone, Copy)]
pub struct ScaleInvarianceReport {
    pub structurally_equal: bool,
    pub max_angle_diff: f64,
    pub alpha_ratio: f64,
}

/// Checks that scaling the input only rescales the normalization factor:
/// the gate sequences must coincide (angles to floating-point slack) and the
/// factor must scale by exactly `c`.
pub fn scale_invariance_check(
    a: &ComplexMatrix,
    c: f64,
    protocol: Protocol,
    p: f64,
) -> Result<ScaleInvarianceReport> {
    if c <= 0.0 || !c.is_finite() {
        return Err(Error::arg(format!("scale must be positive, got {c}")));
    }
    let base = synthesize(a, protocol, p, None)?;
    let scaled = synthesize(&a.scale(c), protocol, p, None)?;
    let mut structurally_equal =
        base.circuit.gates.len() == scaled.circuit.gates.len();
    let mut max_angle_diff: f64 = 0.0;
    if structurally_equal {
        for (g1, g2) in base.circuit.gates.iter().zip(scaled.circuit.gates.iter()) {
            match (g1, g2) {
                (Gate::Ry { target: t1, angle: a1 }, Gate::Ry { target: t2, angle: a2 })
                | (Gate::Rz { target: t1, angle: a1 }, Gate::Rz { target: t2, angle: a2 })
                    if t1 == t2 =>
                {
                    max_angle_diff = max_angle_diff.max((a1 - a2).abs());
                }
                (Gate::Cnot { control: c1, target: t1 }, Gate::Cnot { control: c2, target: t2 })
                    if c1 == c2 && t1 == t2 => {}
                (Gate::Swap { a: a1, b: b1 }, Gate::Swap { a: a2, b: b2 })
                    if a1 == a2 && b1 == b2 => {}
                _ => {
                    structurally_equal = false;
                    break;
                }
            }
        }
    }
    Ok(ScaleInvarianceReport {
        structurally_equal,
        max_angle_diff,
        alpha_ratio: scaled.alpha / base.alpha,
    })
}
