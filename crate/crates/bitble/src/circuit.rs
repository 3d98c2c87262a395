//! Gate-list intermediate representation, threshold compression, gate
//! counting, the size metric, and OpenQASM 2.0 text export/import.
//!
//! Rotation gates follow the convention `R^theta = exp(i theta sigma / 2)`:
//!
//! - `RY^theta = [[cos(theta/2), sin(theta/2)], [-sin(theta/2), cos(theta/2)]]`
//! - `RZ^theta = diag(exp(i theta/2), exp(-i theta/2))`
//!
//! fixed once here and honored by the simulator and all emitters.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::{Error, Result};

/// One gate of the emitted program. Wires are absolute qubit indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
    Swap { a: usize, b: usize },
}

impl Gate {
    pub fn wires(&self) -> [usize; 2] {
        match *self {
            Gate::Ry { target, .. } | Gate::Rz { target, .. } => [target, target],
            Gate::Cnot { control, target } => [control, target],
            Gate::Swap { a, b } => [a, b],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }
}

/// Per-kind gate counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    pub ry: usize,
    pub rz: usize,
    pub cnot: usize,
    pub swap: usize,
}

impl GateCounts {
    pub fn total(&self) -> usize {
        self.ry + self.rz + self.cnot + self.swap
    }

    pub fn rotations(&self) -> usize {
        self.ry + self.rz
    }
}

/// Protocol bookkeeping attached to a circuit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CircuitMeta {
    pub protocol: Option<String>,
    pub alpha: Option<f64>,
    pub ancilla: Option<usize>,
    pub cutoff: Option<f64>,
}

/// An ordered gate program over `num_qubits` wires plus a tracked global
/// phase (radians; the program's unitary is `exp(i global_phase)` times the
/// gate product).
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    pub num_qubits: usize,
    pub gates: Vec<Gate>,
    pub global_phase: f64,
    pub metadata: CircuitMeta,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            global_phase: 0.0,
            metadata: CircuitMeta::default(),
        }
    }

    pub fn push(&mut self, gate: Gate) {
        debug_assert!(gate.wires().iter().all(|&w| w < self.num_qubits));
        self.gates.push(gate);
    }

    pub fn counts(&self) -> GateCounts {
        count_gates(self)
    }
}

/// Exact per-kind multiset count.
pub fn count_gates(circuit: &Circuit) -> GateCounts {
    let mut counts = GateCounts::default();
    for gate in &circuit.gates {
        match gate {
            Gate::Ry { .. } => counts.ry += 1,
            Gate::Rz { .. } => counts.rz += 1,
            Gate::Cnot { .. } => counts.cnot += 1,
            Gate::Swap { .. } => counts.swap += 1,
        }
    }
    counts
}

/// Per-kind count scaled by the circuit's normalization factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeMetric {
    pub ry: f64,
    pub rz: f64,
    pub cnot: f64,
    pub swap: f64,
}

/// Size metric: gate count times normalization factor, per gate kind.
pub fn size_metric(circuit: &Circuit) -> Result<SizeMetric> {
    let alpha = circuit
        .metadata
        .alpha
        .ok_or_else(|| Error::InvalidState("size metric needs metadata.alpha".into()))?;
    let counts = count_gates(circuit);
    Ok(SizeMetric {
        ry: counts.ry as f64 * alpha,
        rz: counts.rz as f64 * alpha,
        cnot: counts.cnot as f64 * alpha,
        swap: counts.swap as f64 * alpha,
    })
}

// Two CNOTs commute unless the control of one is the target of the other.
fn cnots_commute(a: (usize, usize), b: (usize, usize)) -> bool {
    a == b || (a.0 != b.1 && a.1 != b.0)
}

/// Removes rotations with `|angle| <= cutoff`, then cancels CNOTs by parity
/// inside runs that are not interrupted on either involved wire. Idempotent;
/// at cutoff 0 the simulated unitary is unchanged.
pub fn compress(circuit: &Circuit, cutoff: f64) -> Result<Circuit> {
    if cutoff < 0.0 || !cutoff.is_finite() {
        return Err(Error::arg(format!("cutoff must be >= 0, got {cutoff}")));
    }
    let mut out = Circuit::new(circuit.num_qubits);
    out.global_phase = circuit.global_phase;
    out.metadata = circuit.metadata.clone();
    out.metadata.cutoff = Some(cutoff);

    // Pending CNOTs of the current run, in first-seen order with parities.
    // Only pairwise-commuting CNOTs are merged, so parity reduction is sound.
    let mut pending: Vec<((usize, usize), usize)> = Vec::new();

    fn flush(pending: &mut Vec<((usize, usize), usize)>, out: &mut Circuit) {
        for &((control, target), parity) in pending.iter() {
            if parity % 2 == 1 {
                out.gates.push(Gate::Cnot { control, target });
            }
        }
        pending.clear();
    }

    for gate in &circuit.gates {
        match *gate {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } if angle.abs() <= cutoff => {}
            Gate::Cnot { control, target } => {
                let pair = (control, target);
                if pending.iter().all(|&(p, _)| cnots_commute(pair, p)) {
                    match pending.iter_mut().find(|(p, _)| *p == pair) {
                        Some((_, parity)) => *parity += 1,
                        None => pending.push((pair, 1)),
                    }
                } else {
                    flush(&mut pending, &mut out);
                    pending.push((pair, 1));
                }
            }
            g => {
                let [w1, w2] = g.wires();
                let touches = pending
                    .iter()
                    .any(|&((c, t), _)| c == w1 || c == w2 || t == w1 || t == w2);
                if touches {
                    flush(&mut pending, &mut out);
                }
                // a gate on untouched wires commutes with the whole run and
                // may be emitted ahead of it
                out.gates.push(g);
            }
        }
    }
    flush(&mut pending, &mut out);
    Ok(out)
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip form; keeps exports byte-stable
    format!("{x}")
}

/// Emits an OpenQASM 2.0 compatible listing. Byte-stable for equal circuits.
pub fn export_text(circuit: &Circuit) -> String {
    let mut header = Vec::new();
    if let Some(p) = &circuit.metadata.protocol {
        header.push(format!("protocol={p}"));
    }
    if let Some(a) = circuit.metadata.alpha {
        header.push(format!("alpha={}", fmt_f64(a)));
    }
    if let Some(a) = circuit.metadata.ancilla {
        header.push(format!("ancilla={a}"));
    }
    header.push(format!("global_phase={}", fmt_f64(circuit.global_phase)));
    if let Some(c) = circuit.metadata.cutoff {
        header.push(format!("cutoff={}", fmt_f64(c)));
    }
    let mut text = String::new();
    let _ = writeln!(text, "// {}", header.join(", "));
    text.push_str("OPENQASM 2.0;\n");
    text.push_str("include \"qelib1.inc\";\n");
    let _ = writeln!(text, "qreg q[{}];", circuit.num_qubits);
    for gate in &circuit.gates {
        match *gate {
            Gate::Ry { target, angle } => {
                let _ = writeln!(text, "ry({}) q[{}];", fmt_f64(angle), target);
            }
            Gate::Rz { target, angle } => {
                let _ = writeln!(text, "rz({}) q[{}];", fmt_f64(angle), target);
            }
            Gate::Cnot { control, target } => {
                let _ = writeln!(text, "cx q[{control}], q[{target}];");
            }
            Gate::Swap { a, b } => {
                let _ = writeln!(text, "swap q[{a}], q[{b}];");
            }
        }
    }
    text
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_qubit(token: &str, line: usize) -> Result<usize> {
    let token = token.trim().trim_end_matches(';').trim();
    let inner = token
        .strip_prefix("q[")
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, format!("expected q[i], got '{token}'")))?;
    inner
        .parse()
        .map_err(|_| parse_err(line, format!("bad qubit index '{inner}'")))
}

/// Parses the subset of OpenQASM 2.0 produced by [`export_text`].
pub fn parse_text(text: &str) -> Result<Circuit> {
    let mut circuit = Circuit::new(0);
    let mut seen_qreg = false;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix("//") {
            let mut fields = HashMap::new();
            for part in comment.split(',') {
                if let Some((k, v)) = part.split_once('=') {
                    fields.insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            let take_f64 = |fields: &HashMap<String, String>, key: &str| -> Result<Option<f64>> {
                fields
                    .get(key)
                    .map(|v| {
                        v.parse::<f64>()
                            .map_err(|_| parse_err(lineno, format!("bad {key} '{v}'")))
                    })
                    .transpose()
            };
            circuit.metadata.protocol = fields.get("protocol").cloned();
            if let Some(a) = take_f64(&fields, "alpha")? {
                circuit.metadata.alpha = Some(a);
            }
            if let Some(a) = fields.get("ancilla") {
                circuit.metadata.ancilla = Some(
                    a.parse()
                        .map_err(|_| parse_err(lineno, format!("bad ancilla '{a}'")))?,
                );
            }
            if let Some(g) = take_f64(&fields, "global_phase")? {
                circuit.global_phase = g;
            }
            if let Some(c) = take_f64(&fields, "cutoff")? {
                circuit.metadata.cutoff = Some(c);
            }
            continue;
        }
        if line.starts_with("OPENQASM") || line.starts_with("include") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("qreg") {
            let n = rest
                .trim()
                .strip_prefix("q[")
                .and_then(|s| s.strip_suffix("];"))
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| parse_err(lineno, "malformed qreg declaration"))?;
            circuit.num_qubits = n;
            seen_qreg = true;
            continue;
        }
        if !seen_qreg {
            return Err(parse_err(lineno, "gate before qreg declaration"));
        }
        if let Some(rest) = line.strip_prefix("ry(").or_else(|| line.strip_prefix("rz(")) {
            let (angle_str, qubit_str) = rest
                .split_once(')')
                .ok_or_else(|| parse_err(lineno, "missing ')'"))?;
            let angle: f64 = angle_str
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad angle '{angle_str}'")))?;
            let target = parse_qubit(qubit_str, lineno)?;
            if line.starts_with("ry") {
                circuit.push(Gate::Ry { target, angle });
            } else {
                circuit.push(Gate::Rz { target, angle });
            }
        } else if let Some(rest) = line.strip_prefix("cx ") {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| parse_err(lineno, "cx needs two qubits"))?;
            circuit.push(Gate::Cnot {
                control: parse_qubit(a, lineno)?,
                target: parse_qubit(b, lineno)?,
            });
        } else if let Some(rest) = line.strip_prefix("swap ") {
            let (a, b) = rest
                .split_once(',')
                .ok_or_else(|| parse_err(lineno, "swap needs two qubits"))?;
            circuit.push(Gate::Swap {
                a: parse_qubit(a, lineno)?,
                b: parse_qubit(b, lineno)?,
            });
        } else {
            return Err(parse_err(lineno, format!("unrecognized statement '{line}'")));
        }
    }
    if !seen_qreg {
        return Err(parse_err(1, "missing qreg declaration"));
    }
    Ok(circuit)
}
