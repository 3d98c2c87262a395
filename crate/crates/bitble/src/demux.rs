//! Decouples a multiplexed rotation whose control bits straddle the target
//! wire into single-qubit rotations plus CNOTs, by either the permutative or
//! the recursive method.
//!
//! Angle vectors are indexed by the joint control value with the upper
//! control bits as the high-order bits and the lower control bits as the
//! low-order bits; within each part the first listed wire is the most
//! significant.

use rayon::prelude::*;

use crate::circuit::Gate;
use crate::numerics::{control_schedule, fwht_gray_solve_in_place, gray_code};
use crate::{Error, Result};

/// Rotation axis of a multiplexor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Y,
    Z,
}

/// Which decoupling scheme to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemuxMethod {
    Permutative,
    Recursive,
}

/// A multiplexed rotation with `2^(k+m)` angles, `k` control wires above the
/// target and `m` below.
#[derive(Debug, Clone)]
pub struct MultiplexorSpec {
    pub axis: Axis,
    pub angles: Vec<f64>,
    pub upper_controls: Vec<usize>,
    pub lower_controls: Vec<usize>,
    pub target: usize,
}

impl MultiplexorSpec {
    fn validate(&self) -> Result<()> {
        let (k, m) = (self.upper_controls.len(), self.lower_controls.len());
        if self.angles.len() != 1usize << (k + m) {
            return Err(Error::arg(format!(
                "multiplexor with {k}+{m} controls needs {} angles, got {}",
                1usize << (k + m),
                self.angles.len()
            )));
        }
        let mut wires: Vec<usize> = self
            .upper_controls
            .iter()
            .chain(self.lower_controls.iter())
            .copied()
            .chain(std::iter::once(self.target))
            .collect();
        wires.sort_unstable();
        wires.dedup();
        if wires.len() != k + m + 1 {
            return Err(Error::arg("multiplexor wires overlap"));
        }
        Ok(())
    }
}

/// One emission slot of a decoupled multiplexor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleItem {
    Rotation(f64),
    Cnot { control: usize },
}

/// Decoupled form of one multiplexor: rotations and CNOT controls in emission
/// order. Consecutive CNOTs mark the idle single-qubit slots of the recursive
/// method.
#[derive(Debug, Clone, PartialEq)]
pub struct DemuxSchedule {
    pub axis: Axis,
    pub target: usize,
    pub items: Vec<ScheduleItem>,
    controls_msb_first: Vec<usize>,
}

impl DemuxSchedule {
    pub fn rotations(&self) -> Vec<f64> {
        self.items
            .iter()
            .filter_map(|item| match item {
                ScheduleItem::Rotation(a) => Some(*a),
                _ => None,
            })
            .collect()
    }

    pub fn cnot_controls(&self) -> Vec<usize> {
        self.items
            .iter()
            .filter_map(|item| match item {
                ScheduleItem::Cnot { control } => Some(*control),
                _ => None,
            })
            .collect()
    }

    /// CNOT controls as 1-based positions in the top-down printed wire order
    /// (uppers first, then lowers).
    pub fn control_indices(&self) -> Vec<u32> {
        self.cnot_controls()
            .iter()
            .map(|w| {
                self.controls_msb_first
                    .iter()
                    .position(|c| c == w)
                    .expect("cnot control is a declared wire") as u32
                    + 1
            })
            .collect()
    }

    /// Gates in emission order.
    pub fn gates(&self) -> Vec<Gate> {
        self.items.iter().map(|item| self.gate_of(item, 1.0)).collect()
    }

    /// Gates of the adjoint: reversed order, negated rotations.
    pub fn gates_dagger(&self) -> Vec<Gate> {
        self.items
            .iter()
            .rev()
            .map(|item| self.gate_of(item, -1.0))
            .collect()
    }

    fn gate_of(&self, item: &ScheduleItem, sign: f64) -> Gate {
        match *item {
            ScheduleItem::Rotation(angle) => match self.axis {
                Axis::Y => Gate::Ry {
                    target: self.target,
                    angle: sign * angle,
                },
                Axis::Z => Gate::Rz {
                    target: self.target,
                    angle: sign * angle,
                },
            },
            ScheduleItem::Cnot { control } => Gate::Cnot {
                control,
                target: self.target,
            },
        }
    }
}

/// Decouples via the joint Gray cycle over all `k + m` control bits:
/// `2^(k+m)` rotations alternating with as many CNOTs.
pub fn permutative_demux(spec: &MultiplexorSpec) -> Result<DemuxSchedule> {
    spec.validate()?;
    let (k, m) = (spec.upper_controls.len(), spec.lower_controls.len());
    let width = (k + m) as u32;
    if width == 0 {
        return Err(Error::arg("permutative demux needs at least one control"));
    }
    let controls_msb_first: Vec<usize> = spec
        .upper_controls
        .iter()
        .chain(spec.lower_controls.iter())
        .copied()
        .collect();
    let mut rotations = spec.angles.clone();
    let mut scratch = vec![0.0; rotations.len()];
    fwht_gray_solve_in_place(&mut rotations, &mut scratch);
    let schedule = control_schedule(width)?;
    let mut items = Vec::with_capacity(2 * rotations.len());
    for (rotation, index) in rotations.iter().zip(schedule.iter()) {
        items.push(ScheduleItem::Rotation(*rotation));
        items.push(ScheduleItem::Cnot {
            control: controls_msb_first[(*index - 1) as usize],
        });
    }
    Ok(DemuxSchedule {
        axis: spec.axis,
        target: spec.target,
        items,
        controls_msb_first,
    })
}

/// Permutes rows so that row `i` of the result is row `perm(i)` of the input,
/// in place with one row-sized temporary.
fn permute_rows(buf: &mut [f64], rows: usize, cols: usize, perm: impl Fn(usize) -> usize) {
    let mut visited = vec![false; rows];
    let mut temp = vec![0.0; cols];
    for start in 0..rows {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        if perm(start) == start {
            continue;
        }
        temp.copy_from_slice(&buf[start * cols..start * cols + cols]);
        let mut i = start;
        loop {
            let j = perm(i);
            if j == start {
                buf[i * cols..i * cols + cols].copy_from_slice(&temp);
                break;
            }
            buf.copy_within(j * cols..j * cols + cols, i * cols);
            visited[j] = true;
            i = j;
        }
    }
}

/// First recursion over the upper bits, second over the lower bits: per upper
/// Gray step, the full lower schedule runs and one upper-controlled CNOT
/// follows, leaving an idle single-qubit slot every `2^m` rotations.
pub fn recursive_demux(spec: &MultiplexorSpec) -> Result<DemuxSchedule> {
    spec.validate()?;
    let (k, m) = (spec.upper_controls.len(), spec.lower_controls.len());
    if k == 0 {
        return Err(Error::arg("recursive demux needs an upper control"));
    }
    let (rows, cols) = (1usize << k, 1usize << m);
    let mut buf = spec.angles.clone();

    // first recursion: solve along the upper axis, blockwise over row slices
    let mut h = 1;
    while h < rows {
        for block in 0..rows / (2 * h) {
            for r in 0..h {
                let r0 = (block * 2 * h + r) * cols;
                let r1 = (block * 2 * h + h + r) * cols;
                for c in 0..cols {
                    let (x, y) = (buf[r0 + c], buf[r1 + c]);
                    buf[r0 + c] = x + y;
                    buf[r1 + c] = x - y;
                }
            }
        }
        h *= 2;
    }
    let scale = 1.0 / rows as f64;
    buf.iter_mut().for_each(|x| *x *= scale);
    permute_rows(&mut buf, rows, cols, |i| gray_code(i as u32) as usize);

    // second recursion: the 2^k row solves are independent
    if m > 0 {
        buf.par_chunks_mut(cols).for_each_init(
            || vec![0.0; cols],
            |scratch, row| fwht_gray_solve_in_place(row, scratch),
        );
    }

    let upper_schedule = control_schedule(k as u32)?;
    let lower_schedule = if m > 0 {
        control_schedule(m as u32)?
    } else {
        Vec::new()
    };
    let mut items = Vec::with_capacity(2 * rows * cols + rows);
    for (i, row) in buf.chunks(cols).enumerate() {
        for (j, rotation) in row.iter().enumerate() {
            items.push(ScheduleItem::Rotation(*rotation));
            if m > 0 {
                items.push(ScheduleItem::Cnot {
                    control: spec.lower_controls[(lower_schedule[j] - 1) as usize],
                });
            }
        }
        items.push(ScheduleItem::Cnot {
            control: spec.upper_controls[(upper_schedule[i] - 1) as usize],
        });
    }
    Ok(DemuxSchedule {
        axis: spec.axis,
        target: spec.target,
        items,
        controls_msb_first: spec
            .upper_controls
            .iter()
            .chain(spec.lower_controls.iter())
            .copied()
            .collect(),
    })
}

/// Decouples one multiplexor and appends its gates to `circuit`.
///
/// `angles` are emission values (sign convention already applied by the
/// caller). A single-angle multiplexor is a bare rotation. Multiplexors with
/// no upper controls always take the permutative route; otherwise `method`
/// picks the scheme. With `dagger` the adjoint is emitted: reversed order,
/// negated rotations.
pub fn emit_multiplexor(
    circuit: &mut crate::circuit::Circuit,
    axis: Axis,
    angles: Vec<f64>,
    upper_controls: Vec<usize>,
    lower_controls: Vec<usize>,
    target: usize,
    method: DemuxMethod,
    dagger: bool,
) -> Result<()> {
    if angles.len() == 1 {
        let angle = if dagger { -angles[0] } else { angles[0] };
        circuit.push(match axis {
            Axis::Y => Gate::Ry { target, angle },
            Axis::Z => Gate::Rz { target, angle },
        });
        return Ok(());
    }
    let spec = MultiplexorSpec {
        axis,
        angles,
        upper_controls,
        lower_controls,
        target,
    };
    let schedule = if spec.upper_controls.is_empty() || method == DemuxMethod::Permutative {
        permutative_demux(&spec)?
    } else {
        recursive_demux(&spec)?
    };
    let gates = if dagger {
        schedule.gates_dagger()
    } else {
        schedule.gates()
    };
    for gate in gates {
        circuit.push(gate);
    }
    Ok(())
}
