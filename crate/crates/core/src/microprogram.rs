//! NOR-only netlists for catalog operations, laid out bit-serially over the
//! columns of one array row.
//!
//! Bit `i` of an operand lives in column `base + i` (little-endian). Adders
//! ripple a carry through two scratch columns used alternately, so every
//! gate's destination differs from its sources.

use std::ops::Range;

use crate::catalog::{OpKind, OpSpec};
use crate::error::{invalid, Error, Result};
use crate::sim::{NorInstr, NorProgram, Operand};

/// Where each operand of a generated program lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnAssignment {
    pub a: usize,
    pub b: usize,
    pub carry_in: usize,
    pub out: usize,
    pub scratch: usize,
}

impl ColumnAssignment {
    /// Operands back to back from column 0: `a`, `b`, `carry_in`, `out`,
    /// then scratch.
    pub fn packed(spec: &OpSpec) -> Self {
        let n = spec.width_bits as usize;
        let out = 2 * n + 1;
        Self {
            a: 0,
            b: n,
            carry_in: 2 * n,
            out,
            scratch: out + output_width(spec),
        }
    }

    /// One past the highest column this assignment touches for `spec`.
    pub fn columns_needed(&self, spec: &OpSpec) -> usize {
        self.ranges(spec)
            .into_iter()
            .map(|(_, r)| r.end)
            .max()
            .unwrap_or(0)
    }

    fn ranges(&self, spec: &OpSpec) -> Vec<(&'static str, Range<usize>)> {
        let n = spec.width_bits as usize;
        let mut v = vec![("a", self.a..self.a + n)];
        if uses_b(spec.kind) {
            v.push(("b", self.b..self.b + n));
        }
        if uses_carry_in(spec.kind) {
            v.push(("carry_in", self.carry_in..self.carry_in + 1));
        }
        v.push(("out", self.out..self.out + output_width(spec)));
        let scratch = scratch_width(spec);
        if scratch > 0 {
            v.push(("scratch", self.scratch..self.scratch + scratch));
        }
        v
    }
}

fn uses_b(kind: OpKind) -> bool {
    !matches!(kind, OpKind::Not)
}

fn uses_carry_in(kind: OpKind) -> bool {
    matches!(kind, OpKind::Add | OpKind::AddFanin4)
}

/// Columns of the result: adders append a carry-out bit, multiply doubles.
pub fn output_width(spec: &OpSpec) -> usize {
    let n = spec.width_bits as usize;
    match spec.kind {
        OpKind::Add | OpKind::AddFanin4 => n + 1,
        OpKind::Mpy => 2 * n,
        _ => n,
    }
}

pub fn scratch_width(spec: &OpSpec) -> usize {
    let n = spec.width_bits as usize;
    match spec.kind {
        OpKind::Not => 0,
        OpKind::Or => 1,
        OpKind::And => 2,
        OpKind::Xor => 4,
        OpKind::Add => NOR2_FA_TEMPS + 2,
        OpKind::AddFanin4 => NOR4_FA_TEMPS + 2,
        // inverted multiplicand, zero, inverted multiplier bit, partial
        // product bit, adder temporaries and carries
        OpKind::Mpy => n + 3 + NOR2_FA_TEMPS + 2,
        OpKind::MpyLowPrec | OpKind::Custom(_) => 0,
    }
}

/// NOR fan-in the generated program for `kind` relies on.
pub fn required_fanin(kind: OpKind) -> usize {
    match kind {
        OpKind::Not => 1,
        OpKind::AddFanin4 => 3,
        _ => 2,
    }
}

/// Builds the NOR program computing `spec` in every row of an array with
/// `cols` columns.
pub fn microprogram_of(spec: &OpSpec, layout: &ColumnAssignment, cols: usize) -> Result<NorProgram> {
    if matches!(spec.kind, OpKind::MpyLowPrec | OpKind::Custom(_)) {
        return Err(Error::Unsupported(spec.kind.name().to_string()));
    }
    let ranges = layout.ranges(spec);
    let needed = layout.columns_needed(spec);
    if needed > cols {
        return Err(Error::ColumnOverflow {
            needed,
            available: cols,
        });
    }
    for (i, (na, ra)) in ranges.iter().enumerate() {
        for (nb, rb) in &ranges[i + 1..] {
            if ra.start < rb.end && rb.start < ra.end {
                return Err(invalid(
                    "layout",
                    format!("{na} ({ra:?}) overlaps {nb} ({rb:?})"),
                ));
            }
        }
    }

    let n = spec.width_bits as usize;
    let mut g = Gen::default();
    match spec.kind {
        OpKind::Not => {
            for i in 0..n {
                g.nor(layout.out + i, &[layout.a + i]);
            }
        }
        OpKind::Or => {
            let t = layout.scratch;
            for i in 0..n {
                g.nor(t, &[layout.a + i, layout.b + i]);
                g.nor(layout.out + i, &[t]);
            }
        }
        OpKind::And => {
            let (na, nb) = (layout.scratch, layout.scratch + 1);
            for i in 0..n {
                g.nor(na, &[layout.a + i]);
                g.nor(nb, &[layout.b + i]);
                g.nor(layout.out + i, &[na, nb]);
            }
        }
        OpKind::Xor => {
            let t = layout.scratch;
            for i in 0..n {
                let (a, b) = (layout.a + i, layout.b + i);
                g.nor(t, &[a, b]);
                g.nor(t + 1, &[a, t]);
                g.nor(t + 2, &[b, t]);
                g.nor(t + 3, &[t + 1, t + 2]);
                g.nor(layout.out + i, &[t + 3]);
            }
        }
        OpKind::Add | OpKind::AddFanin4 => {
            let (temps, carries) = match spec.kind {
                OpKind::Add => (layout.scratch, layout.scratch + NOR2_FA_TEMPS),
                _ => (layout.scratch, layout.scratch + NOR4_FA_TEMPS),
            };
            let mut carry = layout.carry_in;
            for i in 0..n {
                let cout = if i + 1 == n { layout.out + n } else { carries + i % 2 };
                let bit = FullAdderCols {
                    a: layout.a + i,
                    b: layout.b + i,
                    c: carry,
                    sum: layout.out + i,
                    cout,
                    temps,
                };
                match spec.kind {
                    OpKind::Add => g.full_adder_nor2(&bit),
                    _ => g.full_adder_nor4(&bit),
                }
                carry = cout;
            }
        }
        OpKind::Mpy => g.multiply(layout, n),
        OpKind::MpyLowPrec | OpKind::Custom(_) => unreachable!(),
    }

    let mut program = NorProgram::new(g.instrs);
    for (name, cols) in ranges {
        let op = Operand::new(name, cols);
        match name {
            "out" => program.outputs.push(op),
            "scratch" => {}
            _ => program.inputs.push(op),
        }
    }
    Ok(program)
}

const NOR2_FA_TEMPS: usize = 7;
const NOR4_FA_TEMPS: usize = 6;

struct FullAdderCols {
    a: usize,
    b: usize,
    c: usize,
    sum: usize,
    cout: usize,
    temps: usize,
}

#[derive(Default)]
struct Gen {
    instrs: Vec<NorInstr>,
}

impl Gen {
    fn nor(&mut self, dest: usize, srcs: &[usize]) {
        self.instrs.push(NorInstr::nor(dest, srcs.to_vec()));
    }

    /// Nine two-input NORs: XNOR(a, b), XNOR of that with the carry gives
    /// the sum, and the carry-out reuses the first and fifth gates.
    fn full_adder_nor2(&mut self, f: &FullAdderCols) {
        let t = |k: usize| f.temps + k;
        self.nor(t(0), &[f.a, f.b]);
        self.nor(t(1), &[f.a, t(0)]);
        self.nor(t(2), &[f.b, t(0)]);
        self.nor(t(3), &[t(1), t(2)]);
        self.nor(t(4), &[t(3), f.c]);
        self.nor(t(5), &[t(3), t(4)]);
        self.nor(t(6), &[f.c, t(4)]);
        self.nor(f.sum, &[t(5), t(6)]);
        self.nor(f.cout, &[t(0), t(4)]);
    }

    /// Eight NORs of fan-in at most three.
    fn full_adder_nor4(&mut self, f: &FullAdderCols) {
        let t = |k: usize| f.temps + k;
        let nbc = t(0);
        self.nor(nbc, &[f.b, f.c]);
        self.nor(t(1), &[f.a, f.b, nbc]);
        self.nor(t(2), &[f.a, f.c, nbc]);
        self.nor(t(3), &[f.c, nbc, t(2)]);
        self.nor(f.cout, &[nbc, t(1), t(2)]);
        self.nor(t(4), &[f.b, nbc, t(1)]);
        self.nor(t(5), &[f.a, t(1), t(2)]);
        self.nor(f.sum, &[t(3), t(4), t(5)]);
    }

    /// Shift-and-add: row `i` of partial products is ANDed in one bit at a
    /// time and rippled into `out[i..i + n + 1]`.
    fn multiply(&mut self, layout: &ColumnAssignment, n: usize) {
        let s = layout.scratch;
        let na = |j: usize| s + j;
        let zero = s + n;
        let nb = s + n + 1;
        let pp = s + n + 2;
        let temps = s + n + 3;
        let carries = temps + NOR2_FA_TEMPS;
        let out = layout.out;

        for j in 0..n {
            self.nor(na(j), &[layout.a + j]);
        }
        self.nor(zero, &[layout.a, na(0)]);

        self.nor(nb, &[layout.b]);
        for j in 0..n {
            self.nor(out + j, &[na(j), nb]);
        }
        self.nor(out + n, &[layout.a, na(0)]);

        for i in 1..n {
            self.nor(nb, &[layout.b + i]);
            let mut carry = zero;
            for j in 0..n {
                self.nor(pp, &[na(j), nb]);
                let cout = if j + 1 == n { out + i + n } else { carries + j % 2 };
                self.full_adder_nor2(&FullAdderCols {
                    a: out + i + j,
                    b: pp,
                    c: carry,
                    sum: out + i + j,
                    cout,
                    temps,
                });
                carry = cout;
            }
        }
    }
}
