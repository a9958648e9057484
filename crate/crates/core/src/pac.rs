//! Placement and alignment complexity: cycles spent moving operands into
//! position before a row-parallel operation can run.
//!
//! Horizontal moves shift one bit column per cycle for every row at once;
//! each group of elements needing a distinct shift pays `n` of them.
//! Vertical moves fix elements sitting in the wrong row and go one element
//! per cycle, so a relocation touching every row pays `ROW` of them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::PimMachine;
use crate::sim::{NorInstr, NorProgram, Operand};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSpec {
    pub element_width_bits: u32,
    /// Element groups that each need their own horizontal shift.
    #[serde(default)]
    pub misaligned_subsets: u32,
    /// Elements sit one row away from their partners.
    #[serde(default)]
    pub needs_vertical_relocation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hmove_override: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vmove_override: Option<u64>,
}

impl LayoutSpec {
    /// Perfectly aligned data of the given width.
    pub fn aligned(element_width_bits: u32) -> Self {
        Self {
            element_width_bits,
            misaligned_subsets: 0,
            needs_vertical_relocation: false,
            hmove_override: None,
            vmove_override: None,
        }
    }

    pub fn new(element_width_bits: u32, misaligned_subsets: u32, needs_vertical_relocation: bool) -> Result<Self> {
        let layout = Self {
            element_width_bits,
            misaligned_subsets,
            needs_vertical_relocation,
            hmove_override: None,
            vmove_override: None,
        };
        layout.validate()?;
        Ok(layout)
    }

    /// Prices the layout with explicit move counts instead of the formula.
    pub fn with_overrides(mut self, hmove: u64, vmove: u64) -> Self {
        self.hmove_override = Some(hmove);
        self.vmove_override = Some(vmove);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.element_width_bits == 0 {
            return Err(invalid("element_width_bits", "must be at least 1"));
        }
        if self.hmove_override.is_some() != self.vmove_override.is_some() {
            return Err(invalid(
                "layout",
                "hmove_override and vmove_override must be given together",
            ));
        }
        Ok(())
    }

    pub fn overrides(&self) -> Option<(u64, u64)> {
        self.hmove_override.zip(self.vmove_override)
    }

    pub fn hmoves(&self) -> u64 {
        match self.overrides() {
            Some((h, _)) => h,
            None => self.misaligned_subsets as u64 * self.element_width_bits as u64,
        }
    }

    pub fn vmoves(&self, rows: u64) -> u64 {
        match self.overrides() {
            Some((_, v)) => v,
            None if self.needs_vertical_relocation => rows,
            None => 0,
        }
    }
}

/// PAC cycles for `layout` on `pim`'s arrays.
pub fn pac_of(layout: &LayoutSpec, pim: &PimMachine) -> u64 {
    layout.hmoves() + layout.vmoves(pim.rows())
}

/// Column placement of the data a relocation program moves.
///
/// Subset `j` of the destination rows (band `j` of `k` near-equal
/// contiguous bands) finds its element at columns
/// `source_cols[j]..source_cols[j] + n`. With vertical relocation the
/// element for row `i` starts out in row `i + 1`, and the last row's comes
/// from row 0 of the next array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub target_col: usize,
    pub source_cols: Vec<usize>,
}

impl Placement {
    /// Target at column 0 followed by one `n`-wide source slot per subset.
    pub fn packed(layout: &LayoutSpec) -> Self {
        let n = layout.element_width_bits as usize;
        Self {
            target_col: 0,
            source_cols: (1..=layout.misaligned_subsets as usize).map(|j| j * n).collect(),
        }
    }

    pub fn columns_needed(&self, layout: &LayoutSpec) -> usize {
        let n = layout.element_width_bits as usize;
        self.source_cols
            .iter()
            .chain([&self.target_col])
            .map(|c| c + n)
            .max()
            .unwrap_or(n)
    }
}

/// Destination rows served by subset `j` of `k`.
pub fn subset_rows(j: usize, k: usize, rows: usize) -> (usize, usize) {
    (j * rows / k, (j + 1) * rows / k)
}

/// Builds the move-only program that realises `layout`. Vertical moves go
/// first, on the source columns, then one masked horizontal move per bit
/// and subset brings every element into the target columns.
pub fn relocation_program(
    layout: &LayoutSpec,
    pim: &PimMachine,
    placement: &Placement,
) -> Result<NorProgram> {
    layout.validate()?;
    if layout.overrides().is_some() {
        return Err(Error::Unsupported("layout with move-count overrides".into()));
    }
    let n = layout.element_width_bits as usize;
    let k = layout.misaligned_subsets as usize;
    let rows = pim.rows() as usize;
    let cols = pim.cols() as usize;
    if placement.source_cols.len() != k {
        return Err(invalid(
            "placement",
            format!("{} source slots for {k} subsets", placement.source_cols.len()),
        ));
    }
    if k > rows {
        return Err(Error::RowOverflow {
            needed: k,
            available: rows,
        });
    }
    let needed = placement.columns_needed(layout);
    if needed > cols {
        return Err(Error::ColumnOverflow {
            needed,
            available: cols,
        });
    }
    let target = placement.target_col..placement.target_col + n;
    for &s in &placement.source_cols {
        if s < target.end && target.start < s + n {
            return Err(invalid("placement", format!("source slot {s} overlaps the target")));
        }
    }

    let mut instrs = Vec::new();
    if layout.needs_vertical_relocation {
        // Slots vertical moves act on: the union of the sources, or the
        // target itself when nothing needs shifting sideways.
        let (col_lo, col_hi) = if k == 0 {
            (target.start, target.end)
        } else {
            let lo = *placement.source_cols.iter().min().unwrap();
            let hi = placement.source_cols.iter().max().unwrap() + n;
            (lo, hi)
        };
        for row in 1..rows {
            instrs.push(NorInstr::VMove {
                offset: -1,
                col_lo,
                col_hi,
                row,
                crosses_array: false,
            });
        }
        instrs.push(NorInstr::VMove {
            offset: -1,
            col_lo,
            col_hi,
            row: 0,
            crosses_array: true,
        });
    }
    for (j, &src) in placement.source_cols.iter().enumerate() {
        let band = subset_rows(j, k, rows);
        let mask = (band != (0, rows)).then_some(band);
        for bit in 0..n {
            instrs.push(NorInstr::HMove {
                dest: placement.target_col + bit,
                src: src + bit,
                rows: mask,
            });
        }
    }

    let mut program = NorProgram::new(instrs);
    for (j, &src) in placement.source_cols.iter().enumerate() {
        program.inputs.push(Operand::new(format!("src{j}"), src..src + n));
    }
    if k == 0 {
        program.inputs.push(Operand::new("src", target.clone()));
    }
    program.outputs.push(Operand::new("target", target));
    Ok(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::count_cycles;

    fn pim_rows(rows: u64) -> PimMachine {
        PimMachine::default().with_rows(rows).unwrap()
    }

    #[test]
    fn formula_examples() {
        let pim = PimMachine::default();
        assert_eq!(pac_of(&LayoutSpec::new(16, 1, true).unwrap(), &pim), 1040);
        assert_eq!(pac_of(&LayoutSpec::new(16, 1, false).unwrap(), &pim), 16);
        assert_eq!(pac_of(&LayoutSpec::new(16, 0, false).unwrap(), &pim), 0);
        assert_eq!(pac_of(&LayoutSpec::new(16, 3, true).unwrap(), &pim), 1072);
        assert_eq!(pac_of(&LayoutSpec::aligned(8).with_overrides(5, 7), &pim), 12);
    }

    #[test]
    fn worked_example_program() {
        let pim = PimMachine::default();
        let layout = LayoutSpec::new(16, 1, true).unwrap();
        let prog = relocation_program(&layout, &pim, &Placement::packed(&layout)).unwrap();
        assert_eq!(prog.hmove_count(), 16);
        assert_eq!(prog.vmove_count(), 1024);
        assert_eq!(count_cycles(&prog), 1040);
    }

    #[test]
    fn alignment_only_and_identity() {
        let pim = PimMachine::default();
        let layout = LayoutSpec::new(16, 1, false).unwrap();
        let prog = relocation_program(&layout, &pim, &Placement::packed(&layout)).unwrap();
        assert_eq!(prog.len(), 16);
        assert_eq!(prog.hmove_count(), 16);

        let identity = LayoutSpec::aligned(16);
        let prog = relocation_program(&identity, &pim, &Placement::packed(&identity)).unwrap();
        assert!(prog.is_empty());
    }

    #[test]
    fn bands_cover_all_rows() {
        for rows in [1usize, 7, 64, 1024] {
            for k in 1..=rows.min(9) {
                let mut next = 0;
                for j in 0..k {
                    let (lo, hi) = subset_rows(j, k, rows);
                    assert_eq!(lo, next);
                    assert!(hi > lo);
                    next = hi;
                }
                assert_eq!(next, rows);
            }
        }
    }

    #[test]
    fn errors() {
        let pim = pim_rows(4).with_mats(1).unwrap();
        let layout = LayoutSpec::new(4, 5, false).unwrap();
        assert!(matches!(
            relocation_program(&layout, &pim, &Placement::packed(&layout)),
            Err(Error::RowOverflow { needed: 5, available: 4 })
        ));
        let small = PimMachine::new(64, 8, 1, 10.0, 0.1).unwrap();
        let layout = LayoutSpec::new(4, 2, true).unwrap();
        assert!(matches!(
            relocation_program(&layout, &small, &Placement::packed(&layout)),
            Err(Error::ColumnOverflow { needed: 12, available: 8 })
        ));
        let with_override = LayoutSpec::aligned(4).with_overrides(1, 1);
        assert!(relocation_program(&with_override, &small, &Placement::packed(&with_override)).is_err());
        let half = LayoutSpec {
            hmove_override: Some(3),
            ..LayoutSpec::aligned(4)
        };
        assert!(half.validate().is_err());
        assert!(LayoutSpec::new(0, 1, false).is_err());
    }

    #[test]
    fn json_fields() {
        let layout: LayoutSpec = serde_json::from_str(
            r#"{"element_width_bits":16,"misaligned_subsets":1,"needs_vertical_relocation":true}"#,
        )
        .unwrap();
        assert_eq!(layout, LayoutSpec::new(16, 1, true).unwrap());
        let err = serde_json::from_str::<LayoutSpec>(r#"{"element_width_bits":16,"bogus":1}"#);
        assert!(err.is_err());
    }
}
