//! Operation complexity: how many row-parallel NOR cycles an n-bit operation
//! takes inside one memory array.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};

/// Widths above this are rejected; it bounds generated program sizes.
pub const MAX_WIDTH_BITS: u32 = 1024;

/// The only width with a known low-precision multiply count.
pub const MPY_LOWPREC_WIDTH: u32 = 16;
pub const MPY_LOWPREC_OC: u64 = 1544;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Not,
    Or,
    And,
    Xor,
    Add,
    /// Addition built from up-to-four-input NOR gates.
    AddFanin4,
    /// Full-precision multiply (2n-bit product).
    Mpy,
    /// Multiply keeping only the low n bits of the product.
    MpyLowPrec,
    /// Caller-supplied cycle count.
    Custom(u64),
}

impl OpKind {
    /// Kinds that resolve from a formula or point value.
    pub const BUILTIN: [OpKind; 8] = [
        OpKind::Not,
        OpKind::Or,
        OpKind::And,
        OpKind::Xor,
        OpKind::Add,
        OpKind::AddFanin4,
        OpKind::Mpy,
        OpKind::MpyLowPrec,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Not => "NOT",
            OpKind::Or => "OR",
            OpKind::And => "AND",
            OpKind::Xor => "XOR",
            OpKind::Add => "ADD",
            OpKind::AddFanin4 => "ADD_FANIN4",
            OpKind::Mpy => "MPY",
            OpKind::MpyLowPrec => "MPY_LOWPREC",
            OpKind::Custom(_) => "CUSTOM",
        }
    }

    /// Resolves a kind by name; `CUSTOM` needs the cycle count alongside.
    pub fn from_name(name: &str, custom_oc: Option<u64>) -> Result<Self> {
        if name.eq_ignore_ascii_case("CUSTOM") {
            return match custom_oc {
                Some(oc) if oc > 0 => Ok(OpKind::Custom(oc)),
                _ => Err(invalid("op", "CUSTOM needs a positive cycle count")),
            };
        }
        name.parse()
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        OpKind::BUILTIN
            .into_iter()
            .find(|k| k.name() == upper)
            .ok_or_else(|| invalid("op", format!("unknown operation `{s}`")))
    }
}

impl Serialize for OpKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// An operation kind at a given operand width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct OpSpec {
    pub kind: OpKind,
    pub width_bits: u32,
}

impl OpSpec {
    pub fn new(kind: OpKind, width_bits: u32) -> Result<Self> {
        if width_bits == 0 || width_bits > MAX_WIDTH_BITS {
            return Err(invalid(
                "width_bits",
                format!("must be in 1..={MAX_WIDTH_BITS}, got {width_bits}"),
            ));
        }
        if kind == OpKind::Custom(0) {
            return Err(invalid("op", "CUSTOM needs a positive cycle count"));
        }
        Ok(Self { kind, width_bits })
    }
}

/// Cycles one row needs to complete `spec`.
pub fn oc_of(spec: &OpSpec) -> Result<u64> {
    let n = spec.width_bits as u64;
    let unsupported = || Error::UnsupportedWidth {
        kind: spec.kind.name().to_string(),
        width: spec.width_bits,
    };
    Ok(match spec.kind {
        OpKind::Not => n,
        OpKind::Or => 2 * n,
        OpKind::And => 3 * n,
        OpKind::Xor => 5 * n,
        OpKind::Add => 9 * n,
        OpKind::AddFanin4 => 7 * n,
        // 13n^2 - 14n is negative at n = 1.
        OpKind::Mpy if n < 2 => return Err(unsupported()),
        OpKind::Mpy => 13 * n * n - 14 * n,
        OpKind::MpyLowPrec if spec.width_bits == MPY_LOWPREC_WIDTH => MPY_LOWPREC_OC,
        OpKind::MpyLowPrec => return Err(unsupported()),
        OpKind::Custom(oc) => oc,
    })
}

/// One row of the serialised catalog table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct CatalogEntry {
    pub kind: String,
    pub n: u32,
    pub oc: u64,
}

/// Catalog values for every supported (kind, width) pair, kinds outermost.
pub fn catalog_table(kinds: &[OpKind], widths: &[u32]) -> Vec<CatalogEntry> {
    let mut out = Vec::new();
    for kind in kinds {
        for &n in widths {
            let Ok(spec) = OpSpec::new(*kind, n) else {
                continue;
            };
            if let Ok(oc) = oc_of(&spec) {
                out.push(CatalogEntry {
                    kind: kind.name().to_string(),
                    n,
                    oc,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oc(kind: OpKind, n: u32) -> u64 {
        oc_of(&OpSpec::new(kind, n).unwrap()).unwrap()
    }

    #[test]
    fn sixteen_bit_values() {
        assert_eq!(oc(OpKind::And, 16), 48);
        assert_eq!(oc(OpKind::Add, 16), 144);
        assert_eq!(oc(OpKind::Or, 16), 32);
        assert_eq!(oc(OpKind::Mpy, 16), 3104);
        assert_eq!(oc(OpKind::MpyLowPrec, 16), 1544);
        assert_eq!(oc(OpKind::AddFanin4, 16), 112);
        assert_eq!(oc(OpKind::Not, 8), 8);
        assert_eq!(oc(OpKind::Custom(77), 3), 77);
    }

    #[test]
    fn closed_forms_hold_for_all_small_widths() {
        for n in 1..=64u64 {
            let w = n as u32;
            assert_eq!(oc(OpKind::Not, w), n);
            assert_eq!(oc(OpKind::Or, w), 2 * n);
            assert_eq!(oc(OpKind::And, w), 3 * n);
            assert_eq!(oc(OpKind::Xor, w), 5 * n);
            assert_eq!(oc(OpKind::Add, w), 9 * n);
            assert_eq!(oc(OpKind::AddFanin4, w), 7 * n);
            if n >= 2 {
                assert_eq!(oc(OpKind::Mpy, w) as i64, 13 * (n * n) as i64 - 14 * n as i64);
            }
        }
    }

    #[test]
    fn ordering_across_kinds() {
        for n in 2..=MAX_WIDTH_BITS {
            let [not, or, and, add, mpy] =
                [OpKind::Not, OpKind::Or, OpKind::And, OpKind::Add, OpKind::Mpy].map(|k| oc(k, n));
            assert!(mpy > add && add > and && and > or && or > not, "n = {n}");
        }
    }

    #[test]
    fn unsupported_widths() {
        for n in [1, 8, 15, 17, 32] {
            let spec = OpSpec::new(OpKind::MpyLowPrec, n).unwrap();
            assert!(matches!(oc_of(&spec), Err(Error::UnsupportedWidth { .. })));
        }
        let spec = OpSpec::new(OpKind::Mpy, 1).unwrap();
        assert!(matches!(oc_of(&spec), Err(Error::UnsupportedWidth { .. })));
        assert!(OpSpec::new(OpKind::Add, 0).is_err());
        assert!(OpSpec::new(OpKind::Add, MAX_WIDTH_BITS + 1).is_err());
        assert!(OpSpec::new(OpKind::Custom(0), 8).is_err());
    }

    #[test]
    fn names() {
        for k in OpKind::BUILTIN {
            assert_eq!(k.name().parse::<OpKind>().unwrap(), k);
        }
        assert_eq!("add_fanin4".parse::<OpKind>().unwrap(), OpKind::AddFanin4);
        assert!("DIV".parse::<OpKind>().is_err());
        assert_eq!(OpKind::from_name("custom", Some(9)).unwrap(), OpKind::Custom(9));
        assert!(OpKind::from_name("CUSTOM", None).is_err());
    }

    #[test]
    fn table_skips_unsupported_pairs() {
        let t = catalog_table(&[OpKind::MpyLowPrec, OpKind::And], &[8, 16]);
        assert_eq!(
            t,
            vec![
                CatalogEntry { kind: "MPY_LOWPREC".into(), n: 16, oc: 1544 },
                CatalogEntry { kind: "AND".into(), n: 8, oc: 24 },
                CatalogEntry { kind: "AND".into(), n: 16, oc: 48 },
            ]
        );
        let json = serde_json::to_string(&t[0]).unwrap();
        assert_eq!(json, r#"{"kind":"MPY_LOWPREC","n":16,"oc":1544}"#);
    }
}
