//! Named logical target gates.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::invariants;
use crate::linalg::{self, c, Operator};

#[derive(Debug, Clone, PartialEq)]
pub enum Target {
    Cnot,
    Cz,
    /// SWAP of the two coded qubits.
    SwapLogical,
    /// `exp(-i theta Z / 2)` on one coded qubit.
    Rz(f64),
    /// `exp(-i theta X / 2)` on one coded qubit.
    Rx(f64),
    /// A 2x2 unitary read from a file.
    Matrix(Operator),
}

impl Target {
    /// Parses `cnot`, `cz`, `swap-logical`, `rz:THETA`, `rx:THETA` or
    /// `file:PATH`.
    pub fn parse(s: &str) -> Result<Self> {
        let angle = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .ok()
                .filter(|t| t.is_finite())
                .ok_or_else(|| Error::Domain(format!("bad rotation angle {v:?}")))
        };
        match s.split_once(':') {
            None => match s {
                "cnot" => Ok(Target::Cnot),
                "cz" => Ok(Target::Cz),
                "swap-logical" => Ok(Target::SwapLogical),
                _ => Err(Error::Domain(format!("unknown target {s:?}"))),
            },
            Some(("rz", v)) => Ok(Target::Rz(angle(v)?)),
            Some(("rx", v)) => Ok(Target::Rx(angle(v)?)),
            Some(("file", path)) => Self::from_file(Path::new(path)),
            Some(_) => Err(Error::Domain(format!("unknown target {s:?}"))),
        }
    }

    /// Reads `[[[re, im], [re, im]], [[re, im], [re, im]]]` (row major).
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
        let rows: [[[f64; 2]; 2]; 2] =
            serde_json::from_str(&text).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))?;
        let m = linalg::from_rows(rows.map(|r| r.map(|[re, im]| c(re, im))));
        if !linalg::is_unitary(&m, 1e-8) {
            return Err(Error::Domain(format!("{}: matrix is not unitary", path.display())));
        }
        Ok(Target::Matrix(m))
    }

    pub fn logical_qubits(&self) -> usize {
        match self {
            Target::Cnot | Target::Cz | Target::SwapLogical => 2,
            _ => 1,
        }
    }

    pub fn operator(&self) -> Operator {
        match self {
            Target::Cnot => invariants::cnot(),
            Target::Cz => invariants::cz(),
            Target::SwapLogical => invariants::swap(),
            Target::Rz(t) => linalg::su2_rotation([0.0, 0.0, 1.0], *t),
            Target::Rx(t) => linalg::su2_rotation([1.0, 0.0, 0.0], *t),
            Target::Matrix(m) => m.clone(),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Cnot => f.write_str("cnot"),
            Target::Cz => f.write_str("cz"),
            Target::SwapLogical => f.write_str("swap-logical"),
            Target::Rz(t) => write!(f, "rz:{t}"),
            Target::Rx(t) => write!(f, "rx:{t}"),
            Target::Matrix(_) => f.write_str("matrix"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_names() {
        for s in ["cnot", "cz", "swap-logical", "rz:1.5", "rx:-0.25"] {
            let t = Target::parse(s).unwrap();
            assert_eq!(t.to_string(), s);
            assert!(linalg::is_unitary(&t.operator(), 1e-12));
        }
        for s in ["toffoli", "rz:", "rz:nan", "ry:1", "file:/nonexistent/x.json"] {
            assert!(Target::parse(s).is_err(), "{s}");
        }
    }

    #[test]
    fn matrix_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.json");
        let s = std::f64::consts::FRAC_1_SQRT_2;
        std::fs::write(&path, format!("[[[{s},0],[{s},0]],[[{s},0],[{s},0]]]")).unwrap();
        assert!(Target::from_file(&path).is_err());
        std::fs::write(&path, format!("[[[{s},0],[{s},0]],[[{s},0],[-{s},0]]]")).unwrap();
        let t = Target::from_file(&path).unwrap();
        assert_eq!(t.logical_qubits(), 1);
    }
}
