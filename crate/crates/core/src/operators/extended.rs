use std::fmt;

use serde::{Serialize, Serializer};

/// A value in `ℝ ∪ {+∞}`.
///
/// `+∞` never enters vector arithmetic; callers branch on it explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            ExtReal::PosInf => None,
        }
    }

    pub fn add_finite(self, b: f64) -> ExtReal {
        self + ExtReal::Finite(b)
    }

    /// `self ≥ value`, with `+∞` dominating every real.
    pub fn ge(self, value: f64) -> bool {
        match self {
            ExtReal::Finite(a) => a >= value,
            ExtReal::PosInf => true,
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(v) => write!(f, "{v}"),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

/// `+∞` absorbs.
impl std::ops::Add for ExtReal {
    type Output = ExtReal;

    fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => serializer.serialize_f64(*v),
            ExtReal::PosInf => serializer.serialize_str("+inf"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinity_absorbs() {
        assert_eq!(ExtReal::Finite(1.0) + ExtReal::PosInf, ExtReal::PosInf);
        assert_eq!(ExtReal::Finite(1.0).add_finite(2.0), ExtReal::Finite(3.0));
        assert!(ExtReal::PosInf.ge(1e300));
        assert!(!ExtReal::Finite(0.0).ge(1.0));
        assert_eq!(ExtReal::from(f64::INFINITY), ExtReal::PosInf);
        assert_eq!(ExtReal::PosInf.to_string(), "+inf");
    }
}
