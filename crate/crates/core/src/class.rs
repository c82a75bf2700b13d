//! Position of a set in the functional Borel hierarchy.
//!
//! Classes are kept in additive/multiplicative form. The classical symbols
//! `G*_α` / `F*_α` alternate with the parity of `α`:
//!
//! | level α | additive  | multiplicative |
//! |---------|-----------|----------------|
//! | 0       | `G*_0` (functionally open)  | `F*_0` (functionally closed) |
//! | odd     | `F*_α`    | `G*_α`         |
//! | even>0  | `G*_α`    | `F*_α`         |

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Additive,
    Multiplicative,
    Ambiguous,
}

impl Kind {
    pub fn dual(self) -> Kind {
        match self {
            Kind::Additive => Kind::Multiplicative,
            Kind::Multiplicative => Kind::Additive,
            Kind::Ambiguous => Kind::Ambiguous,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClassTag {
    pub alpha: u32,
    pub kind: Kind,
}

impl ClassTag {
    pub const fn new(alpha: u32, kind: Kind) -> Self {
        ClassTag { alpha, kind }
    }

    pub const fn additive(alpha: u32) -> Self {
        ClassTag::new(alpha, Kind::Additive)
    }

    pub const fn multiplicative(alpha: u32) -> Self {
        ClassTag::new(alpha, Kind::Multiplicative)
    }

    pub const fn ambiguous(alpha: u32) -> Self {
        ClassTag::new(alpha, Kind::Ambiguous)
    }

    pub fn complement(self) -> Self {
        ClassTag::new(self.alpha, self.kind.dual())
    }

    /// Least `β` with the coded set in the additive class `β`.
    pub fn additive_level(self) -> u32 {
        match self.kind {
            Kind::Multiplicative => self.alpha + 1,
            _ => self.alpha,
        }
    }

    /// Least `β` with the coded set in the multiplicative class `β`.
    pub fn multiplicative_level(self) -> u32 {
        match self.kind {
            Kind::Additive => self.alpha + 1,
            _ => self.alpha,
        }
    }

    /// Least `β` with the coded set ambiguous of class `β`.
    pub fn ambiguous_level(self) -> u32 {
        match self.kind {
            Kind::Ambiguous => self.alpha,
            _ => self.alpha + 1,
        }
    }

    /// Class inclusion: every set of class `self` lies in class `other`.
    pub fn le(self, other: ClassTag) -> bool {
        if self.alpha < other.alpha {
            return true;
        }
        self.alpha == other.alpha && (self.kind == Kind::Ambiguous || self.kind == other.kind)
    }

    pub fn is_within_additive(self, alpha: u32) -> bool {
        self.additive_level() <= alpha
    }

    pub fn is_within_multiplicative(self, alpha: u32) -> bool {
        self.multiplicative_level() <= alpha
    }

    pub fn is_within_ambiguous(self, alpha: u32) -> bool {
        self.ambiguous_level() <= alpha
    }

    /// Classical symbol, e.g. `F*_1` for the additive class 1.
    pub fn symbol(self) -> String {
        let odd = self.alpha % 2 == 1;
        match self.kind {
            Kind::Additive => format!("{}*_{}", if odd { "F" } else { "G" }, self.alpha),
            Kind::Multiplicative => format!("{}*_{}", if odd { "G" } else { "F" }, self.alpha),
            Kind::Ambiguous => format!("F*_{0}∩G*_{0}", self.alpha),
        }
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            Kind::Additive => "additive",
            Kind::Multiplicative => "multiplicative",
            Kind::Ambiguous => "ambiguous",
        };
        write!(f, "({}, {k})", self.alpha)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusion_order() {
        assert!(ClassTag::ambiguous(1).le(ClassTag::additive(1)));
        assert!(ClassTag::ambiguous(1).le(ClassTag::multiplicative(1)));
        assert!(!ClassTag::additive(1).le(ClassTag::multiplicative(1)));
        assert!(ClassTag::multiplicative(0).le(ClassTag::ambiguous(1)));
        assert!(!ClassTag::additive(1).le(ClassTag::ambiguous(1)));
    }

    #[test]
    fn levels() {
        assert_eq!(ClassTag::multiplicative(0).additive_level(), 1);
        assert_eq!(ClassTag::additive(2).ambiguous_level(), 3);
        assert_eq!(ClassTag::ambiguous(1).multiplicative_level(), 1);
    }

    #[test]
    fn parity_symbols() {
        assert_eq!(ClassTag::additive(0).symbol(), "G*_0");
        assert_eq!(ClassTag::additive(1).symbol(), "F*_1");
        assert_eq!(ClassTag::multiplicative(1).symbol(), "G*_1");
        assert_eq!(ClassTag::multiplicative(2).symbol(), "F*_2");
    }
}
