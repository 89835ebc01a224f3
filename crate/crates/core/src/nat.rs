//! Arbitrary-size natural numbers with an allocation-free fast path.

use num_bigint::BigUint;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// A natural number. Values that fit in a `u64` are always stored inline, so
/// equality and ordering can be derived.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nat(Repr);

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Repr {
    Small(u64),
    Big(Arc<BigUint>),
}

impl Nat {
    pub const ZERO: Nat = Nat(Repr::Small(0));

    pub fn to_u64(&self) -> Option<u64> {
        match &self.0 {
            Repr::Small(v) => Some(*v),
            Repr::Big(_) => None,
        }
    }

    pub fn to_biguint(&self) -> BigUint {
        match &self.0 {
            Repr::Small(v) => BigUint::from(*v),
            Repr::Big(b) => (**b).clone(),
        }
    }

    fn from_big(b: BigUint) -> Nat {
        match u64::try_from(&b) {
            Ok(v) => Nat(Repr::Small(v)),
            Err(_) => Nat(Repr::Big(Arc::new(b))),
        }
    }

    pub fn succ(&self) -> Nat {
        match &self.0 {
            Repr::Small(v) if *v < u64::MAX => Nat(Repr::Small(v + 1)),
            _ => Nat::from_big(self.to_biguint() + 1u32),
        }
    }

    /// Quotient and remainder by 4.
    pub fn div_rem4(&self) -> (Nat, u8) {
        match &self.0 {
            Repr::Small(v) => (Nat(Repr::Small(v / 4)), (v % 4) as u8),
            Repr::Big(b) => {
                let r = (&**b % 4u32).to_u64_digits().first().copied().unwrap_or(0) as u8;
                (Nat::from_big(&**b >> 2), r)
            }
        }
    }

    /// `4 * self + r`.
    pub fn times4_plus(&self, r: u8) -> Nat {
        match &self.0 {
            Repr::Small(v) if *v <= (u64::MAX - 3) / 4 => Nat(Repr::Small(4 * v + r as u64)),
            _ => Nat::from_big((self.to_biguint() << 2) + r as u32),
        }
    }

    pub fn abs_diff(&self, other: &Nat) -> Nat {
        match (&self.0, &other.0) {
            (Repr::Small(a), Repr::Small(b)) => Nat(Repr::Small(a.abs_diff(*b))),
            _ => {
                let (a, b) = (self.to_biguint(), other.to_biguint());
                Nat::from_big(if a >= b { a - b } else { b - a })
            }
        }
    }
}

impl From<u64> for Nat {
    fn from(v: u64) -> Self {
        Nat(Repr::Small(v))
    }
}

impl From<BigUint> for Nat {
    fn from(b: BigUint) -> Self {
        Nat::from_big(b)
    }
}

impl fmt::Display for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(v) => write!(f, "{v}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Nat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Nat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("not a natural number: `{s}`"));
        }
        match s.parse::<u64>() {
            Ok(v) => Ok(Nat(Repr::Small(v))),
            Err(_) => BigUint::from_str(s)
                .map(Nat::from_big)
                .map_err(|e| e.to_string()),
        }
    }
}
