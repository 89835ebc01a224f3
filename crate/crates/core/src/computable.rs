//! The infinite algebras `A_n` and the two-generator example algebra.

use crate::algebra::{ComputableAlgebra, OpSig};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::nat::Nat;
use crate::pool::{ElemId, ElementPool};

/// The value of `t` on a tuple that is not sent to the injection `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Special {
    /// `o^j_{i,g}`, with `g` packed little-endian into the low n−1 bits.
    O { i: Nat, j: Nat, g: u64 },
    /// `r^j_i` (here `j` is already the successor level).
    R { i: Nat, j: Nat },
}

/// `A_n = ⟨O ∪ R ∪ G; t⟩` with n-ary `t`.
///
/// If every argument lies in `{r^j_{4i}, r^j_{4i+2}}` for one pair `(i, j)`,
/// let `f(d)` be 0 or 1 accordingly. Then `t` returns `r^{j+1}_i` when
/// `f = (1,…,1,0)`, `r^{j+1}_{i+1}` when `f = (1,…,1)`, and `o^j_{i,g}` with
/// `g = f|_{n−1}` otherwise. Every other tuple goes to `s(a_0,…,a_{n−1})`.
#[derive(Clone, Debug)]
pub struct AnAlgebra {
    n: usize,
    name: String,
    sig: Vec<OpSig>,
}

pub fn an_algebra(n: usize) -> Result<AnAlgebra> {
    if !(2..=63).contains(&n) {
        return Err(Error::Validation(format!("A_n needs 2 <= n <= 63, got {n}")));
    }
    Ok(AnAlgebra {
        n,
        name: format!("A_{n}"),
        sig: vec![OpSig {
            symbol: "t".into(),
            arity: n,
        }],
    })
}

impl AnAlgebra {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Classifies an argument tuple without allocating.
    pub fn classify<'e>(&self, args: impl IntoIterator<Item = &'e Element>) -> Option<Special> {
        let mut block: Option<(Nat, &Nat)> = None;
        let mut f = 0u64;
        let mut count = 0;
        for (d, a) in args.into_iter().enumerate() {
            let Element::R { i, j } = a else { return None };
            let (q, r) = i.div_rem4();
            match r {
                0 => {}
                2 => f |= 1 << d,
                _ => return None,
            }
            match &block {
                None => block = Some((q, j)),
                Some((q0, j0)) => {
                    if *q0 != q || *j0 != j {
                        return None;
                    }
                }
            }
            count += 1;
        }
        debug_assert_eq!(count, self.n);
        let (q, j) = block?;
        let low = (1u64 << (self.n - 1)) - 1;
        let all = (1u64 << self.n) - 1;
        Some(if f == low {
            Special::R { i: q, j: j.succ() }
        } else if f == all {
            Special::R {
                i: q.succ(),
                j: j.succ(),
            }
        } else {
            Special::O {
                i: q,
                j: j.clone(),
                g: f & low,
            }
        })
    }

    pub fn classify_ids(&self, pool: &ElementPool, args: &[ElemId]) -> Option<Special> {
        self.classify(args.iter().map(|&a| pool.get(a)))
    }

    /// Whether `t(args)` lies in `R`. Only tuples over `R` can qualify.
    pub fn yields_r(&self, pool: &ElementPool, args: &[ElemId]) -> bool {
        matches!(self.classify_ids(pool, args), Some(Special::R { .. }))
    }

    pub fn special_element(&self, s: Special) -> Element {
        match s {
            Special::R { i, j } => Element::R { i, j },
            Special::O { i, j, g } => Element::O {
                i,
                j,
                g: (0..self.n - 1).map(|d| g >> d & 1 == 1).collect(),
            },
        }
    }
}

impl ComputableAlgebra for AnAlgebra {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &[OpSig] {
        &self.sig
    }

    fn eval(&self, _op: usize, args: &[Element]) -> Element {
        match self.classify(args) {
            Some(s) => self.special_element(s),
            None => Element::s("s", args.to_vec()),
        }
    }

    fn check_arg(&self, e: &Element) -> Result<()> {
        match e {
            Element::O { g, .. } if g.len() != self.n - 1 => Err(Error::Validation(format!(
                "{e} has a pattern of length {}, expected {}",
                g.len(),
                self.n - 1
            ))),
            Element::Fin(_) | Element::Atom => {
                Err(Error::Validation(format!("{e} is not an element of {}", self.name)))
            }
            Element::S(node) if node.tag() != "s" || node.args().len() != self.n => Err(
                Error::Validation(format!("{e} is not an s-term of arity {}", self.n)),
            ),
            _ => Ok(()),
        }
    }

    fn images_equal(&self, pool: &ElementPool, _op: usize, a: &[ElemId], b: &[ElemId]) -> bool {
        if a == b {
            return true;
        }
        match (self.classify_ids(pool, a), self.classify_ids(pool, b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

/// The algebra on `{o} ∪ G` with `t(o, y) = o` and `t(x, y) = s(x, y)` otherwise.
#[derive(Clone, Debug)]
pub struct Sec3Algebra {
    sig: Vec<OpSig>,
}

pub fn sec3_algebra() -> Sec3Algebra {
    Sec3Algebra {
        sig: vec![OpSig {
            symbol: "t".into(),
            arity: 2,
        }],
    }
}

impl ComputableAlgebra for Sec3Algebra {
    fn name(&self) -> &str {
        "two-generator"
    }

    fn signature(&self) -> &[OpSig] {
        &self.sig
    }

    fn eval(&self, _op: usize, args: &[Element]) -> Element {
        if args[0] == Element::Atom {
            Element::Atom
        } else {
            Element::s("s", args.to_vec())
        }
    }

    fn check_arg(&self, e: &Element) -> Result<()> {
        match e {
            Element::Atom => Ok(()),
            Element::S(node) if node.tag() == "s" && node.args().len() == 2 => Ok(()),
            _ => Err(Error::Validation(format!("{e} is not an element of sec3"))),
        }
    }

    fn images_equal(&self, pool: &ElementPool, _op: usize, a: &[ElemId], b: &[ElemId]) -> bool {
        let atom_a = *pool.get(a[0]) == Element::Atom;
        let atom_b = *pool.get(b[0]) == Element::Atom;
        if atom_a || atom_b {
            atom_a && atom_b
        } else {
            a == b
        }
    }
}
