//! Elements of finite and computable algebras, with a canonical text grammar:
//!
//! ```text
//! e := o | r[i]^[j] | o[i,(g,...,g)]^[j] | tag(e,...,e) | digits
//! ```
//!
//! `digits` is a finite-carrier index. Whitespace is ignored when parsing.

use crate::error::{Error, Result};
use crate::nat::Nat;
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Index into a finite carrier.
    Fin(u32),
    /// `o^j_{i,g}`; `g` has length n−1.
    O { i: Nat, j: Nat, g: Box<[bool]> },
    /// `r^j_i`.
    R { i: Nat, j: Nat },
    /// Formal application term; realizes an injection into G.
    S(Arc<SNode>),
    /// The constant `o` of the two-generator example algebra.
    Atom,
}

/// Hash-consing friendly term node: the hash is computed once at construction.
pub struct SNode {
    tag: Box<str>,
    args: Box<[Element]>,
    hash: u64,
}

impl SNode {
    pub fn new(tag: &str, args: Vec<Element>) -> SNode {
        let mut h = DefaultHasher::new();
        tag.hash(&mut h);
        args.hash(&mut h);
        SNode {
            tag: tag.into(),
            args: args.into_boxed_slice(),
            hash: h.finish(),
        }
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn args(&self) -> &[Element] {
        &self.args
    }
}

impl PartialEq for SNode {
    fn eq(&self, other: &Self) -> bool {
        self.hash == other.hash && self.tag == other.tag && self.args == other.args
    }
}

impl Eq for SNode {}

impl Hash for SNode {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_u64(self.hash);
    }
}

impl PartialOrd for SNode {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SNode {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (&self.tag, &self.args).cmp(&(&other.tag, &other.args))
    }
}

impl Element {
    pub fn r(i: u64, j: u64) -> Element {
        Element::R {
            i: i.into(),
            j: j.into(),
        }
    }

    pub fn o(i: u64, j: u64, g: &[bool]) -> Element {
        Element::O {
            i: i.into(),
            j: j.into(),
            g: g.into(),
        }
    }

    pub fn s(tag: &str, args: Vec<Element>) -> Element {
        Element::S(Arc::new(SNode::new(tag, args)))
    }

    pub fn is_r(&self) -> bool {
        matches!(self, Element::R { .. })
    }

    pub fn is_o(&self) -> bool {
        matches!(self, Element::O { .. })
    }

    pub fn is_s(&self) -> bool {
        matches!(self, Element::S(_))
    }

    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Element> {
        let compact: Vec<u8> = text.bytes().filter(|b| !b.is_ascii_whitespace()).collect();
        let mut p = Parser { s: &compact, pos: 0 };
        let e = p.element()?;
        if p.pos != compact.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Fin(v) => write!(f, "{v}"),
            Element::O { i, j, g } => {
                write!(f, "o[{i},(")?;
                for (k, b) in g.iter().enumerate() {
                    if k > 0 {
                        f.write_str(",")?;
                    }
                    f.write_str(if *b { "1" } else { "0" })?;
                }
                write!(f, ")]^[{j}]")
            }
            Element::R { i, j } => write!(f, "r[{i}]^[{j}]"),
            Element::S(node) => {
                write!(f, "{}(", node.tag)?;
                for (k, a) in node.args.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Element::Atom => f.write_str("o"),
        }
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse(format!("element: {msg} at byte {}", self.pos))
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(&format!("expected `{}`", b as char)))
        }
    }

    fn nat(&mut self) -> Result<Nat> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        let digits = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        digits.parse().map_err(|_| self.err("expected a natural number"))
    }

    fn bracketed_nat(&mut self) -> Result<Nat> {
        self.expect(b'[')?;
        let n = self.nat()?;
        self.expect(b']')?;
        Ok(n)
    }

    fn ident(&mut self) -> &str {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|b| b.is_ascii_alphanumeric() || b == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).unwrap()
    }

    fn element(&mut self) -> Result<Element> {
        match self.peek() {
            Some(b) if b.is_ascii_digit() => {
                let n = self.nat()?;
                let v = n
                    .to_u64()
                    .and_then(|v| u32::try_from(v).ok())
                    .ok_or_else(|| self.err("carrier index too large"))?;
                Ok(Element::Fin(v))
            }
            Some(b) if b.is_ascii_alphabetic() || b == b'_' => {
                let tag = self.ident().to_string();
                match (tag.as_str(), self.peek()) {
                    ("r", Some(b'[')) => {
                        let i = self.bracketed_nat()?;
                        self.expect(b'^')?;
                        let j = self.bracketed_nat()?;
                        Ok(Element::R { i, j })
                    }
                    ("o", Some(b'[')) => {
                        self.expect(b'[')?;
                        let i = self.nat()?;
                        self.expect(b',')?;
                        self.expect(b'(')?;
                        let mut g = Vec::new();
                        loop {
                            match self.peek() {
                                Some(b'0') => g.push(false),
                                Some(b'1') => g.push(true),
                                _ => return Err(self.err("expected a bit")),
                            }
                            self.pos += 1;
                            if self.peek() == Some(b',') {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                        self.expect(b')')?;
                        self.expect(b']')?;
                        self.expect(b'^')?;
                        let j = self.bracketed_nat()?;
                        Ok(Element::O {
                            i,
                            j,
                            g: g.into_boxed_slice(),
                        })
                    }
                    (_, Some(b'(')) => {
                        self.pos += 1;
                        let mut args = vec![self.element()?];
                        while self.peek() == Some(b',') {
                            self.pos += 1;
                            args.push(self.element()?);
                        }
                        self.expect(b')')?;
                        Ok(Element::s(&tag, args))
                    }
                    ("o", _) => Ok(Element::Atom),
                    _ => Err(self.err(&format!("unexpected identifier `{tag}`"))),
                }
            }
            _ => Err(self.err("expected an element")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grammar_examples() {
        assert_eq!(Element::r(3, 1).render(), "r[3]^[1]");
        assert_eq!(Element::parse("r[3]^[1]").unwrap(), Element::r(3, 1));
        let o = Element::o(0, 0, &[false, true]);
        assert_eq!(o.render(), "o[0,(0,1)]^[0]");
        assert_eq!(Element::parse("o[0,(0,1)]^[0]").unwrap(), o);
        let s = Element::s("s", vec![Element::r(0, 0), Element::Atom]);
        assert_eq!(s.render(), "s(r[0]^[0], o)");
        assert_eq!(Element::parse("s(r[0]^[0], o)").unwrap(), s);
    }

    #[test]
    fn whitespace_is_ignored() {
        assert_eq!(
            Element::parse(" s ( r [ 1 ] ^ [ 2 ] ,\n o )").unwrap(),
            Element::s("s", vec![Element::r(1, 2), Element::Atom])
        );
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        for bad in ["", "r[1]", "r[1]^[x]", "o[1,()]^[0]", "s(o", "o)", "q", "r[1]^[2]o"] {
            assert!(Element::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn tags_are_pairwise_distinct() {
        let zoo = [
            Element::Fin(0),
            Element::r(0, 0),
            Element::o(0, 0, &[false]),
            Element::s("s", vec![Element::r(0, 0)]),
            Element::Atom,
        ];
        for (a, x) in zoo.iter().enumerate() {
            for (b, y) in zoo.iter().enumerate() {
                assert_eq!(a == b, x == y);
            }
        }
    }

    #[test]
    fn huge_indices_round_trip() {
        let text = "r[340282366920938463463374607431768211456]^[0]";
        assert_eq!(Element::parse(text).unwrap().render(), text);
    }

    fn arb_element() -> impl Strategy<Value = Element> {
        let leaf = prop_oneof![
            any::<u16>().prop_map(|v| Element::Fin(v as u32)),
            (any::<u64>(), 0u64..5).prop_map(|(i, j)| Element::r(i, j)),
            (0u64..100, 0u64..5, prop::collection::vec(any::<bool>(), 1..4))
                .prop_map(|(i, j, g)| Element::o(i, j, &g)),
            Just(Element::Atom),
        ];
        leaf.prop_recursive(3, 16, 3, |inner| {
            prop::collection::vec(inner, 1..4).prop_map(|args| Element::s("s", args))
        })
    }

    proptest! {
        #[test]
        fn render_parse_round_trip(e in arb_element()) {
            prop_assert_eq!(Element::parse(&e.render()).unwrap(), e);
        }

        #[test]
        fn cube_report_form_round_trips(vs in prop::collection::vec(arb_element(), 8)) {
            let c = crate::cube::Cube::new(3, vs).unwrap();
            prop_assert_eq!(crate::cube::parse_cube(&c.to_string()).unwrap(), c);
        }

        #[test]
        fn snode_equality_is_structural(a in arb_element(), b in arb_element()) {
            let x = Element::s("s", vec![a.clone(), b.clone()]);
            let y = Element::s("s", vec![a.clone(), b.clone()]);
            prop_assert_eq!(&x, &y);
            let z = Element::s("s", vec![b.clone(), a.clone()]);
            prop_assert_eq!(x == z, a == b);
        }
    }
}
