//! Commutator terms and the derived, lower central and dimension-n series.

use crate::algebra::FiniteAlgebra;
use crate::commutator::{higher_commutator_with, supernilpotence_check_with, Limits};
use crate::congruence::Partition;
use crate::error::{Error, Result};
use rustc_hash::FxHashMap;
use std::fmt;
use std::str::FromStr;

/// A single-variable term built from commutator symbols of arity 2..=n.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CommutatorTerm {
    X,
    Node(Vec<CommutatorTerm>),
}

impl CommutatorTerm {
    /// Largest node arity, or 0 for `x`.
    pub fn max_arity(&self) -> usize {
        match self {
            CommutatorTerm::X => 0,
            CommutatorTerm::Node(ch) => ch.iter().map(Self::max_arity).max().unwrap_or(0).max(ch.len()),
        }
    }

    /// Step count `m` with `[α]ⁿ_m ≤ t(α)`: zero at `x`, one more than the
    /// largest child at each node.
    pub fn series_bound(&self) -> usize {
        match self {
            CommutatorTerm::X => 0,
            CommutatorTerm::Node(ch) => 1 + ch.iter().map(Self::series_bound).max().unwrap_or(0),
        }
    }
}

impl fmt::Display for CommutatorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CommutatorTerm::X => f.write_str("x"),
            CommutatorTerm::Node(ch) => {
                f.write_str("[")?;
                for (i, c) in ch.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

/// Parses `term := x | [term,term(,term)*]` and rejects nodes wider than `n`.
pub fn parse_term(text: &str, n: usize) -> Result<CommutatorTerm> {
    let chars: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let t = parse_at(&chars, &mut pos)?;
    if pos != chars.len() {
        return Err(Error::Parse(format!("trailing input in term `{text}`")));
    }
    let k = t.max_arity();
    if k > n {
        return Err(Error::Validation(format!(
            "term `{t}` uses a {k}-ary commutator but only arities up to {n} are allowed"
        )));
    }
    Ok(t)
}

fn parse_at(s: &[char], pos: &mut usize) -> Result<CommutatorTerm> {
    match s.get(*pos) {
        Some('x') => {
            *pos += 1;
            Ok(CommutatorTerm::X)
        }
        Some('[') => {
            *pos += 1;
            let mut ch = vec![parse_at(s, pos)?];
            loop {
                match s.get(*pos) {
                    Some(',') => {
                        *pos += 1;
                        ch.push(parse_at(s, pos)?);
                    }
                    Some(']') => {
                        *pos += 1;
                        break;
                    }
                    other => return Err(Error::Parse(format!("expected `,` or `]`, found {other:?}"))),
                }
            }
            if ch.len() < 2 {
                return Err(Error::Parse("a commutator needs at least two arguments".into()));
            }
            Ok(CommutatorTerm::Node(ch))
        }
        other => Err(Error::Parse(format!("expected `x` or `[`, found {other:?}"))),
    }
}

/// Memoized higher commutators (identity σ) of one algebra.
pub struct Commutators<'a> {
    alg: &'a FiniteAlgebra,
    limits: Limits,
    memo: FxHashMap<Vec<Partition>, Partition>,
}

impl<'a> Commutators<'a> {
    pub fn new(alg: &'a FiniteAlgebra, limits: Limits) -> Self {
        Commutators {
            alg,
            limits,
            memo: FxHashMap::default(),
        }
    }

    pub fn algebra(&self) -> &'a FiniteAlgebra {
        self.alg
    }

    pub fn get(&mut self, thetas: &[Partition]) -> Result<Partition> {
        if let Some(p) = self.memo.get(thetas) {
            return Ok(p.clone());
        }
        let p = higher_commutator_with(self.alg, thetas, None, &self.limits)?;
        self.memo.insert(thetas.to_vec(), p.clone());
        Ok(p)
    }
}

fn check_alpha(a: &FiniteAlgebra, alpha: &Partition) -> Result<()> {
    if alpha.size() != a.size() {
        return Err(Error::Validation("alpha has the wrong carrier size".into()));
    }
    if !crate::congruence::is_congruence(a, alpha)? {
        return Err(Error::Validation(format!("{alpha} is not a congruence")));
    }
    Ok(())
}

pub fn eval_term(a: &FiniteAlgebra, t: &CommutatorTerm, alpha: &Partition, limits: &Limits) -> Result<Partition> {
    check_alpha(a, alpha)?;
    eval_in(&mut Commutators::new(a, *limits), t, alpha)
}

fn eval_in(c: &mut Commutators, t: &CommutatorTerm, alpha: &Partition) -> Result<Partition> {
    match t {
        CommutatorTerm::X => Ok(alpha.clone()),
        CommutatorTerm::Node(ch) => {
            let vals = ch.iter().map(|s| eval_in(c, s, alpha)).collect::<Result<Vec<_>>>()?;
            c.get(&vals)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesKind {
    /// `[α]_{k+1} = [[α]_k, [α]_k]`
    Derived,
    /// `(α]_{k+1} = [α, (α]_k]`
    LeftLcs,
    /// `(α]′_{k+1} = [(α]′_k, α]`
    RightLcs,
    /// `[α]ⁿ_{k+1}` = the n-ary commutator of n copies of `[α]ⁿ_k`
    Dim(usize),
}

impl fmt::Display for SeriesKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SeriesKind::Derived => f.write_str("derived"),
            SeriesKind::LeftLcs => f.write_str("lcs-left"),
            SeriesKind::RightLcs => f.write_str("lcs-right"),
            SeriesKind::Dim(n) => write!(f, "dim:{n}"),
        }
    }
}

impl FromStr for SeriesKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(SeriesKind::Derived),
            "lcs-left" => Ok(SeriesKind::LeftLcs),
            "lcs-right" => Ok(SeriesKind::RightLcs),
            _ => match s.strip_prefix("dim:").map(str::parse::<usize>) {
                Some(Ok(n)) if n >= 2 => Ok(SeriesKind::Dim(n)),
                _ => Err(Error::Parse(format!("unknown series kind `{s}`"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesReport {
    pub kind: SeriesKind,
    /// `steps[k]` is the k-th term; `steps[0] = α`.
    pub steps: Vec<Partition>,
    pub stabilized: bool,
    pub reached_zero: bool,
}

impl fmt::Display for SeriesReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "series {}", self.kind)?;
        for (k, p) in self.steps.iter().enumerate() {
            writeln!(f, "  {k}: {p}")?;
        }
        write!(f, "stabilized: {}, reached zero: {}", self.stabilized, self.reached_zero)
    }
}

/// Computes up to `max_m` steps, stopping at zero or once two consecutive terms agree.
pub fn series(a: &FiniteAlgebra, kind: SeriesKind, alpha: &Partition, max_m: usize, limits: &Limits) -> Result<SeriesReport> {
    check_alpha(a, alpha)?;
    series_in(&mut Commutators::new(a, *limits), kind, alpha, max_m)
}

pub fn series_in(c: &mut Commutators, kind: SeriesKind, alpha: &Partition, max_m: usize) -> Result<SeriesReport> {
    let mut steps = vec![alpha.clone()];
    let mut stabilized = false;
    while steps.len() <= max_m && !steps.last().unwrap().is_identity() {
        let prev = steps.last().unwrap().clone();
        let thetas = match kind {
            SeriesKind::Derived => vec![prev.clone(), prev.clone()],
            SeriesKind::LeftLcs => vec![alpha.clone(), prev.clone()],
            SeriesKind::RightLcs => vec![prev.clone(), alpha.clone()],
            SeriesKind::Dim(n) => vec![prev.clone(); n],
        };
        let next = c.get(&thetas)?;
        let same = next == prev;
        steps.push(next);
        if same {
            stabilized = true;
            break;
        }
    }
    let reached_zero = steps.last().unwrap().is_identity();
    Ok(SeriesReport {
        kind,
        steps,
        stabilized,
        reached_zero,
    })
}

pub fn derived_series(a: &FiniteAlgebra, alpha: &Partition, max_m: usize, limits: &Limits) -> Result<SeriesReport> {
    series(a, SeriesKind::Derived, alpha, max_m, limits)
}

pub fn left_lcs(a: &FiniteAlgebra, alpha: &Partition, max_m: usize, limits: &Limits) -> Result<SeriesReport> {
    series(a, SeriesKind::LeftLcs, alpha, max_m, limits)
}

pub fn right_lcs(a: &FiniteAlgebra, alpha: &Partition, max_m: usize, limits: &Limits) -> Result<SeriesReport> {
    series(a, SeriesKind::RightLcs, alpha, max_m, limits)
}

pub fn dim_series(a: &FiniteAlgebra, alpha: &Partition, n: usize, max_m: usize, limits: &Limits) -> Result<SeriesReport> {
    series(a, SeriesKind::Dim(n), alpha, max_m, limits)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    Solvable,
    LeftNilpotent,
    RightNilpotent,
    /// `k`-step: the `(k+1)`-ary `[1,…,1]` vanishes.
    Supernilpotent(usize),
    SolvableInDimension(usize),
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Property::Solvable => f.write_str("solvable"),
            Property::LeftNilpotent => f.write_str("left-nilpotent"),
            Property::RightNilpotent => f.write_str("right-nilpotent"),
            Property::Supernilpotent(k) => write!(f, "supernilpotent:{k}"),
            Property::SolvableInDimension(n) => write!(f, "solvable-in-dimension:{n}"),
        }
    }
}

impl FromStr for Property {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let num = |p: &str| s.strip_prefix(p).and_then(|r| r.parse::<usize>().ok());
        match s {
            "solvable" => Ok(Property::Solvable),
            "left-nilpotent" => Ok(Property::LeftNilpotent),
            "right-nilpotent" => Ok(Property::RightNilpotent),
            _ => {
                if let Some(k) = num("supernilpotent:") {
                    Ok(Property::Supernilpotent(k))
                } else if let Some(n) = num("solvable-in-dimension:").filter(|&n| n >= 2) {
                    Ok(Property::SolvableInDimension(n))
                } else {
                    Err(Error::Parse(format!("unknown property `{s}`")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds { step: usize },
    /// Step `stabilized_at` repeated its predecessor above zero, so the
    /// series never reaches zero.
    Fails { stabilized_at: usize },
    /// Supernilpotence refuted by a matrix.
    Refuted { witness: String },
    /// Neither settled within `max_m` steps nor blocked by a cap.
    Undecided { steps: usize },
    Inconclusive { reason: String },
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Holds { step } => write!(f, "holds at step {step}"),
            Verdict::Fails { stabilized_at } => write!(f, "fails (stabilized at step {stabilized_at} above zero)"),
            Verdict::Refuted { witness } => write!(f, "fails (witness {witness})"),
            Verdict::Undecided { steps } => write!(f, "undecided after {steps} steps"),
            Verdict::Inconclusive { reason } => write!(f, "inconclusive ({reason})"),
        }
    }
}

pub fn check(a: &FiniteAlgebra, property: Property, max_m: usize, limits: &Limits) -> Result<Verdict> {
    let verdict = match property {
        Property::Supernilpotent(k) => check_supernilpotent(a, k, limits),
        _ => {
            let kind = match property {
                Property::Solvable => SeriesKind::Derived,
                Property::LeftNilpotent => SeriesKind::LeftLcs,
                Property::RightNilpotent => SeriesKind::RightLcs,
                Property::SolvableInDimension(n) => SeriesKind::Dim(n),
                Property::Supernilpotent(_) => unreachable!(),
            };
            series(a, kind, &Partition::total(a.size()), max_m, limits).map(|r| {
                if r.reached_zero {
                    Verdict::Holds { step: r.steps.len() - 1 }
                } else if r.stabilized {
                    Verdict::Fails {
                        stabilized_at: r.steps.len() - 1,
                    }
                } else {
                    Verdict::Undecided { steps: max_m }
                }
            })
        }
    };
    match verdict {
        Err(e) if e.is_cap() => Ok(Verdict::Inconclusive { reason: e.to_string() }),
        other => other,
    }
}

/// Least `k′ ≤ k` at which the algebra is `k′`-step supernilpotent.
fn check_supernilpotent(a: &FiniteAlgebra, k: usize, limits: &Limits) -> Result<Verdict> {
    let mut last = None;
    for step in 0..=k {
        let r = supernilpotence_check_with(a, step, limits)?;
        if r.holds {
            return Ok(Verdict::Holds { step });
        }
        last = r.counterexample;
    }
    let v = last.expect("a failing scan carries a counterexample");
    Ok(Verdict::Refuted {
        witness: format!("{} with pivot ({},{})", v.cube, v.pivot.0, v.pivot.1),
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma31Report {
    pub m: usize,
    /// `[α]ⁿ_m`, or the last computed term if the series settled earlier.
    pub series_term: Partition,
    pub term_value: Partition,
    pub holds: bool,
}

/// Checks `[α]ⁿ_m ≤ t(α)` for the step count `m` read off the term.
pub fn lemma31_bound_check(
    a: &FiniteAlgebra,
    t: &CommutatorTerm,
    alpha: &Partition,
    n: usize,
    limits: &Limits,
) -> Result<Lemma31Report> {
    check_alpha(a, alpha)?;
    if t.max_arity() > n {
        return Err(Error::Validation(format!("term `{t}` is wider than {n}")));
    }
    let mut c = Commutators::new(a, *limits);
    let m = t.series_bound();
    let term_value = eval_in(&mut c, t, alpha)?;
    let r = series_in(&mut c, SeriesKind::Dim(n.max(2)), alpha, m)?;
    // A series that stopped early is constant from there on.
    let series_term = r.steps.last().unwrap().clone();
    let holds = series_term.le(&term_value);
    Ok(Lemma31Report {
        m,
        series_term,
        term_value,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;

    fn table(name: &str, n: usize, t: Vec<u32>) -> FiniteAlgebra {
        FiniteAlgebra::new(
            name,
            n,
            vec![Operation {
                symbol: "*".into(),
                arity: 2,
                table: t,
            }],
        )
        .unwrap()
    }

    fn z(n: usize) -> FiniteAlgebra {
        table("Z", n, (0..n * n).map(|k| ((k / n + k % n) % n) as u32).collect())
    }

    fn meet2() -> FiniteAlgebra {
        table("meet2", 2, vec![0, 0, 0, 1])
    }

    #[test]
    fn term_grammar() {
        assert_eq!(parse_term("x", 2).unwrap(), CommutatorTerm::X);
        let t = parse_term(" [[x, x], x, x] ", 3).unwrap();
        assert_eq!(t.to_string(), "[[x,x],x,x]");
        assert_eq!(t.max_arity(), 3);
        assert_eq!(t.series_bound(), 2);
        assert!(matches!(parse_term("[[x,x],x,x]", 2), Err(Error::Validation(_))));
        for bad in ["", "[x]", "[x,x", "y", "[x,x]]", "[x,,x]"] {
            assert!(matches!(parse_term(bad, 4), Err(Error::Parse(_))), "{bad}");
        }
    }

    #[test]
    fn kinds_and_properties_parse() {
        for s in ["derived", "lcs-left", "lcs-right", "dim:3"] {
            assert_eq!(s.parse::<SeriesKind>().unwrap().to_string(), s);
        }
        for s in ["solvable", "left-nilpotent", "right-nilpotent", "supernilpotent:2", "solvable-in-dimension:3"] {
            assert_eq!(s.parse::<Property>().unwrap().to_string(), s);
        }
        assert!("dim:1".parse::<SeriesKind>().is_err());
        assert!("nilpotent".parse::<Property>().is_err());
    }

    #[test]
    fn abelian_group_series() {
        let a = z(4);
        let l = Limits::default();
        let r = derived_series(&a, &Partition::total(4), 5, &l).unwrap();
        assert_eq!(r.steps.len(), 2);
        assert!(r.reached_zero);
        assert_eq!(check(&a, Property::Solvable, 5, &l).unwrap(), Verdict::Holds { step: 1 });
        assert_eq!(check(&a, Property::LeftNilpotent, 5, &l).unwrap(), Verdict::Holds { step: 1 });
        assert_eq!(check(&z(2), Property::Supernilpotent(1), 5, &l).unwrap(), Verdict::Holds { step: 1 });
    }

    #[test]
    fn semilattice_is_not_solvable() {
        let a = meet2();
        let l = Limits::default();
        let v = check(&a, Property::Solvable, 5, &l).unwrap();
        assert_eq!(v, Verdict::Fails { stabilized_at: 1 });
        assert_eq!(v.to_string(), "fails (stabilized at step 1 above zero)");
        assert!(matches!(check(&a, Property::Supernilpotent(2), 5, &l).unwrap(), Verdict::Refuted { .. }));
        assert_eq!(check(&a, Property::Solvable, 0, &l).unwrap(), Verdict::Undecided { steps: 0 });
    }

    #[test]
    fn trivial_algebra_holds_at_zero() {
        let a = table("one", 1, vec![0]);
        let l = Limits::default();
        for p in [
            Property::Solvable,
            Property::LeftNilpotent,
            Property::RightNilpotent,
            Property::Supernilpotent(3),
            Property::SolvableInDimension(3),
        ] {
            assert_eq!(check(&a, p, 4, &l).unwrap(), Verdict::Holds { step: 0 }, "{p}");
        }
    }

    #[test]
    fn dimension_two_series_is_the_derived_series() {
        let l = Limits::default();
        for a in [z(3), meet2(), z(4)] {
            let one = Partition::total(a.size());
            let d = derived_series(&a, &one, 4, &l).unwrap();
            let s = dim_series(&a, &one, 2, 4, &l).unwrap();
            assert_eq!(d.steps, s.steps);
        }
    }

    #[test]
    fn caps_become_inconclusive() {
        let l = Limits {
            cube_cap: 10,
            ..Limits::default()
        };
        let v = check(&z(4), Property::Solvable, 3, &l).unwrap();
        assert!(matches!(v, Verdict::Inconclusive { .. }), "{v}");
    }

    #[test]
    fn lemma31_on_leaf_and_binary_node() {
        let a = z(3);
        let l = Limits::default();
        let one = Partition::total(3);
        let r = lemma31_bound_check(&a, &CommutatorTerm::X, &one, 2, &l).unwrap();
        assert_eq!((r.m, r.holds), (0, true));
        assert_eq!(r.series_term, one);
        let t = parse_term("[x,x]", 2).unwrap();
        let r = lemma31_bound_check(&a, &t, &one, 2, &l).unwrap();
        assert!(r.holds);
        assert_eq!(r.series_term, r.term_value);
    }

    #[test]
    fn non_congruence_alpha_is_rejected() {
        let a = meet2();
        let bad = Partition::parse("[[0],[1],[2]]").unwrap();
        assert!(eval_term(&a, &CommutatorTerm::X, &bad, &Limits::default()).is_err());
    }
}
