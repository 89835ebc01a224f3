//! Partitions, congruence generation and enumeration, and union-find based
//! partial congruences over computable algebras.

use crate::algebra::{ComputableAlgebra, FiniteAlgebra};
use crate::element::Element;
use crate::error::{Error, Result};
use rustc_hash::FxHashMap;
use std::fmt;

pub const DEFAULT_CON_CAP: usize = 8;

#[derive(Clone, Debug, Default)]
pub struct UnionFind {
    parent: Vec<u32>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            rank: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn push(&mut self) -> usize {
        let id = self.parent.len();
        self.parent.push(id as u32);
        self.rank.push(0);
        id
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] as usize != root {
            root = self.parent[root] as usize;
        }
        while self.parent[x] as usize != root {
            let next = self.parent[x] as usize;
            self.parent[x] = root as u32;
            x = next;
        }
        root
    }

    pub fn find_const(&self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            x = self.parent[x] as usize;
        }
        x
    }

    /// Returns true if two classes were merged.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb as u32,
            std::cmp::Ordering::Greater => self.parent[rb] = ra as u32,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra as u32;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// An equivalence relation on `{0,…,N−1}`, blocks numbered by first occurrence.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    blocks: Vec<u32>,
}

impl Partition {
    pub fn identity(n: usize) -> Self {
        Partition {
            blocks: (0..n as u32).collect(),
        }
    }

    pub fn total(n: usize) -> Self {
        Partition { blocks: vec![0; n] }
    }

    /// Canonicalizes an arbitrary block labelling.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut map = FxHashMap::default();
        let blocks = labels
            .iter()
            .map(|l| {
                let next = map.len() as u32;
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition { blocks }
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let mut labels = vec![u32::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &x in block {
                if x >= n {
                    return Err(Error::Validation(format!("element {x} outside carrier of size {n}")));
                }
                if labels[x] != u32::MAX {
                    return Err(Error::Validation(format!("element {x} listed twice")));
                }
                labels[x] = b as u32;
            }
        }
        if let Some(x) = labels.iter().position(|&l| l == u32::MAX) {
            return Err(Error::Validation(format!("element {x} missing from partition")));
        }
        Ok(Partition::from_labels(&labels))
    }

    fn from_uf(uf: &mut UnionFind) -> Self {
        let labels: Vec<u32> = (0..uf.len()).map(|x| uf.find(x) as u32).collect();
        Partition::from_labels(&labels)
    }

    pub fn size(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_of(&self, x: usize) -> u32 {
        self.blocks[x]
    }

    pub fn block_ids(&self) -> &[u32] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.iter().max().map_or(0, |m| *m as usize + 1)
    }

    pub fn related(&self, x: usize, y: usize) -> bool {
        self.blocks[x] == self.blocks[y]
    }

    pub fn is_identity(&self) -> bool {
        self.num_blocks() == self.size()
    }

    pub fn is_total(&self) -> bool {
        self.num_blocks() <= 1
    }

    /// `self ⊆ other` as relations.
    pub fn le(&self, other: &Partition) -> bool {
        assert_eq!(self.size(), other.size());
        let mut rep: Vec<Option<u32>> = vec![None; self.num_blocks()];
        self.blocks.iter().zip(&other.blocks).all(|(&b, &o)| {
            let slot = &mut rep[b as usize];
            match slot {
                None => {
                    *slot = Some(o);
                    true
                }
                Some(prev) => *prev == o,
            }
        })
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_blocks()];
        for (x, &b) in self.blocks.iter().enumerate() {
            out[b as usize].push(x);
        }
        out
    }

    /// Non-reflexive related pairs `(x, y)` with `x < y`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.size();
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                if self.related(x, y) {
                    out.push((x, y));
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let err = || Error::Parse(format!("partition: `{text}`"));
        let inner = compact
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(err)?;
        let mut blocks = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let body = rest.strip_prefix('[').ok_or_else(err)?;
            let close = body.find(']').ok_or_else(err)?;
            let block = body[..close]
                .split(',')
                .map(|x| x.parse::<usize>().map_err(|_| err()))
                .collect::<Result<Vec<_>>>()?;
            blocks.push(block);
            rest = &body[close + 1..];
            if let Some(r) = rest.strip_prefix(',') {
                if r.is_empty() {
                    return Err(err());
                }
                rest = r;
            } else if !rest.is_empty() {
                return Err(err());
            }
        }
        let n = blocks.iter().map(Vec::len).sum();
        Partition::from_blocks(n, &blocks)
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, block) in self.blocks().iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            f.write_str("[")?;
            for (m, x) in block.iter().enumerate() {
                if m > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{x}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub fn meet(p: &Partition, q: &Partition) -> Partition {
    assert_eq!(p.size(), q.size());
    let labels: Vec<u32> = p
        .blocks
        .iter()
        .zip(&q.blocks)
        .map(|(&a, &b)| a * q.size() as u32 + b)
        .collect();
    Partition::from_labels(&labels)
}

fn check_size(a: &FiniteAlgebra, p: &Partition) -> Result<()> {
    if p.size() == a.size() {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "partition on {} elements used with an algebra of size {}",
            p.size(),
            a.size()
        )))
    }
}

/// Calls `visit` on every tuple of length `k` over `0..n`.
fn for_each_tuple(n: usize, k: usize, mut visit: impl FnMut(&[u32])) {
    let mut t = vec![0u32; k];
    loop {
        visit(&t);
        let mut d = k;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            t[d] += 1;
            if (t[d] as usize) < n {
                break;
            }
            t[d] = 0;
        }
    }
}

pub fn is_congruence(a: &FiniteAlgebra, p: &Partition) -> Result<bool> {
    check_size(a, p)?;
    let pairs = p.pairs();
    for (op, o) in a.operations().iter().enumerate() {
        if o.arity == 0 {
            continue;
        }
        // Changing one coordinate at a time suffices by transitivity.
        let mut ok = true;
        for_each_tuple(a.size(), o.arity - 1, |rest| {
            if !ok {
                return;
            }
            for pos in 0..o.arity {
                for &(x, y) in &pairs {
                    let mut u: Vec<u32> = rest.to_vec();
                    u.insert(pos, x as u32);
                    let fx = a.eval_op(op, &u);
                    u[pos] = y as u32;
                    let fy = a.eval_op(op, &u);
                    if !p.related(fx as usize, fy as usize) {
                        ok = false;
                        return;
                    }
                }
            }
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The least congruence containing `base` and `pairs`.
pub fn cg_from(a: &FiniteAlgebra, base: &Partition, pairs: &[(usize, usize)]) -> Result<Partition> {
    check_size(a, base)?;
    let n = a.size();
    let mut uf = UnionFind::new(n);
    for (x, y) in base.pairs() {
        uf.union(x, y);
    }
    for &(x, y) in pairs {
        if x >= n || y >= n {
            return Err(Error::Validation(format!("pair ({x},{y}) outside carrier of size {n}")));
        }
        uf.union(x, y);
    }
    loop {
        let mut changed = false;
        for (op, o) in a.operations().iter().enumerate() {
            if o.arity == 0 {
                continue;
            }
            for_each_tuple(n, o.arity - 1, |rest| {
                for pos in 0..o.arity {
                    let mut u: Vec<u32> = rest.to_vec();
                    u.insert(pos, 0);
                    for x in 0..n {
                        for y in x + 1..n {
                            if uf.find(x) != uf.find(y) {
                                continue;
                            }
                            u[pos] = x as u32;
                            let fx = a.eval_op(op, &u) as usize;
                            u[pos] = y as u32;
                            let fy = a.eval_op(op, &u) as usize;
                            changed |= uf.union(fx, fy);
                        }
                    }
                }
            });
        }
        if !changed {
            break;
        }
    }
    Ok(Partition::from_uf(&mut uf))
}

pub fn cg(a: &FiniteAlgebra, pairs: &[(usize, usize)]) -> Result<Partition> {
    cg_from(a, &Partition::identity(a.size()), pairs)
}

pub fn join_in_con(a: &FiniteAlgebra, p: &Partition, q: &Partition) -> Result<Partition> {
    check_size(a, q)?;
    cg_from(a, p, &q.pairs())
}

/// Every set partition of `{0,…,n−1}` as a restricted-growth string, in
/// lexicographic order.
pub fn all_partitions(n: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    if n == 0 {
        out.push(Partition { blocks: Vec::new() });
        return out;
    }
    let mut rgs = vec![0u32; n];
    loop {
        out.push(Partition {
            blocks: rgs.clone(),
        });
        // Advance to the next restricted-growth string.
        let mut k = n - 1;
        loop {
            if k == 0 {
                return out;
            }
            let max_prefix = *rgs[..k].iter().max().unwrap();
            if rgs[k] <= max_prefix {
                rgs[k] += 1;
                for x in &mut rgs[k + 1..] {
                    *x = 0;
                }
                break;
            }
            k -= 1;
        }
    }
}

pub fn all_congruences(a: &FiniteAlgebra) -> Result<Vec<Partition>> {
    all_congruences_capped(a, DEFAULT_CON_CAP)
}

pub fn all_congruences_capped(a: &FiniteAlgebra, cap: usize) -> Result<Vec<Partition>> {
    if a.size() > cap {
        return Err(Error::Cap(format!(
            "congruence enumeration limited to size {cap}, algebra has {}",
            a.size()
        )));
    }
    let mut out = Vec::new();
    for p in all_partitions(a.size()) {
        if is_congruence(a, &p)? {
            out.push(p);
        }
    }
    Ok(out)
}

pub const DEFAULT_PC_CAP: usize = 1 << 22;

/// A union-find over the elements discovered so far.
#[derive(Clone, Debug)]
pub struct PartialCongruence {
    ids: FxHashMap<Element, usize>,
    elems: Vec<Element>,
    uf: UnionFind,
    cap: usize,
}

impl Default for PartialCongruence {
    fn default() -> Self {
        Self::new()
    }
}

impl PartialCongruence {
    pub fn new() -> Self {
        Self::with_cap(DEFAULT_PC_CAP)
    }

    pub fn with_cap(cap: usize) -> Self {
        PartialCongruence {
            ids: FxHashMap::default(),
            elems: Vec::new(),
            uf: UnionFind::new(0),
            cap,
        }
    }

    fn id(&mut self, e: &Element) -> Result<usize> {
        if let Some(&id) = self.ids.get(e) {
            return Ok(id);
        }
        if self.elems.len() >= self.cap {
            return Err(Error::Cap(format!(
                "partial congruence limited to {} elements",
                self.cap
            )));
        }
        let id = self.uf.push();
        self.elems.push(e.clone());
        self.ids.insert(e.clone(), id);
        Ok(id)
    }

    pub fn discover(&mut self, e: &Element) -> Result<()> {
        self.id(e).map(|_| ())
    }

    /// Returns true if two classes were merged.
    pub fn union(&mut self, x: &Element, y: &Element) -> Result<bool> {
        let (a, b) = (self.id(x)?, self.id(y)?);
        Ok(self.uf.union(a, b))
    }

    pub fn related(&self, x: &Element, y: &Element) -> bool {
        if x == y {
            return true;
        }
        match (self.ids.get(x), self.ids.get(y)) {
            (Some(&a), Some(&b)) => self.uf.find_const(a) == self.uf.find_const(b),
            _ => false,
        }
    }

    pub fn elements(&self) -> &[Element] {
        &self.elems
    }

    /// Classes with at least two members, members in discovery order, classes
    /// ordered by first member.
    pub fn classes(&self) -> Vec<Vec<Element>> {
        let mut by_root: FxHashMap<usize, usize> = FxHashMap::default();
        let mut out: Vec<Vec<Element>> = Vec::new();
        for (k, e) in self.elems.iter().enumerate() {
            let root = self.uf.find_const(k);
            let slot = *by_root.entry(root).or_insert_with(|| {
                out.push(Vec::new());
                out.len() - 1
            });
            out[slot].push(e.clone());
        }
        out.retain(|c| c.len() > 1);
        out
    }

    pub fn class_of(&self, x: &Element) -> Vec<Element> {
        match self.ids.get(x) {
            None => vec![x.clone()],
            Some(&a) => {
                let root = self.uf.find_const(a);
                self.elems
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| self.uf.find_const(*k) == root)
                    .map(|(_, e)| e.clone())
                    .collect()
            }
        }
    }

    /// Ordered pairs `(x, y)` of related discovered elements, reflexive ones
    /// included, in discovery order.
    pub fn related_pairs(&self) -> Vec<(Element, Element)> {
        let mut out = Vec::new();
        for (a, x) in self.elems.iter().enumerate() {
            for (b, y) in self.elems.iter().enumerate() {
                if self.uf.find_const(a) == self.uf.find_const(b) {
                    out.push((x.clone(), y.clone()));
                }
            }
        }
        out
    }

    /// Adds images of componentwise-related tuples over `ambient` until stable.
    pub fn close(&mut self, alg: &dyn ComputableAlgebra, ambient: &[Element]) -> Result<()> {
        let ambient: Vec<Element> = {
            let mut seen = std::collections::HashSet::new();
            ambient.iter().filter(|e| seen.insert(*e)).cloned().collect()
        };
        loop {
            let mut changed = false;
            for (op, sig) in alg.signature().iter().enumerate() {
                if sig.arity == 0 {
                    continue;
                }
                let m = ambient.len();
                // Related pairs within the ambient set.
                let mut rel = Vec::new();
                for x in 0..m {
                    for y in 0..m {
                        if x != y && self.related(&ambient[x], &ambient[y]) {
                            rel.push((x, y));
                        }
                    }
                }
                if rel.is_empty() {
                    continue;
                }
                // Differing in one coordinate at a time suffices by transitivity.
                let mut found = Vec::new();
                for_each_tuple(m, sig.arity - 1, |rest| {
                    for pos in 0..sig.arity {
                        for &(x, y) in &rel {
                            let mut u: Vec<Element> = rest.iter().map(|&k| ambient[k as usize].clone()).collect();
                            u.insert(pos, ambient[x].clone());
                            let fx = alg.eval(op, &u);
                            u[pos] = ambient[y].clone();
                            let fy = alg.eval(op, &u);
                            if fx != fy {
                                found.push((fx, fy));
                            }
                        }
                    }
                });
                for (fx, fy) in found {
                    changed |= self.union(&fx, &fy)?;
                }
            }
            if !changed {
                return Ok(());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Operation;
    use crate::computable::an_algebra;

    fn unary_free(n: usize) -> FiniteAlgebra {
        FiniteAlgebra::new("set", n, vec![]).unwrap()
    }

    fn meet2() -> FiniteAlgebra {
        FiniteAlgebra::new(
            "meet2",
            2,
            vec![Operation {
                symbol: "meet".into(),
                arity: 2,
                table: vec![0, 0, 0, 1],
            }],
        )
        .unwrap()
    }

    fn bell(n: usize) -> usize {
        // Bell triangle.
        let mut row = vec![1usize];
        for _ in 1..=n {
            let mut next = vec![*row.last().unwrap()];
            for x in &row {
                next.push(next.last().unwrap() + x);
            }
            row = next;
        }
        row[0]
    }

    #[test]
    fn partitions_are_counted_by_bell_numbers() {
        for n in 0..=8 {
            assert_eq!(all_partitions(n).len(), bell(n), "n={n}");
        }
        assert_eq!(bell(8), 4140);
        let ps = all_partitions(4);
        assert!(ps.windows(2).all(|w| w[0].block_ids() < w[1].block_ids()));
    }

    #[test]
    fn text_form() {
        let p = Partition::parse("[[0,1],[2],[3,4,5]]").unwrap();
        assert_eq!(p.to_string(), "[[0,1],[2],[3,4,5]]");
        let q = Partition::parse("[ [2], [1,0] ]").unwrap();
        assert_eq!(q.to_string(), "[[0,1],[2]]");
        for bad in ["", "[", "[[0],[0]]", "[[0],[2]]", "[[0],]", "[[a]]", "[[0][1]]"] {
            assert!(Partition::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn order_and_meet() {
        let p = Partition::parse("[[0,1],[2],[3]]").unwrap();
        let one = Partition::total(4);
        let zero = Partition::identity(4);
        assert!(zero.le(&p) && p.le(&one) && !one.le(&p));
        assert_eq!(meet(&p, &one), p);
        assert_eq!(meet(&p, &zero), zero);
    }

    #[test]
    fn cg_on_the_semilattice() {
        let a = meet2();
        assert_eq!(cg(&a, &[]).unwrap(), Partition::identity(2));
        assert_eq!(cg(&a, &[(0, 1)]).unwrap(), Partition::total(2));
        assert_eq!(all_congruences(&a).unwrap().len(), 2);
        assert_eq!(all_congruences(&unary_free(2)).unwrap().len(), 2);
        assert!(all_congruences(&unary_free(9)).is_err());
    }

    #[test]
    fn pc_basics() {
        let mut pc = PartialCongruence::new();
        let (x, y) = (Element::r(0, 0), Element::r(2, 0));
        assert!(!pc.related(&x, &y));
        assert!(pc.related(&x, &x));
        pc.union(&x, &y).unwrap();
        assert!(pc.related(&y, &x));
        let mut small = PartialCongruence::with_cap(1);
        assert!(small.union(&x, &y).unwrap_err().is_cap());
    }

    #[test]
    fn pc_close_on_a2() {
        let a = an_algebra(2).unwrap();
        let ambient = [
            Element::r(0, 0),
            Element::r(2, 0),
            Element::r(0, 1),
            Element::r(1, 1),
            Element::o(0, 0, &[false]),
        ];
        let mut pc = PartialCongruence::new();
        pc.union(&ambient[0], &ambient[1]).unwrap();
        pc.close(&a, &ambient).unwrap();
        assert!(pc.related(&Element::r(0, 1), &Element::r(1, 1)));
    }
}
