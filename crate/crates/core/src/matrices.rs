//! The algebra of matrices `M(θ_0,…,θ_{n−1})`: the subalgebra of `A^{2^n}`
//! generated by `gcube_i(x, y)` for `(x, y) ∈ θ_i`.

use crate::algebra::{Evaluator, FiniteAlgebra};
use crate::congruence::{is_congruence, Partition};
use crate::cube::{gcube, Cube};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::pool::ElemId;
use rustc_hash::FxHashMap;
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const DEFAULT_FINITE_CAP: u64 = 1 << 20;
pub const DEFAULT_BOUNDED_CAP: usize = 1_000_000;

/// How a stored cube was obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance<V> {
    Generator { axis: usize, x: V, y: V },
    Apply { op: usize, args: Box<[u32]> },
}

fn render_provenance<V: std::fmt::Display>(p: &Provenance<V>, symbols: &[String]) -> String {
    match p {
        Provenance::Generator { axis, x, y } => format!("gcube {axis} ({x}, {y})"),
        Provenance::Apply { op, args } => {
            let mut s = format!("{}(", symbols[*op]);
            for (k, a) in args.iter().enumerate() {
                if k > 0 {
                    s.push_str(", ");
                }
                write!(s, "#{a}").unwrap();
            }
            s.push(')');
            s
        }
    }
}

/// `N^exp`, or `None` on overflow.
fn checked_space(n: usize, exp: usize) -> Option<u64> {
    (n as u64).checked_pow(u32::try_from(exp).ok()?)
}

/// A closed set of cubes over a finite algebra.
#[derive(Clone, Debug)]
pub struct FiniteMatrices {
    dim: usize,
    verts: Vec<u32>,
    provenance: Vec<Provenance<u32>>,
    generators: usize,
}

impl FiniteMatrices {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    pub fn generator_count(&self) -> usize {
        self.generators
    }

    pub fn cube(&self, k: usize) -> &[u32] {
        let v = 1 << self.dim;
        &self.verts[k * v..(k + 1) * v]
    }

    pub fn cubes(&self) -> impl Iterator<Item = &[u32]> {
        self.verts.chunks_exact(1 << self.dim)
    }

    pub fn to_cube(&self, k: usize) -> Cube<u32> {
        Cube::new(self.dim, self.cube(k).to_vec()).expect("stored cubes have 2^dim vertices")
    }

    pub fn provenance(&self, k: usize) -> &Provenance<u32> {
        &self.provenance[k]
    }

    /// One cube per line, vertices in index order, followed by provenance.
    pub fn dump(&self, alg: &FiniteAlgebra) -> String {
        let symbols: Vec<String> = alg.operations().iter().map(|o| o.symbol.clone()).collect();
        let mut out = String::new();
        for k in 0..self.len() {
            let cube = self.cube(k).iter().map(u32::to_string).collect::<Vec<_>>().join(",");
            writeln!(out, "#{k}: {cube} <- {}", render_provenance(&self.provenance[k], &symbols)).unwrap();
        }
        out
    }
}

/// A generator cube with the axis and pair it came from.
pub type Generator = (Cube<u32>, usize, u32, u32);

/// Generator cubes with their axis and pair, deduplicated, axis-major order.
pub fn matrix_generators_with_pairs(
    alg: &FiniteAlgebra,
    thetas: &[Partition],
) -> Result<Vec<Generator>> {
    if thetas.is_empty() {
        return Err(Error::Validation("at least one congruence is required".into()));
    }
    for (i, t) in thetas.iter().enumerate() {
        if !is_congruence(alg, t)? {
            return Err(Error::Validation(format!("argument {i} ({t}) is not a congruence")));
        }
    }
    let n = thetas.len();
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (i, t) in thetas.iter().enumerate() {
        for x in 0..alg.size() {
            for y in 0..alg.size() {
                if t.related(x, y) {
                    let c = gcube(n, i, x as u32, y as u32)?;
                    if seen.insert(c.verts().to_vec()) {
                        out.push((c, i, x as u32, y as u32));
                    }
                }
            }
        }
    }
    Ok(out)
}

pub fn matrix_generators(alg: &FiniteAlgebra, thetas: &[Partition]) -> Result<Vec<Cube<u32>>> {
    Ok(matrix_generators_with_pairs(alg, thetas)?
        .into_iter()
        .map(|(c, ..)| c)
        .collect())
}

enum Index {
    Dense(Vec<u32>),
    Sparse(FxHashMap<u64, u32>),
}

impl Index {
    fn get(&self, code: u64) -> Option<u32> {
        match self {
            Index::Dense(v) => Some(v[code as usize]).filter(|&k| k != u32::MAX),
            Index::Sparse(m) => m.get(&code).copied(),
        }
    }

    fn insert(&mut self, code: u64, k: u32) {
        match self {
            Index::Dense(v) => v[code as usize] = k,
            Index::Sparse(m) => {
                m.insert(code, k);
            }
        }
    }
}

struct Closure<'a> {
    alg: &'a FiniteAlgebra,
    v: usize,
    pow: Vec<u64>,
    out: FiniteMatrices,
    index: Index,
    space: u64,
    /// Per axis, the block label of each carrier element under θ_axis.
    labels: Vec<Vec<u32>>,
    /// Per operation and value z, the flattened argument tuples mapping to z.
    preimages: Vec<Vec<Vec<u32>>>,
}

impl Closure<'_> {
    fn encode(&self, verts: &[u32]) -> u64 {
        verts.iter().zip(&self.pow).map(|(&x, &p)| x as u64 * p).sum()
    }

    fn full(&self) -> bool {
        self.out.len() as u64 == self.space
    }

    fn insert(&mut self, verts: &[u32], prov: Provenance<u32>) -> bool {
        let code = self.encode(verts);
        if self.index.get(code).is_some() {
            return false;
        }
        self.index.insert(code, self.out.len() as u32);
        self.out.verts.extend_from_slice(verts);
        self.out.provenance.push(prov);
        true
    }

    fn decode(&self, mut code: u64, out: &mut Vec<u32>) {
        let n = self.alg.size() as u64;
        out.clear();
        for _ in 0..self.v {
            out.push((code % n) as u32);
            code /= n;
        }
    }

    /// Membership in the upper bound: every axis-i line is a θ_i pair.
    fn in_upper(&self, verts: &[u32]) -> bool {
        self.labels.iter().enumerate().all(|(axis, lab)| {
            let bit = 1 << axis;
            (0..self.v)
                .filter(|f| f & bit == 0)
                .all(|f| lab[verts[f] as usize] == lab[verts[f | bit] as usize])
        })
    }

    /// Codes of upper-bound cubes not yet generated.
    fn missing(&self) -> Vec<u64> {
        let mut buf = Vec::with_capacity(self.v);
        (0..self.space)
            .filter(|&c| {
                self.index.get(c).is_none() && {
                    self.decode(c, &mut buf);
                    self.in_upper(&buf)
                }
            })
            .collect()
    }

    /// Number of argument tuples a backward pass would test for `codes`.
    fn backward_cost(&self, ops: &[usize], codes: &[u64]) -> f64 {
        let mut buf = Vec::with_capacity(self.v);
        let mut total = 0.0;
        for &c in codes {
            self.decode(c, &mut buf);
            for &op in ops {
                let ar = self.alg.operations()[op].arity;
                total += buf
                    .iter()
                    .map(|&z| (self.preimages[op][z as usize].len() / ar) as f64)
                    .product::<f64>();
            }
        }
        total
    }

    /// Adds every missing cube that is the image of a tuple of current
    /// elements. Afterwards all tuples over the current elements are covered.
    fn backward_pass(&mut self, ops: &[usize], codes: &[u64]) {
        let mut target = Vec::with_capacity(self.v);
        for &c in codes {
            self.decode(c, &mut target);
            'ops: for &op in ops {
                let ar = self.alg.operations()[op].arity;
                let pre: Vec<&[u32]> = target.iter().map(|&z| &self.preimages[op][z as usize][..]).collect();
                if pre.iter().any(|p| p.is_empty()) {
                    continue;
                }
                // Per vertex, the code contribution of each argument for each choice.
                let contrib: Vec<Vec<u64>> = (0..self.v)
                    .map(|f| pre[f].iter().map(|&x| x as u64 * self.pow[f]).collect())
                    .collect();
                let mut choice = vec![0usize; self.v];
                let mut codes: Vec<u64> = (0..ar).map(|j| (0..self.v).map(|f| contrib[f][j]).sum()).collect();
                let mut args = vec![0u32; ar];
                loop {
                    let found = (0..ar).all(|j| match self.index.get(codes[j]) {
                        Some(k) => {
                            args[j] = k;
                            true
                        }
                        None => false,
                    });
                    if found {
                        let verts = target.clone();
                        self.insert(&verts, Provenance::Apply { op, args: args.clone().into() });
                        break 'ops;
                    }
                    let mut f = 0;
                    while f < self.v {
                        let old = choice[f] * ar;
                        choice[f] += 1;
                        let new = if choice[f] * ar < pre[f].len() { choice[f] * ar } else { 0 };
                        for j in 0..ar {
                            codes[j] = codes[j] - contrib[f][old + j] + contrib[f][new + j];
                        }
                        if new != 0 {
                            break;
                        }
                        choice[f] = 0;
                        f += 1;
                    }
                    if f == self.v {
                        break;
                    }
                }
            }
        }
    }

    /// Repeats backward passes until one adds nothing. At that point no
    /// missing cube has a preimage tuple in the current set, and since the
    /// upper bound is a subuniverse the set is closed.
    fn backward_fixpoint(&mut self, ops: &[usize], mut codes: Vec<u64>) {
        loop {
            let before = self.out.len();
            self.backward_pass(ops, &codes);
            if self.out.len() == before {
                return;
            }
            codes.retain(|&c| self.index.get(c).is_none());
        }
    }

    fn apply(&self, op: usize, args: &[usize], scratch: &mut Vec<u32>, out: &mut Vec<u32>) {
        out.clear();
        for f in 0..self.v {
            scratch.clear();
            scratch.extend(args.iter().map(|&a| self.out.verts[a * self.v + f]));
            out.push(self.alg.eval_op(op, scratch));
        }
    }
}

/// Closure of the generators under all operations applied vertex-wise.
pub fn generate_full(alg: &FiniteAlgebra, thetas: &[Partition]) -> Result<FiniteMatrices> {
    generate_full_capped(alg, thetas, DEFAULT_FINITE_CAP)
}

pub fn generate_full_capped(alg: &FiniteAlgebra, thetas: &[Partition], cap: u64) -> Result<FiniteMatrices> {
    generate_full_inner(alg, thetas, cap, None)
}

/// `force_backward` hands over to backward passes at that element regardless of cost.
fn generate_full_inner(
    alg: &FiniteAlgebra,
    thetas: &[Partition],
    cap: u64,
    force_backward: Option<usize>,
) -> Result<FiniteMatrices> {
    let n = thetas.len();
    let v = 1usize
        .checked_shl(n as u32)
        .filter(|_| n < 32)
        .ok_or_else(|| Error::Cap(format!("dimension {n} too large")))?;
    let space = checked_space(alg.size(), v)
        .filter(|&s| s <= cap)
        .ok_or_else(|| {
            Error::Cap(format!(
                "matrix space {}^{v} exceeds the cube cap {cap}",
                alg.size()
            ))
        })?;
    let gens = matrix_generators_with_pairs(alg, thetas)?;
    let pow: Vec<u64> = (0..v).map(|f| (alg.size() as u64).pow(f as u32)).collect();
    let index = if space <= 1 << 25 {
        Index::Dense(vec![u32::MAX; space as usize])
    } else {
        Index::Sparse(FxHashMap::default())
    };
    let mut cl = Closure {
        alg,
        v,
        pow,
        out: FiniteMatrices {
            dim: n,
            verts: Vec::new(),
            provenance: Vec::new(),
            generators: 0,
        },
        index,
        space,
        labels: thetas.iter().map(|t| t.block_ids().to_vec()).collect(),
        preimages: alg.operations().iter().enumerate().map(|(op, o)| preimage_lists(alg, op, o.arity)).collect(),
    };
    for (c, axis, x, y) in &gens {
        cl.insert(c.verts(), Provenance::Generator { axis: *axis, x: *x, y: *y });
    }
    cl.out.generators = cl.out.len();
    // Nullary operations contribute constant cubes.
    for (op, o) in alg.operations().iter().enumerate() {
        if o.arity == 0 {
            let c = vec![alg.eval_op(op, &[]); v];
            cl.insert(&c, Provenance::Apply { op, args: Box::new([]) });
        }
    }
    let positive: Vec<usize> = (0..alg.operations().len())
        .filter(|&op| alg.operations()[op].arity > 0)
        .collect();
    if positive.len() == 1 && alg.is_associative(positive[0]) {
        close_associative(&mut cl, positive[0]);
    } else {
        close_semi_naive(&mut cl, &positive, force_backward);
    }
    Ok(cl.out)
}

fn preimage_lists(alg: &FiniteAlgebra, op: usize, arity: usize) -> Vec<Vec<u32>> {
    let n = alg.size();
    let mut out = vec![Vec::new(); n];
    let mut t = vec![0u32; arity];
    for mut idx in 0..n.pow(arity as u32) {
        for d in (0..arity).rev() {
            t[d] = (idx % n) as u32;
            idx /= n;
        }
        out[alg.eval_op(op, &t) as usize].extend_from_slice(&t);
    }
    out
}

/// Every element of a semigroup generated by atoms is a right-multiplied
/// product of atoms, so multiplying each element by each atom suffices.
fn close_associative(cl: &mut Closure, op: usize) {
    let atoms = cl.out.len();
    let (mut scratch, mut img) = (Vec::new(), Vec::new());
    let mut k = 0;
    while k < cl.out.len() && !cl.full() {
        for a in 0..atoms {
            cl.apply(op, &[k, a], &mut scratch, &mut img);
            let img_c = std::mem::take(&mut img);
            cl.insert(&img_c, Provenance::Apply { op, args: Box::new([k as u32, a as u32]) });
            img = img_c;
        }
        k += 1;
    }
}

/// Processes elements in insertion order, applying each operation to tuples
/// whose largest index is the current element.
///
/// When the cubes still missing from the upper bound are few enough, the
/// forward loop hands over to backward passes, which look up preimage tuples
/// of missing cubes directly.
fn close_semi_naive(cl: &mut Closure, ops: &[usize], force_backward: Option<usize>) {
    let (mut scratch, mut img) = (Vec::new(), Vec::new());
    let mut k = 0;
    let mut checkpoint = 256;
    let backward_ok = matches!(cl.index, Index::Dense(_));
    while k < cl.out.len() && !cl.full() {
        if backward_ok && force_backward == Some(k) {
            let codes = cl.missing();
            cl.backward_fixpoint(ops, codes);
            return;
        }
        if backward_ok && force_backward.is_none() && k == checkpoint {
            checkpoint *= 2;
            let len = cl.out.len() as f64;
            let remaining: f64 = ops
                .iter()
                .map(|&op| {
                    let ar = cl.alg.operations()[op].arity as i32;
                    len.powi(ar) - (k as f64).powi(ar)
                })
                .sum();
            if (cl.space as f64) * (cl.v as f64) < remaining {
                let codes = cl.missing();
                if cl.backward_cost(ops, &codes) < remaining {
                    cl.backward_fixpoint(ops, codes);
                    return;
                }
            }
        }
        for &op in ops {
            let arity = cl.alg.operations()[op].arity;
            // p = first position holding k; earlier positions range below k.
            for p in 0..arity {
                let mut t = vec![0usize; arity];
                t[p] = k;
                let bound = |d: usize| if d < p { k } else { k + 1 };
                if (0..arity).any(|d| d != p && bound(d) == 0) {
                    continue;
                }
                loop {
                    cl.apply(op, &t, &mut scratch, &mut img);
                    let img_c = std::mem::take(&mut img);
                    let args: Box<[u32]> = t.iter().map(|&x| x as u32).collect();
                    cl.insert(&img_c, Provenance::Apply { op, args });
                    img = img_c;
                    if cl.full() {
                        return;
                    }
                    // Odometer over the free positions.
                    let mut d = arity;
                    let advanced = loop {
                        if d == 0 {
                            break false;
                        }
                        d -= 1;
                        if d == p {
                            continue;
                        }
                        t[d] += 1;
                        if t[d] < bound(d) {
                            break true;
                        }
                        t[d] = 0;
                    };
                    if !advanced {
                        break;
                    }
                }
            }
        }
        k += 1;
    }
}

/// Bounded generation over a computable algebra.
#[derive(Clone, Debug)]
pub struct BoundedMatrices {
    dim: usize,
    verts: Vec<ElemId>,
    provenance: Vec<Provenance<ElemId>>,
    level_ends: Vec<usize>,
}

impl BoundedMatrices {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.provenance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.provenance.is_empty()
    }

    /// Depth reached.
    pub fn depth(&self) -> usize {
        self.level_ends.len() - 1
    }

    /// Number of cubes in `X_k`.
    pub fn level_end(&self, k: usize) -> usize {
        self.level_ends[k]
    }

    pub fn cube(&self, k: usize) -> &[ElemId] {
        let v = 1 << self.dim;
        &self.verts[k * v..(k + 1) * v]
    }

    pub fn cubes(&self) -> impl Iterator<Item = &[ElemId]> {
        self.verts.chunks_exact(1 << self.dim)
    }

    pub fn provenance(&self, k: usize) -> &Provenance<ElemId> {
        &self.provenance[k]
    }

    pub fn to_cube(&self, ev: &Evaluator, k: usize) -> Cube<Element> {
        Cube::new(self.dim, self.cube(k).iter().map(|&id| ev.get(id).clone()).collect())
            .expect("stored cubes have 2^dim vertices")
    }

    /// Full derivation of cube `k` down to generators.
    pub fn explain(&self, ev: &Evaluator, k: usize) -> String {
        let mut out = String::new();
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![k];
        while let Some(c) = stack.pop() {
            if !seen.insert(c) {
                continue;
            }
            if let Provenance::Apply { args, .. } = &self.provenance[c] {
                stack.extend(args.iter().map(|&a| a as usize));
            }
        }
        for c in seen.into_iter().rev() {
            writeln!(out, "{}", self.dump_line(ev, c)).unwrap();
        }
        out
    }

    fn dump_line(&self, ev: &Evaluator, k: usize) -> String {
        let symbols: Vec<String> = ev.algebra().signature().iter().map(|s| s.symbol.clone()).collect();
        let prov = match &self.provenance[k] {
            Provenance::Generator { axis, x, y } => Provenance::Generator {
                axis: *axis,
                x: ev.get(*x).clone(),
                y: ev.get(*y).clone(),
            },
            Provenance::Apply { op, args } => Provenance::Apply {
                op: *op,
                args: args.clone(),
            },
        };
        format!("#{k}: {} <- {}", self.to_cube(ev, k), render_provenance(&prov, &symbols))
    }

    pub fn dump(&self, ev: &Evaluator) -> String {
        let mut out = String::new();
        for k in 0..self.len() {
            writeln!(out, "{}", self.dump_line(ev, k)).unwrap();
        }
        out
    }
}

/// Restricts bounded generation to a family of cubes closed under taking
/// arguments: whenever an image is admitted, so is every argument cube that
/// produced it. Generation inside such a family is exact for its members.
pub trait Slice {
    fn admits(&self, ev: &Evaluator, cube: &[ElemId]) -> bool;

    /// Whether [`Slice::keys`] constrains argument tuples.
    fn keyed(&self) -> bool {
        false
    }

    /// Join keys of an admitted cube. For a keyed slice, a tuple whose
    /// members share no key never produces an admitted image, so it is skipped.
    fn keys(&self, _ev: &Evaluator, _cube: &[ElemId]) -> Vec<u64> {
        Vec::new()
    }
}

/// Tuples over positions `0..end` with at least one position `>= start`,
/// ordered by the first such position and then lexicographically.
struct NewTuples {
    arity: usize,
    start: usize,
    end: usize,
    p: usize,
    t: Vec<usize>,
    fresh: bool,
}

impl NewTuples {
    fn new(arity: usize, start: usize, end: usize) -> Self {
        NewTuples {
            arity,
            start,
            end,
            p: 0,
            t: Vec::new(),
            fresh: true,
        }
    }

    fn lo(&self, d: usize) -> usize {
        if d == self.p {
            self.start
        } else {
            0
        }
    }

    fn hi(&self, d: usize) -> usize {
        if d < self.p {
            self.start
        } else {
            self.end
        }
    }

    fn next(&mut self) -> Option<&[usize]> {
        loop {
            if self.p >= self.arity || self.start >= self.end {
                return None;
            }
            if self.fresh {
                self.fresh = false;
                if (0..self.arity).any(|d| self.lo(d) >= self.hi(d)) {
                    self.p += 1;
                    self.fresh = true;
                    continue;
                }
                self.t = (0..self.arity).map(|d| self.lo(d)).collect();
                return Some(&self.t);
            }
            let mut d = self.arity;
            let advanced = loop {
                if d == 0 {
                    break false;
                }
                d -= 1;
                self.t[d] += 1;
                if self.t[d] < self.hi(d) {
                    break true;
                }
                self.t[d] = self.lo(d);
            };
            if advanced {
                return Some(&self.t);
            }
            self.p += 1;
            self.fresh = true;
        }
    }
}

/// `X_0` = gcubes of the seed pairs, `X_{k+1} = X_k ∪ {op(c̄) : c̄ ∈ X_k^arity}`.
pub fn generate_bounded(
    ev: &mut Evaluator,
    seeds: &[Vec<(Element, Element)>],
    depth: usize,
    cap: usize,
) -> Result<BoundedMatrices> {
    generate_sliced(ev, seeds, depth, cap, None)
}

struct Store {
    out: BoundedMatrices,
    index: FxHashMap<Box<[ElemId]>, u32>,
    groups: BTreeMap<u64, Vec<usize>>,
    cap: usize,
}

impl Store {
    fn insert(
        &mut self,
        ev: &Evaluator,
        slice: Option<&dyn Slice>,
        cube: &[ElemId],
        prov: Provenance<ElemId>,
    ) -> Result<()> {
        if self.index.contains_key(cube) {
            return Ok(());
        }
        if self.out.len() >= self.cap {
            let built = self.out.level_ends.len();
            return Err(Error::Cap(format!(
                "cube cap {} exceeded while building depth {built} (depth {} complete)",
                self.cap,
                built.saturating_sub(1)
            )));
        }
        let k = self.out.len();
        self.index.insert(cube.into(), k as u32);
        self.out.verts.extend_from_slice(cube);
        self.out.provenance.push(prov);
        if let Some(s) = slice.filter(|s| s.keyed()) {
            let mut keys = s.keys(ev, cube);
            keys.sort_unstable();
            keys.dedup();
            for key in keys {
                self.groups.entry(key).or_default().push(k);
            }
        }
        Ok(())
    }
}

pub fn generate_sliced(
    ev: &mut Evaluator,
    seeds: &[Vec<(Element, Element)>],
    depth: usize,
    cap: usize,
    slice: Option<&dyn Slice>,
) -> Result<BoundedMatrices> {
    let n = seeds.len();
    if n == 0 || n > 20 {
        return Err(Error::Validation(format!("unsupported matrix dimension {n}")));
    }
    let v = 1usize << n;
    let mut st = Store {
        out: BoundedMatrices {
            dim: n,
            verts: Vec::new(),
            provenance: Vec::new(),
            level_ends: Vec::new(),
        },
        index: FxHashMap::default(),
        groups: BTreeMap::new(),
        cap,
    };
    for (axis, pairs) in seeds.iter().enumerate() {
        for (x, y) in pairs {
            let (xi, yi) = (ev.intern(x.clone()), ev.intern(y.clone()));
            let c = gcube(n, axis, xi, yi)?;
            if slice.is_none_or(|s| s.admits(ev, c.verts())) {
                st.insert(ev, slice, c.verts(), Provenance::Generator { axis, x: xi, y: yi })?;
            }
        }
    }
    st.out.level_ends.push(st.out.len());
    let keyed = slice.is_some_and(|s| s.keyed());
    let sig: Vec<usize> = ev.algebra().signature().iter().map(|s| s.arity).collect();
    let mut img = vec![ElemId(0); v];
    let mut scratch = Vec::new();
    let mut args = Vec::new();
    for level in 0..depth {
        let end = st.out.len();
        let start = if level == 0 { 0 } else { st.out.level_ends[level - 1] };
        // Candidate member lists: everything, or one list per join key.
        let lists: Vec<Vec<usize>> = if keyed {
            st.groups
                .values()
                .map(|g| g.iter().copied().take_while(|&k| k < end).collect::<Vec<_>>())
                .filter(|g| g.last().is_some_and(|&k| k >= start))
                .collect()
        } else {
            vec![(0..end).collect()]
        };
        for list in &lists {
            let old = list.partition_point(|&k| k < start);
            for (op, &arity) in sig.iter().enumerate() {
                if arity == 0 {
                    continue;
                }
                let mut tuples = NewTuples::new(arity, old, list.len());
                while let Some(t) = tuples.next() {
                    args.clear();
                    args.extend(t.iter().map(|&p| list[p]));
                    for (f, slot) in img.iter_mut().enumerate() {
                        scratch.clear();
                        scratch.extend(args.iter().map(|&c| st.out.verts[c * v + f]));
                        *slot = ev.eval(op, &scratch);
                    }
                    if slice.is_none_or(|s| s.admits(ev, &img)) {
                        let prov = Provenance::Apply {
                            op,
                            args: args.iter().map(|&x| x as u32).collect(),
                        };
                        st.insert(ev, slice, &img, prov)?;
                    }
                }
            }
        }
        st.out.level_ends.push(st.out.len());
    }
    Ok(st.out)
}
