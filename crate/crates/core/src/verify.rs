//! Bounded checks of the structural lemmas about `A_n` and of the theorem
//! witnesses built on them.
//!
//! The infinite statements are probed on finite windows: R-elements with
//! bounded indices, a few O- and G-elements, and generation to a fixed depth.
//! Where a family of cubes is closed under taking arguments (an image lies in
//! it only if every argument cube does), generation runs inside the family,
//! which is exact for its members and far smaller than the full level.

use crate::algebra::{ComputableAlgebra, Evaluator};
use crate::commutator::lower_bound_from_pairs;
use crate::computable::{an_algebra, sec3_algebra, AnAlgebra};
use crate::congruence::PartialCongruence;
use crate::cube::{gcube, gcube_axis, line_pairs, Cube};
use crate::element::Element;
use crate::error::{Error, Result};
use crate::matrices::{generate_bounded, generate_sliced, BoundedMatrices, Slice};
use crate::nat::Nat;
use crate::pool::ElemId;
use rustc_hash::{FxHashMap, FxHasher};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::time::{Duration, Instant};

/// How many counterexamples a log spells out; the rest are only counted.
const MAX_SHOWN: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Bounds {
    pub i_max: u64,
    pub j_max: u64,
    pub depth: usize,
    /// Extra G-elements, `t(r⁰_{2k+1}, r⁰_0, …, r⁰_0)` for `k < g_samples`.
    pub g_samples: usize,
    pub cube_cap: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            i_max: 2,
            j_max: 2,
            depth: 2,
            g_samples: 2,
            cube_cap: 1_000_000,
        }
    }
}

impl fmt::Display for Bounds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "i_max={} j_max={} depth={} g_samples={} cube_cap={}",
            self.i_max, self.j_max, self.depth, self.g_samples, self.cube_cap
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerdictLog {
    pub lemma: String,
    pub n: usize,
    pub bounds: Bounds,
    pub instances: u64,
    pub counterexample_count: u64,
    /// The first few counterexamples in full.
    pub counterexamples: Vec<String>,
    pub report: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl VerdictLog {
    fn new(lemma: &str, n: usize, bounds: &Bounds) -> Self {
        VerdictLog {
            lemma: lemma.into(),
            n,
            bounds: *bounds,
            instances: 0,
            counterexample_count: 0,
            counterexamples: Vec::new(),
            report: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    pub fn passed(&self) -> bool {
        self.counterexample_count == 0
    }

    fn fail(&mut self, what: impl FnOnce() -> String) {
        self.counterexample_count += 1;
        if self.counterexamples.len() < MAX_SHOWN {
            self.counterexamples.push(what());
        }
    }

    fn note(&mut self, line: impl Into<String>) {
        self.report.push(line.into());
    }

    /// Canonical text form. Wall-clock time is left out so reruns compare equal.
    pub fn render(&self) -> String {
        let mut out = format!(
            "lemma: {} (n={})\nbounds: {}\ninstances: {}\ncounterexamples: {}\n",
            self.lemma, self.n, self.bounds, self.instances, self.counterexample_count
        );
        for c in &self.counterexamples {
            out.push_str("  ! ");
            out.push_str(&c.replace('\n', "\n    "));
            out.push('\n');
        }
        for line in &self.report {
            out.push_str("  ");
            out.push_str(line);
            out.push('\n');
        }
        out.push_str(if self.passed() { "verdict: pass\n" } else { "verdict: fail\n" });
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

fn finish(mut log: VerdictLog, t0: Instant) -> VerdictLog {
    log.elapsed = t0.elapsed();
    log
}

/// `(i div 4, j, i mod 4)` for `r^j_i` with `i ≡ 0, 2 (mod 4)`: the block in
/// which the element can take part in an R- or O-valued evaluation.
fn block(e: &Element) -> Option<(Nat, Nat, u8)> {
    match e {
        Element::R { i, j } => {
            let (q, r) = i.div_rem4();
            (r % 2 == 0).then(|| (q, j.clone(), r))
        }
        _ => None,
    }
}

fn block_key(tag: u64, ids: impl Iterator<Item = ElemId>, ev: &Evaluator) -> Option<u64> {
    let mut h = FxHasher::default();
    tag.hash(&mut h);
    for id in ids {
        let (q, j, _) = block(ev.get(id))?;
        (q, j).hash(&mut h);
    }
    Some(h.finish())
}

fn is_r(ev: &Evaluator, id: ElemId) -> bool {
    ev.get(id).is_r()
}

fn r_sample(b: &Bounds) -> Vec<Element> {
    (0..=b.j_max)
        .flat_map(|j| (0..=4 * b.i_max + 3).map(move |i| Element::r(i, j)))
        .collect()
}

fn o_sample(n: usize, b: &Bounds) -> Vec<Element> {
    let mut out = Vec::new();
    for j in 0..=b.j_max {
        for i in 0..=b.i_max {
            for g in 0..1u64 << (n - 1) {
                let bits: Vec<bool> = (0..n - 1).map(|d| g >> d & 1 == 1).collect();
                out.push(Element::o(i, j, &bits));
            }
        }
    }
    out
}

/// Deterministic G-elements: S-terms over seed R-elements.
fn g_sample(a: &AnAlgebra, b: &Bounds) -> Vec<Element> {
    (0..b.g_samples as u64)
        .map(|k| {
            let mut args = vec![Element::r(0, 0); a.n()];
            args[0] = Element::r(2 * k + 1, 0);
            a.eval(0, &args)
        })
        .collect()
}

/// Seeds for generation: `r^j_i` with `i ≤ i_max`, `j ≤ j_max`, the first
/// `g_samples` O-elements in `(j, i, g)` order, and the G-sample.
pub fn seed_sample(a: &AnAlgebra, b: &Bounds) -> Vec<Element> {
    let mut out: Vec<Element> = (0..=b.j_max)
        .flat_map(|j| (0..=b.i_max).map(move |i| Element::r(i, j)))
        .collect();
    out.extend(o_sample(a.n(), b).into_iter().take(b.g_samples));
    out.extend(g_sample(a, b));
    out
}

/// Tuple sample: R-elements `r^j_i` with `i ≤ 4·i_max + 3`, the blocks
/// `o^j_{i,g}` with `i ≤ i_max`, and the G-sample.
pub fn sample(a: &AnAlgebra, b: &Bounds) -> Vec<Element> {
    let mut out = r_sample(b);
    out.extend(o_sample(a.n(), b));
    out.extend(g_sample(a, b));
    out
}

fn all_pairs(xs: &[Element]) -> Vec<(Element, Element)> {
    xs.iter()
        .flat_map(|x| xs.iter().map(move |y| (x.clone(), y.clone())))
        .collect()
}

fn render_tuple(ev: &Evaluator, ids: &[ElemId]) -> String {
    let parts: Vec<String> = ids.iter().map(|&id| ev.get(id).to_string()).collect();
    format!("t({})", parts.join(", "))
}

fn render_cube(ev: &Evaluator, ids: &[ElemId]) -> String {
    let parts: Vec<String> = ids.iter().map(|&id| ev.get(id).to_string()).collect();
    format!("[{}]", parts.join(", "))
}

fn decode(mut code: usize, base: usize, n: usize, out: &mut [usize]) {
    for slot in out.iter_mut().take(n).rev() {
        *slot = code % base;
        code /= base;
    }
}

/// How a collision `t(ā) = t(b̄)` with `ā ≠ b̄` is explained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Collision {
    /// The pattern allowed by the lemma: image in O, tuples agreeing except
    /// in the last place, which holds `r^j_{4i}` in one and `r^j_{4i+2}` in the other.
    OPattern,
    /// `r^{j+1}_{i+1}` is both `t(r^j_{4i+2}, …, r^j_{4i+2})` and
    /// `t(r^j_{4i+6}, …, r^j_{4i+6}, r^j_{4i+4})`.
    AdjacentBlocks,
    Unexplained,
}

/// Classifies a collision of `t` on `A_n`.
pub fn classify_collision(a: &[Element], b: &[Element], image: &Element) -> Collision {
    let n = a.len();
    let blocks = |x: &[Element]| x.iter().map(block).collect::<Option<Vec<_>>>();
    let (Some(ba), Some(bb)) = (blocks(a), blocks(b)) else {
        return Collision::Unexplained;
    };
    match image {
        Element::O { i, j, .. } => {
            let in_block = |x: &(Nat, Nat, u8)| x.0 == *i && x.1 == *j;
            let ok = ba.iter().chain(&bb).all(in_block)
                && a[..n - 1] == b[..n - 1]
                && ba[n - 1].2 != bb[n - 1].2;
            if ok {
                Collision::OPattern
            } else {
                Collision::Unexplained
            }
        }
        Element::R { i, j } => {
            // One side is the "low" pattern of block i, the other the
            // "all-ones" pattern of block i − 1.
            let low = |x: &[(Nat, Nat, u8)]| {
                x.iter().all(|e| e.0 == *i && e.1.succ() == *j)
                    && x[..n - 1].iter().all(|e| e.2 == 2)
                    && x[n - 1].2 == 0
            };
            let ones = |x: &[(Nat, Nat, u8)]| x.iter().all(|e| e.0.succ() == *i && e.1.succ() == *j && e.2 == 2);
            if (low(&ba) && ones(&bb)) || (low(&bb) && ones(&ba)) {
                Collision::AdjacentBlocks
            } else {
                Collision::Unexplained
            }
        }
        _ => Collision::Unexplained,
    }
}

/// Checks the three items about how `t` fails to be injective on all
/// `n`-tuples over the sample:
/// (1) `t(ā) ∈ R ∪ O` only for `ā ∈ R^n`;
/// (2) `t(ā) = t(b̄) ∉ O` forces `ā = b̄`;
/// (3) every collision is the O-pattern.
pub fn check_injectivity_lemma(n: usize, b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let a = an_algebra(n)?;
    let mut ev = Evaluator::new(&a);
    let mut log = VerdictLog::new("injectivity", n, b);
    let sample: Vec<ElemId> = sample(&a, b).into_iter().map(|e| ev.intern(e)).collect();
    let k = sample.len();
    let total = (k as u64)
        .checked_pow(n as u32)
        .filter(|&t| t <= b.cube_cap as u64 * 16)
        .ok_or_else(|| Error::Cap(format!("{k}^{n} tuples exceed the scan cap")))? as usize;
    let mut by_image: FxHashMap<ElemId, Vec<u32>> = FxHashMap::default();
    let mut digits = vec![0usize; n];
    let mut tuple = vec![ElemId(0); n];
    for code in 0..total {
        decode(code, k, n, &mut digits);
        for (slot, &d) in tuple.iter_mut().zip(&digits) {
            *slot = sample[d];
        }
        let img = ev.eval(0, &tuple);
        let special = matches!(ev.get(img), Element::R { .. } | Element::O { .. });
        if special && !tuple.iter().all(|&x| is_r(&ev, x)) {
            log.fail(|| format!("item 1: {} = {} has an argument outside R", render_tuple(&ev, &tuple), ev.get(img)));
        }
        by_image.entry(img).or_default().push(code as u32);
    }
    log.instances = total as u64;
    let mut groups: Vec<(ElemId, Vec<u32>)> = by_image.into_iter().filter(|(_, v)| v.len() > 1).collect();
    groups.sort_by_key(|(_, v)| v[0]);
    let (mut o_pat, mut adjacent, mut unexplained, mut outside_r) = (0u64, 0u64, 0u64, 0u64);
    let mut ta = vec![0usize; n];
    let mut tb = vec![0usize; n];
    for (img, codes) in &groups {
        for (x, &ca) in codes.iter().enumerate() {
            for &cb in &codes[x + 1..] {
                decode(ca as usize, k, n, &mut ta);
                decode(cb as usize, k, n, &mut tb);
                let ea: Vec<Element> = ta.iter().map(|&d| ev.get(sample[d]).clone()).collect();
                let eb: Vec<Element> = tb.iter().map(|&d| ev.get(sample[d]).clone()).collect();
                if !ea.iter().chain(&eb).all(Element::is_r) {
                    outside_r += 1;
                }
                let image = ev.get(*img);
                let kind = classify_collision(&ea, &eb, image);
                match kind {
                    Collision::OPattern => o_pat += 1,
                    Collision::AdjacentBlocks => adjacent += 1,
                    Collision::Unexplained => unexplained += 1,
                }
                if kind != Collision::OPattern {
                    let items = if image.is_o() { "item 3" } else { "items 2,3" };
                    log.fail(|| {
                        let ra: Vec<ElemId> = ta.iter().map(|&d| sample[d]).collect();
                        let rb: Vec<ElemId> = tb.iter().map(|&d| sample[d]).collect();
                        format!(
                            "{items}: {} = {} = {}",
                            render_tuple(&ev, &ra),
                            render_tuple(&ev, &rb),
                            image
                        )
                    });
                }
            }
        }
    }
    log.note(format!("sample: {k} elements, {total} tuples"));
    log.note(format!(
        "collisions: {} (o-pattern {o_pat}, adjacent-block r-pattern {adjacent}, unexplained {unexplained})",
        o_pat + adjacent + unexplained
    ));
    log.note(format!("colliding tuples with an argument outside R: {outside_r}"));
    Ok(finish(log, t0))
}

/// Sides of a square as vertex pairs, with `v = x + 2y`.
const SIDES: [(usize, usize); 4] = [(1, 3), (0, 2), (2, 3), (0, 1)];

/// `(R side, opposite side)`; the first entry is the lemma's own orientation
/// (right column in R, left column constant), the rest its images under the
/// symmetries of `M(1,1)`.
const ORIENTATIONS: [(usize, usize); 4] = [(0, 1), (1, 0), (2, 3), (3, 2)];

/// Squares with some side in `R²` whose opposite side is constant or in `R²`.
struct SuccessorSlice;

impl SuccessorSlice {
    fn side_r(ev: &Evaluator, c: &[ElemId], s: usize) -> bool {
        let (x, y) = SIDES[s];
        is_r(ev, c[x]) && is_r(ev, c[y])
    }

    fn side_const(c: &[ElemId], s: usize) -> bool {
        let (x, y) = SIDES[s];
        c[x] == c[y]
    }
}

impl Slice for SuccessorSlice {
    fn admits(&self, ev: &Evaluator, c: &[ElemId]) -> bool {
        ORIENTATIONS
            .iter()
            .any(|&(l, o)| Self::side_r(ev, c, l) && (Self::side_const(c, o) || Self::side_r(ev, c, o)))
    }

    fn keyed(&self) -> bool {
        true
    }

    fn keys(&self, ev: &Evaluator, c: &[ElemId]) -> Vec<u64> {
        (0..4)
            .filter_map(|s| {
                let (x, y) = SIDES[s];
                block_key(s as u64, [c[x], c[y]].into_iter(), ev)
            })
            .collect()
    }
}

/// Generated squares with a constant side opposite an R-side: the R-side's
/// labels `r^j_i`, `r^ℓ_k` must satisfy `j = ℓ` and `|i − k| ≤ 1`.
pub fn check_successors(n: usize, b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let a = an_algebra(n)?;
    let mut ev = Evaluator::new(&a);
    let mut log = VerdictLog::new("successors", n, b);
    let pairs = all_pairs(&seed_sample(&a, b));
    let m = generate_sliced(&mut ev, &[pairs.clone(), pairs], b.depth, b.cube_cap, Some(&SuccessorSlice))?;
    let mut literal = 0u64;
    for k in 0..m.len() {
        let c = m.cube(k);
        for (o, &(l, opp)) in ORIENTATIONS.iter().enumerate() {
            if !(SuccessorSlice::side_const(c, opp) && SuccessorSlice::side_r(&ev, c, l)) {
                continue;
            }
            log.instances += 1;
            if o == 0 {
                literal += 1;
            }
            let (x, y) = SIDES[l];
            let (Element::R { i, j }, Element::R { i: k2, j: l2 }) = (ev.get(c[x]), ev.get(c[y])) else {
                unreachable!("side checked to lie in R")
            };
            if j != l2 || i.abs_diff(k2) > Nat::from(1u64) {
                log.fail(|| format!("square {} is not a successor square\n{}", render_cube(&ev, c), m.explain(&ev, k)));
            }
        }
    }
    log.note(format!("squares generated in the family: {} (levels {:?})", m.len(), level_sizes(&m)));
    log.note(format!("instances in the stated orientation: {literal}"));
    Ok(finish(log, t0))
}

fn level_sizes(m: &BoundedMatrices) -> Vec<usize> {
    (0..=m.depth()).map(|k| m.level_end(k)).collect()
}

/// The 3-element corner sets of a square.
const CORNER_TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];

/// Squares with at least three corners in R.
struct ThreeRSlice;

impl Slice for ThreeRSlice {
    fn admits(&self, ev: &Evaluator, c: &[ElemId]) -> bool {
        c.iter().filter(|&&x| is_r(ev, x)).count() >= 3
    }

    fn keyed(&self) -> bool {
        true
    }

    fn keys(&self, ev: &Evaluator, c: &[ElemId]) -> Vec<u64> {
        CORNER_TRIPLES
            .iter()
            .enumerate()
            .filter_map(|(s, tri)| block_key(s as u64, tri.iter().map(|&v| c[v]), ev))
            .collect()
    }
}

/// Vertices of an n-cube off the pivot line of axis n−1.
fn support_vertices(n: usize) -> Vec<usize> {
    let low = (1usize << (n - 1)) - 1;
    (0..1usize << n).filter(|f| f & low != low).collect()
}

/// n-cubes whose axis-(n−1) support lines lie in `R²`.
struct SupportRSlice {
    support: Vec<usize>,
}

impl Slice for SupportRSlice {
    fn admits(&self, ev: &Evaluator, c: &[ElemId]) -> bool {
        self.support.iter().all(|&v| is_r(ev, c[v]))
    }

    fn keyed(&self) -> bool {
        true
    }

    fn keys(&self, ev: &Evaluator, c: &[ElemId]) -> Vec<u64> {
        block_key(0, self.support.iter().map(|&v| c[v]), ev).into_iter().collect()
    }
}

/// Whether every cross-section square (any two axes, any fixing of the rest)
/// is gcube-shaped.
pub fn cross_sections_are_gcubes<T: Clone + PartialEq>(c: &Cube<T>) -> bool {
    let d = c.dim();
    (0..d).all(|i| {
        (i + 1..d).all(|j| {
            let (mut sq, piv) = c.squares(i, j).expect("axes in range");
            sq.push(piv);
            sq.iter().all(|s| gcube_axis(&s.v).is_some())
        })
    })
}

/// The lifting claim on one cube: gcube-shaped cross sections make it a gcube.
pub fn lifting_claim_holds<T: Clone + PartialEq>(c: &Cube<T>) -> bool {
    c.dim() < 2 || !cross_sections_are_gcubes(c) || gcube_axis(c.verts()).is_some()
}

/// (a) generated squares with three R-corners are gcube-shaped;
/// (b) generated n-cubes whose axis-(n−1) support lines lie in `R²` are
/// `gcube_i(r′, r″)` with `r′, r″ ∈ R`;
/// plus the lifting claim on every cube from (b).
pub fn check_generators(n: usize, b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let a = an_algebra(n)?;
    let mut log = VerdictLog::new("generators", n, b);
    let pairs = all_pairs(&seed_sample(&a, b));

    let mut ev = Evaluator::new(&a);
    let sq = generate_sliced(&mut ev, &[pairs.clone(), pairs.clone()], b.depth, b.cube_cap, Some(&ThreeRSlice))?;
    let mut literal = 0u64;
    for k in 0..sq.len() {
        let c = sq.cube(k);
        log.instances += 1;
        if [0, 1, 2].iter().all(|&v| is_r(&ev, c[v])) {
            literal += 1;
        }
        if gcube_axis(c).is_none() {
            log.fail(|| format!("(a) square {} is not gcube-shaped\n{}", render_cube(&ev, c), sq.explain(&ev, k)));
        }
    }
    log.note(format!(
        "(a) squares with three R-corners: {} ({} in the stated configuration), levels {:?}",
        sq.len(),
        literal,
        level_sizes(&sq)
    ));

    let mut ev = Evaluator::new(&a);
    let slice = SupportRSlice {
        support: support_vertices(n),
    };
    let seeds = vec![pairs; n];
    let cubes = generate_sliced(&mut ev, &seeds, b.depth, b.cube_cap, Some(&slice))?;
    let mut claim = 0u64;
    let (mut b_fail, mut b_open_pivot) = (0u64, 0u64);
    for k in 0..cubes.len() {
        let c = cubes.cube(k);
        log.instances += 1;
        let shaped = gcube_axis(c).is_some();
        let in_r = c.iter().all(|&x| is_r(&ev, x));
        if !shaped || !in_r {
            b_fail += 1;
            if !in_r {
                b_open_pivot += 1;
            }
            log.fail(|| format!("(b) cube {} is not gcube(r', r'')\n{}", render_cube(&ev, c), cubes.explain(&ev, k)));
        }
        let cube = Cube::new(n, c.to_vec()).expect("stored cube");
        if cross_sections_are_gcubes(&cube) {
            claim += 1;
            if !lifting_claim_holds(&cube) {
                log.fail(|| format!("claim: cross sections of {} are gcubes but it is not", render_cube(&ev, c)));
            }
        }
    }
    log.note(format!(
        "(b) {n}-cubes with support lines in R^2: {}, levels {:?}",
        cubes.len(),
        level_sizes(&cubes)
    ));
    // Off the support lines only the pivot line remains, so a cube outside
    // R^(2^n) has a pivot vertex outside R.
    log.note(format!(
        "(b) counterexamples: {b_fail}, with a pivot vertex outside R: {b_open_pivot}, inside R^(2^n): {}",
        b_fail - b_open_pivot
    ));
    log.note(format!("claim: cubes with gcube-shaped cross sections: {claim}"));
    Ok(finish(log, t0))
}

/// Largest index certified at each level: `i_max` at the top, and below it
/// enough to chain the blocks that produce the pairs one level up.
fn needed_indices(b: &Bounds) -> Vec<u64> {
    let mut need = vec![0u64; b.j_max as usize + 1];
    need[b.j_max as usize] = b.i_max;
    for j in (0..b.j_max as usize).rev() {
        need[j] = if need[j + 1] == 0 { 0 } else { 4 * need[j + 1] - 2 };
    }
    need
}

/// Certifies `⟨r^j_0, r^j_i⟩ ∈ [1]^n_j` for `i ≤ i_max`, `j ≤ j_max`.
///
/// Level j+1 is seeded with the pairs `(r^j_{4i}, r^j_{4i+2})` already
/// certified at level j. The lower bound then forces the pivot pairs
/// `(r^{j+1}_i, r^{j+1}_{i+1})`, and transitivity chains them. Each forced
/// pair is re-checked by evaluating its witness cube directly.
pub fn nonsolvability_witness(n: usize, b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let a = an_algebra(n)?;
    let mut ev = Evaluator::new(&a);
    let mut log = VerdictLog::new("witness", n, b);
    let need = needed_indices(b);
    log.note(format!("level 0: [1]_0 is the total relation; indices needed per level {need:?}"));
    let mut certified: Option<PartialCongruence> = None;
    let low = (1usize << (n - 1)) - 1;
    let all = (1usize << n) - 1;
    for j in 0..b.j_max {
        let blocks = need[j as usize + 1];
        if blocks == 0 {
            continue;
        }
        let seed: Vec<(Element, Element)> = (0..blocks).map(|i| (Element::r(4 * i, j), Element::r(4 * i + 2, j))).collect();
        if let Some(pc) = &certified {
            for (x, y) in &seed {
                if !pc.related(x, y) {
                    log.fail(|| format!("level {j}: seed pair ({x}, {y}) is not certified"));
                }
            }
        }
        let pc = lower_bound_from_pairs(&mut ev, &vec![seed.clone(); n], 1, 1, b.cube_cap)?;
        for (i, (x, y)) in seed.iter().enumerate() {
            let (p, q) = (Element::r(i as u64, j + 1), Element::r(i as u64 + 1, j + 1));
            log.instances += 1;
            if !pc.related(&p, &q) {
                log.fail(|| format!("level {}: ({p}, {q}) not forced", j + 1));
            }
            // Independent evaluation of t(gcube_0(x, y), …, gcube_{n−1}(x, y)).
            let args: Vec<Cube<Element>> = (0..n).map(|d| gcube(n, d, x.clone(), y.clone()).expect("axis")).collect();
            let verts: Vec<Element> = (0..1usize << n)
                .map(|f| a.eval(0, &args.iter().map(|c| c.verts()[f].clone()).collect::<Vec<_>>()))
                .collect();
            let (support, _) = line_pairs(n, n - 1);
            let ok = support.iter().all(|&(u, v)| verts[u] == verts[v]) && verts[low] == p && verts[all] == q;
            if !ok {
                log.fail(|| format!("level {}: witness cube {} does not force ({p}, {q})", j + 1, Cube::new(n, verts.clone()).unwrap()));
            }
        }
        let r0 = Element::r(0, j + 1);
        for i in 0..=blocks {
            if !pc.related(&r0, &Element::r(i, j + 1)) {
                log.fail(|| format!("level {}: r[0]^[{}] and r[{i}]^[{}] not chained", j + 1, j + 1, j + 1));
            }
        }
        let class = pc.class_of(&r0);
        let r_members = class.iter().filter(|e| e.is_r()).count();
        log.note(format!(
            "level {}: class of {r0} has {} elements ({r_members} in R), covering r[0..={blocks}]^[{}]",
            j + 1,
            class.len(),
            j + 1
        ));
        certified = Some(pc);
    }
    Ok(finish(log, t0))
}

/// Cubes of dimension n+1 whose axis-n support lines are each constant or in `R²`.
struct SuperSlice {
    support: Vec<(usize, usize)>,
}

impl Slice for SuperSlice {
    fn admits(&self, ev: &Evaluator, c: &[ElemId]) -> bool {
        self.support
            .iter()
            .all(|&(u, v)| c[u] == c[v] || (is_r(ev, c[u]) && is_r(ev, c[v])))
    }
}

/// Per-cube summary for the final-level join.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct LineClass {
    constant: u64,
    in_r: u64,
    /// All support lines and the pivot line constant.
    flat: bool,
}

/// Scans `(n+1)`-cubes of `M(1,…,1)` over `A_n`, generated to the given depth
/// from R-seeds `r^j_i` (`i ≤ i_max`, `j ≤ j_max`) and the G-sample: every
/// cube whose axis-n support lines are constant must have a constant pivot.
///
/// Levels below the last are stored (restricted to cubes whose support lines
/// are each constant or in `R²`, the only possible arguments of a cube with
/// constant support lines). The last level is streamed. Argument tuples are
/// grouped by which support lines are constant or in `R²`. Tuples of cubes
/// that are constant along axis n yield such cubes again and pass without
/// evaluation; they are counted. All other compatible tuples are evaluated.
pub fn supernilpotence_scan(n: usize, b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let a = an_algebra(n)?;
    let dim = n + 1;
    let mut ev = Evaluator::new(&a);
    let mut log = VerdictLog::new("supernilpotence", n, b);
    let mut seeds: Vec<Element> = (0..=b.j_max)
        .flat_map(|j| (0..=b.i_max).map(move |i| Element::r(i, j)))
        .collect();
    seeds.extend(g_sample(&a, b));
    let pairs = all_pairs(&seeds);
    let (support, (pa, pb)) = line_pairs(dim, n);
    let slice = SuperSlice { support: support.clone() };
    let stored_depth = b.depth.saturating_sub(1);
    let m = generate_sliced(&mut ev, &vec![pairs; dim], stored_depth, b.cube_cap, Some(&slice))?;

    let full = (1u64 << support.len()) - 1;
    let mut classes: BTreeMap<LineClass, Vec<usize>> = BTreeMap::new();
    let mut stored_instances = 0u64;
    for k in 0..m.len() {
        let c = m.cube(k);
        let mut cls = LineClass {
            constant: 0,
            in_r: 0,
            flat: false,
        };
        for (l, &(u, v)) in support.iter().enumerate() {
            if c[u] == c[v] {
                cls.constant |= 1 << l;
            }
            if is_r(&ev, c[u]) && is_r(&ev, c[v]) {
                cls.in_r |= 1 << l;
            }
        }
        cls.flat = cls.constant == full && c[pa] == c[pb];
        if cls.constant == full {
            stored_instances += 1;
            if c[pa] != c[pb] {
                log.fail(|| format!("cube {} has constant support lines and a non-constant pivot\n{}", render_cube(&ev, c), m.explain(&ev, k)));
            }
        }
        classes.entry(cls).or_default().push(k);
    }
    log.instances = stored_instances;
    log.note(format!("stored levels 0..={stored_depth}: {} cubes {:?}", m.len(), level_sizes(&m)));

    if b.depth >= 1 {
        let classes: Vec<(LineClass, Vec<usize>)> = classes.into_iter().collect();
        let (mut flat_tuples, mut evaluated, mut streamed_instances) = (0u128, 0u64, 0u64);
        let v = 1usize << dim;
        let mut pick = vec![0usize; n];
        let mut members = vec![0usize; n];
        let mut col_a = vec![ElemId(0); n];
        let mut col_b = vec![ElemId(0); n];
        'classes: loop {
            let and_c = pick.iter().fold(full, |acc, &p| acc & classes[p].0.constant);
            let and_r = pick.iter().fold(full, |acc, &p| acc & classes[p].0.in_r);
            if and_c | and_r == full {
                if pick.iter().all(|&p| classes[p].0.flat) {
                    flat_tuples += pick.iter().map(|&p| classes[p].1.len() as u128).product::<u128>();
                } else {
                    let lists: Vec<&[usize]> = pick.iter().map(|&p| &classes[p].1[..]).collect();
                    members.iter_mut().for_each(|x| *x = 0);
                    'tuples: loop {
                        evaluated += 1;
                        let cube = |d: usize| m.cube(lists[d][members[d]]);
                        let mut hyp = true;
                        for (l, &(u, w)) in support.iter().enumerate() {
                            if and_c >> l & 1 == 1 {
                                continue;
                            }
                            for d in 0..n {
                                col_a[d] = cube(d)[u];
                                col_b[d] = cube(d)[w];
                            }
                            if !ev.images_equal(0, &col_a, &col_b) {
                                hyp = false;
                                break;
                            }
                        }
                        if hyp {
                            streamed_instances += 1;
                            for d in 0..n {
                                col_a[d] = cube(d)[pa];
                                col_b[d] = cube(d)[pb];
                            }
                            if !ev.images_equal(0, &col_a, &col_b) {
                                let args: Vec<usize> = (0..n).map(|d| lists[d][members[d]]).collect();
                                let mut img = Vec::with_capacity(v);
                                let mut col = vec![ElemId(0); n];
                                for f in 0..v {
                                    for d in 0..n {
                                        col[d] = m.cube(args[d])[f];
                                    }
                                    img.push(ev.eval(0, &col));
                                }
                                let mut text = format!(
                                    "cube {} = t({}) has constant support lines and a non-constant pivot",
                                    render_cube(&ev, &img),
                                    args.iter().map(|x| format!("#{x}")).collect::<Vec<_>>().join(", ")
                                );
                                for &x in &args {
                                    text.push('\n');
                                    text.push_str(&m.explain(&ev, x));
                                }
                                log.fail(|| text);
                            }
                        }
                        let mut d = n;
                        loop {
                            if d == 0 {
                                break 'tuples;
                            }
                            d -= 1;
                            members[d] += 1;
                            if members[d] < lists[d].len() {
                                break;
                            }
                            members[d] = 0;
                        }
                    }
                }
            }
            let mut d = n;
            loop {
                if d == 0 {
                    break 'classes;
                }
                d -= 1;
                pick[d] += 1;
                if pick[d] < classes.len() {
                    break;
                }
                pick[d] = 0;
            }
        }
        let flat = u64::try_from(flat_tuples).unwrap_or(u64::MAX);
        log.instances = log.instances.saturating_add(flat).saturating_add(streamed_instances);
        log.note(format!(
            "level {}: {flat} tuples of axis-{n}-constant cubes (pass by construction), {evaluated} tuples evaluated, {streamed_instances} with constant support lines",
            b.depth
        ));
    }
    log.note(format!("stored cubes with constant support lines: {stored_instances}"));
    Ok(finish(log, t0))
}

/// The two-generator example: `C(1,1; δ)` on bounded `M(1,1)` with δ
/// separating `o` from G, `C(δ,1; 0)` on bounded `M(δ,1)`, and the
/// left-series pairs `t(a,a) ~ t(a,y)` forced at level 1.
pub fn two_generator_check(b: &Bounds) -> Result<VerdictLog> {
    let t0 = Instant::now();
    let alg = sec3_algebra();
    let mut ev = Evaluator::new(&alg);
    let mut log = VerdictLog::new("two-generator", 2, b);
    let o = Element::Atom;
    let mut gs = vec![Element::s("s", vec![o.clone(), o.clone()])];
    while gs.len() < b.g_samples.max(2) {
        let last = gs.last().unwrap().clone();
        gs.push(Element::s("s", vec![o.clone(), last]));
    }
    let mut sample = vec![o.clone()];
    sample.extend(gs.iter().cloned());
    let delta = |x: &Element, y: &Element| (*x == Element::Atom) == (*y == Element::Atom);
    let (support, (pa, pb)) = line_pairs(2, 1);

    let all = all_pairs(&sample);
    let m = generate_bounded(&mut ev, &[all.clone(), all.clone()], b.depth, b.cube_cap)?;
    let mut central = 0u64;
    for k in 0..m.len() {
        let c = m.cube(k);
        if support.iter().all(|&(u, v)| delta(ev.get(c[u]), ev.get(c[v]))) {
            central += 1;
            if !delta(ev.get(c[pa]), ev.get(c[pb])) {
                log.fail(|| format!("C(1,1;delta) fails at {}\n{}", render_cube(&ev, c), m.explain(&ev, k)));
            }
        }
    }
    log.note(format!("C(1,1;delta): {} squares {:?}, {central} with delta-related support", m.len(), level_sizes(&m)));

    let delta_pairs: Vec<(Element, Element)> = all.iter().filter(|(x, y)| delta(x, y)).cloned().collect();
    let mut ev2 = Evaluator::new(&alg);
    let md = generate_bounded(&mut ev2, &[delta_pairs, all.clone()], b.depth, b.cube_cap)?;
    let mut abelian = 0u64;
    for k in 0..md.len() {
        let c = md.cube(k);
        if support.iter().all(|&(u, v)| c[u] == c[v]) {
            abelian += 1;
            if c[pa] != c[pb] {
                log.fail(|| format!("C(delta,1;0) fails at {}\n{}", render_cube(&ev2, c), md.explain(&ev2, k)));
            }
        }
    }
    log.note(format!("C(delta,1;0): {} squares {:?}, {abelian} with constant support", md.len(), level_sizes(&md)));

    // (1]_1 = [1, (1]_0] with (1]_0 = 1: both axes seeded with every pair.
    let mut ev3 = Evaluator::new(&alg);
    let pc = lower_bound_from_pairs(&mut ev3, &[all.clone(), all], 1, 1, b.cube_cap)?;
    let mut best = 0usize;
    for a in &gs {
        let taa = alg.eval(0, &[a.clone(), a.clone()]);
        let related: Vec<Element> = sample
            .iter()
            .map(|y| alg.eval(0, &[a.clone(), y.clone()]))
            .filter(|v| pc.related(&taa, v))
            .collect();
        best = best.max(related.len());
        log.note(format!("left series level 1: t({a},y) related to t({a},{a}) for {} of {} sampled y", related.len(), sample.len()));
    }
    log.instances = central + abelian + gs.len() as u64;
    if best < 3 {
        log.fail(|| format!("left series: only {best} distinct t(a,y) values in one class"));
    }
    Ok(finish(log, t0))
}

/// Runs one named check for the command line.
pub fn run_lemma(name: &str, n: usize, b: &Bounds) -> Result<VerdictLog> {
    if n < 2 {
        return Err(Error::Validation(format!("n must be at least 2, got {n}")));
    }
    match name {
        "injectivity" => check_injectivity_lemma(n, b),
        "successors" => check_successors(n, b),
        "generators" => check_generators(n, b),
        "witness" => nonsolvability_witness(n, b),
        "supernilpotence" => supernilpotence_scan(n, b),
        "two-generator" => two_generator_check(b),
        _ => Err(Error::Parse(format!("unknown lemma `{name}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Bounds {
        Bounds {
            i_max: 1,
            j_max: 1,
            depth: 1,
            g_samples: 1,
            cube_cap: 1_000_000,
        }
    }

    #[test]
    fn collision_classes() {
        let r = Element::r;
        let o = Element::o(0, 0, &[false]);
        assert_eq!(classify_collision(&[r(0, 0), r(0, 0)], &[r(0, 0), r(2, 0)], &o), Collision::OPattern);
        assert_eq!(
            classify_collision(&[r(2, 0), r(2, 0)], &[r(6, 0), r(4, 0)], &r(1, 1)),
            Collision::AdjacentBlocks
        );
        assert_eq!(classify_collision(&[r(2, 0), r(2, 0)], &[r(2, 0), r(2, 0)], &r(1, 1)), Collision::Unexplained);
        let o3 = Element::o(0, 0, &[true, false]);
        assert_eq!(
            classify_collision(&[r(2, 0), r(0, 0), r(0, 0)], &[r(2, 0), r(0, 0), r(2, 0)], &o3),
            Collision::OPattern
        );
    }

    #[test]
    fn injectivity_scan_finds_both_collision_kinds() {
        let log = check_injectivity_lemma(2, &small()).unwrap();
        let text = log.render();
        assert!(text.contains("unexplained 0"), "{text}");
        assert!(text.contains("colliding tuples with an argument outside R: 0"), "{text}");
        // t(r⁰₀,r⁰₀) = t(r⁰₀,r⁰₂) = o⁰₀ is allowed; t(r⁰₂,r⁰₂) = t(r⁰₆,r⁰₄) = r¹₁ is not.
        assert!(!log.passed());
        assert!(log.counterexamples.iter().any(|c| c.contains("t(r[2]^[0], r[2]^[0]) = t(r[6]^[0], r[4]^[0]) = r[1]^[1]")));
        assert!(log.counterexamples.iter().all(|c| !c.starts_with("item 1")));
    }

    #[test]
    fn successor_squares_at_small_bounds() {
        let log = check_successors(2, &small()).unwrap();
        assert!(log.passed(), "{}", log.render());
        assert!(log.instances > 0);
    }

    #[test]
    fn depth_zero_generators_are_compliant() {
        let b = Bounds { depth: 0, ..small() };
        for log in [check_successors(2, &b).unwrap(), check_generators(3, &b).unwrap()] {
            assert!(log.passed(), "{}", log.render());
        }
    }

    #[test]
    fn two_dimensional_support_lemma_fails_only_off_three_corners() {
        let log = check_generators(2, &small()).unwrap();
        assert!(!log.passed());
        assert!(log.counterexamples.iter().all(|c| c.starts_with("(b)")), "{}", log.render());
        assert!(log.report.iter().any(|l| l.ends_with("inside R^(2^n): 0")), "{}", log.render());
    }

    #[test]
    fn lifting_claim_is_exhaustively_true_in_dimension_three() {
        let mut checked = 0;
        for code in 0..3usize.pow(8) {
            let verts: Vec<u8> = (0..8).map(|f| (code / 3usize.pow(f)) as u8 % 3).collect();
            let c = Cube::new(3, verts).unwrap();
            assert!(lifting_claim_holds(&c), "{c}");
            checked += cross_sections_are_gcubes(&c) as usize;
        }
        // Constant cubes plus gcubes on three axes over three symbols.
        assert_eq!(checked, 3 + 3 * 6);
    }

    #[test]
    fn lifting_claim_in_dimension_four_over_two_symbols() {
        for code in 0..1usize << 16 {
            let verts: Vec<u8> = (0..16).map(|f| (code >> f & 1) as u8).collect();
            assert!(lifting_claim_holds(&Cube::new(4, verts).unwrap()));
        }
    }

    #[test]
    fn witness_levels_chain() {
        let b = Bounds {
            i_max: 2,
            j_max: 2,
            ..small()
        };
        assert_eq!(needed_indices(&b), vec![22, 6, 2]);
        let log = nonsolvability_witness(2, &b).unwrap();
        assert!(log.passed(), "{}", log.render());
        assert_eq!(log.instances, 6 + 2);
    }

    #[test]
    fn lemma_display_square_certified_at_level_one() {
        let b = Bounds { i_max: 1, j_max: 1, ..small() };
        let log = nonsolvability_witness(2, &b).unwrap();
        assert!(log.passed());
        assert!(log.report.iter().any(|l| l.starts_with("level 1: class of r[0]^[1]")));
    }

    #[test]
    fn evaluation_cube_with_open_support_is_exempt() {
        // t(gcube_1(r0,r2), gcube_2(r0,r2)) in dimension 3 over A_2.
        let a = an_algebra(2).unwrap();
        let (x, y) = (Element::r(0, 0), Element::r(2, 0));
        let g1 = gcube(3, 1, x.clone(), y.clone()).unwrap();
        let g2 = gcube(3, 2, x, y).unwrap();
        let img: Vec<Element> = (0..8).map(|f| a.eval(0, &[g1.verts()[f].clone(), g2.verts()[f].clone()])).collect();
        let (support, (pa, pb)) = line_pairs(3, 2);
        assert_ne!(img[pa], img[pb]);
        assert!(support.iter().any(|&(u, v)| img[u] != img[v]));
    }

    #[test]
    fn supernilpotence_scan_small() {
        let b = Bounds {
            i_max: 2,
            j_max: 0,
            depth: 1,
            g_samples: 1,
            cube_cap: 1_000_000,
        };
        let log = supernilpotence_scan(2, &b).unwrap();
        assert!(log.passed(), "{}", log.render());
        let deeper = supernilpotence_scan(2, &Bounds { depth: 2, ..b }).unwrap();
        assert!(deeper.passed(), "{}", deeper.render());
        assert!(deeper.instances > log.instances);
    }

    #[test]
    fn generators_alone_pass_the_supernilpotence_scan() {
        let log = supernilpotence_scan(2, &Bounds { depth: 0, ..small() }).unwrap();
        assert!(log.passed() && log.instances > 0, "{}", log.render());
    }

    #[test]
    fn instance_counts_grow_with_every_bound() {
        // Depth adds instances only if the values one level up include a
        // whole block (r_0, r_2); i_max = 2 with j_max = 1 is the least such window.
        let base = Bounds {
            i_max: 2,
            j_max: 1,
            depth: 1,
            ..small()
        };
        let grown = [
            Bounds { i_max: 3, ..base },
            Bounds { j_max: 2, ..base },
            Bounds { depth: 2, ..base },
        ];
        type Check = fn(usize, &Bounds) -> Result<VerdictLog>;
        let checks: [(Check, usize); 3] = [(check_successors, 2), (supernilpotence_scan, 2), (check_injectivity_lemma, 2)];
        for (check, n) in checks {
            let before = check(n, &base).unwrap().instances;
            for b in &grown {
                let after = check(n, b).unwrap();
                // Tuple enumeration does not depend on depth.
                if after.lemma == "injectivity" && b.depth != base.depth {
                    continue;
                }
                assert!(after.instances > before, "{} at {b}: {} <= {before}", after.lemma, after.instances);
            }
        }
    }

    #[test]
    fn render_omits_timing_and_is_stable() {
        let b = small();
        let x = check_injectivity_lemma(2, &b).unwrap();
        let y = check_injectivity_lemma(2, &b).unwrap();
        assert_eq!(x.render(), y.render());
        assert!(x.to_json().contains("\"lemma\": \"injectivity\""));
    }

    #[test]
    fn unknown_lemma_is_rejected() {
        assert!(run_lemma("nope", 2, &small()).is_err());
        assert!(run_lemma("witness", 1, &small()).is_err());
    }
}
