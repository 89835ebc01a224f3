//! Centrality, higher commutators and their bounded lower bounds.

use crate::algebra::{ComputableAlgebra, Evaluator, FiniteAlgebra};
use crate::congruence::{all_congruences_capped, cg_from, meet, Partition, PartialCongruence, UnionFind};
use crate::cube::{line_pairs, Cube};
use crate::error::{Error, Result};
use crate::matrices::{generate_bounded, generate_full_capped, FiniteMatrices, DEFAULT_FINITE_CAP};
use crate::pool::ElemId;
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Upper bound on `N^(2^n)` for full matrix generation.
    pub cube_cap: u64,
    /// Largest carrier for which all congruences are enumerated.
    pub con_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            cube_cap: DEFAULT_FINITE_CAP,
            con_cap: crate::congruence::DEFAULT_CON_CAP,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub cube: Cube<u32>,
    pub pivot: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CentralityReport {
    pub holds: bool,
    pub counterexample: Option<Violation>,
}

/// The pivot axis `σ(n−1)` after checking that `sigma` permutes `0..n`.
pub fn pivot_axis(n: usize, sigma: Option<&[usize]>) -> Result<usize> {
    match sigma {
        None => {
            if n == 0 {
                Err(Error::Validation("at least one congruence is required".into()))
            } else {
                Ok(n - 1)
            }
        }
        Some(s) => {
            let mut seen = vec![false; n];
            if s.len() != n || s.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x], true)) {
                return Err(Error::Validation(format!("{s:?} is not a permutation of 0..{n}")));
            }
            Ok(s[n - 1])
        }
    }
}

/// Cubes whose pivot-direction support lines are δ-pairs but whose pivot is not.
fn violations<'a>(
    m: &'a FiniteMatrices,
    pivot: usize,
    delta: &'a Partition,
) -> impl ParallelIterator<Item = &'a [u32]> + 'a {
    let (support, (pa, pb)) = line_pairs(m.dim(), pivot);
    let v = 1usize << m.dim();
    m.cubes()
        .collect::<Vec<_>>()
        .into_par_iter()
        .with_min_len(1024)
        .filter(move |c| {
            debug_assert_eq!(c.len(), v);
            !delta.related(c[pa] as usize, c[pb] as usize)
                && support
                    .iter()
                    .all(|&(a, b)| delta.related(c[a] as usize, c[b] as usize))
        })
}

/// Checks `C(θ_{σ(0)},…,θ_{σ(n−1)}; δ)` on an already generated matrix set.
pub fn centrality_in(m: &FiniteMatrices, pivot: usize, delta: &Partition) -> CentralityReport {
    let (_, (pa, pb)) = line_pairs(m.dim(), pivot);
    let worst = violations(m, pivot, delta).min();
    match worst {
        None => CentralityReport {
            holds: true,
            counterexample: None,
        },
        Some(c) => CentralityReport {
            holds: false,
            counterexample: Some(Violation {
                cube: Cube::new(m.dim(), c.to_vec()).expect("stored cube"),
                pivot: (c[pa], c[pb]),
            }),
        },
    }
}

pub fn centrality(
    a: &FiniteAlgebra,
    thetas: &[Partition],
    sigma: Option<&[usize]>,
    delta: &Partition,
) -> Result<CentralityReport> {
    centrality_with(a, thetas, sigma, delta, &Limits::default())
}

pub fn centrality_with(
    a: &FiniteAlgebra,
    thetas: &[Partition],
    sigma: Option<&[usize]>,
    delta: &Partition,
    limits: &Limits,
) -> Result<CentralityReport> {
    let pivot = pivot_axis(thetas.len(), sigma)?;
    if delta.size() != a.size() {
        return Err(Error::Validation("delta has the wrong carrier size".into()));
    }
    let m = generate_full_capped(a, thetas, limits.cube_cap)?;
    Ok(centrality_in(&m, pivot, delta))
}

/// Least δ with the centrality condition, by collecting forced pivot pairs.
pub fn higher_commutator_in(a: &FiniteAlgebra, m: &FiniteMatrices, pivot: usize) -> Result<Partition> {
    let (_, (pa, pb)) = line_pairs(m.dim(), pivot);
    let mut delta = Partition::identity(a.size());
    loop {
        let mut pairs: Vec<(usize, usize)> = violations(m, pivot, &delta)
            .map(|c| {
                let (x, y) = (c[pa] as usize, c[pb] as usize);
                (x.min(y), x.max(y))
            })
            .collect();
        if pairs.is_empty() {
            return Ok(delta);
        }
        pairs.sort_unstable();
        pairs.dedup();
        delta = cg_from(a, &delta, &pairs)?;
    }
}

pub fn higher_commutator(a: &FiniteAlgebra, thetas: &[Partition], sigma: Option<&[usize]>) -> Result<Partition> {
    higher_commutator_with(a, thetas, sigma, &Limits::default())
}

pub fn higher_commutator_with(
    a: &FiniteAlgebra,
    thetas: &[Partition],
    sigma: Option<&[usize]>,
    limits: &Limits,
) -> Result<Partition> {
    let pivot = pivot_axis(thetas.len(), sigma)?;
    let m = generate_full_capped(a, thetas, limits.cube_cap)?;
    higher_commutator_in(a, &m, pivot)
}

/// The meet of every congruence δ for which centrality holds.
pub fn oracle_in(a: &FiniteAlgebra, m: &FiniteMatrices, pivot: usize, con: &[Partition]) -> Partition {
    con.iter()
        .filter(|d| centrality_in(m, pivot, d).holds)
        .fold(Partition::total(a.size()), |acc, d| meet(&acc, d))
}

pub fn higher_commutator_oracle(
    a: &FiniteAlgebra,
    thetas: &[Partition],
    sigma: Option<&[usize]>,
) -> Result<Partition> {
    higher_commutator_oracle_with(a, thetas, sigma, &Limits::default())
}

pub fn higher_commutator_oracle_with(
    a: &FiniteAlgebra,
    thetas: &[Partition],
    sigma: Option<&[usize]>,
    limits: &Limits,
) -> Result<Partition> {
    let pivot = pivot_axis(thetas.len(), sigma)?;
    let con = all_congruences_capped(a, limits.con_cap)?;
    let m = generate_full_capped(a, thetas, limits.cube_cap)?;
    Ok(oracle_in(a, &m, pivot, &con))
}

/// Scans `M(1,…,1)` of dimension `k+1` for a cube whose axis-`k` support lines
/// are constant while its pivot line is not. Holds iff the `(k+1)`-ary
/// commutator `[1,…,1]` vanishes, i.e. the algebra is `k`-step supernilpotent.
pub fn supernilpotence_check(a: &FiniteAlgebra, k: usize) -> Result<CentralityReport> {
    supernilpotence_check_with(a, k, &Limits::default())
}

pub fn supernilpotence_check_with(a: &FiniteAlgebra, k: usize, limits: &Limits) -> Result<CentralityReport> {
    let ones = vec![Partition::total(a.size()); k + 1];
    let m = generate_full_capped(a, &ones, limits.cube_cap)?;
    Ok(centrality_in(&m, k, &Partition::identity(a.size())))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hc8Report {
    /// `[θ_0,…,θ_{m−1}, [θ_m,…,θ_{n−1}]]`
    pub nested: Partition,
    /// `[θ_0,…,θ_{n−1}]`
    pub flat: Partition,
    pub holds: bool,
}

/// Reports whether `[θ_0,…,θ_{m−1},[θ_m,…,θ_{n−1}]] ≤ [θ_0,…,θ_{n−1}]` holds
/// on the given inputs. The inequality is known only for congruence
/// permutable varieties, so a failure here is data, not an error.
pub fn hc8_diagnostic(a: &FiniteAlgebra, thetas: &[Partition], split: usize, limits: &Limits) -> Result<Hc8Report> {
    let n = thetas.len();
    if split == 0 || split >= n {
        return Err(Error::Validation(format!(
            "hc8 split must satisfy 1 <= m <= n-1 with n = {n}, got {split}"
        )));
    }
    let inner = if n - split == 1 {
        thetas[split].clone()
    } else {
        higher_commutator_with(a, &thetas[split..], None, limits)?
    };
    let mut outer_args = thetas[..split].to_vec();
    outer_args.push(inner);
    let nested = higher_commutator_with(a, &outer_args, None, limits)?;
    let flat = higher_commutator_with(a, thetas, None, limits)?;
    let holds = nested.le(&flat);
    Ok(Hc8Report { nested, flat, holds })
}

/// Sound lower bound for a commutator of a computable algebra: starting from
/// the identity, every pivot pair of a generated cube whose support lines are
/// already related is forced, then the relation is closed under operations.
pub fn commutator_lower_bound(
    alg: &dyn ComputableAlgebra,
    seed_pcs: &[PartialCongruence],
    depth: usize,
    rounds: usize,
    cap: usize,
) -> Result<PartialCongruence> {
    let seeds: Vec<_> = seed_pcs.iter().map(PartialCongruence::related_pairs).collect();
    let mut ev = Evaluator::new(alg);
    lower_bound_from_pairs(&mut ev, &seeds, depth, rounds, cap)
}

/// As [`commutator_lower_bound`], with explicit per-axis seed pairs and a
/// caller-owned evaluator.
pub fn lower_bound_from_pairs(
    ev: &mut Evaluator,
    seeds: &[Vec<(crate::Element, crate::Element)>],
    depth: usize,
    rounds: usize,
    cap: usize,
) -> Result<PartialCongruence> {
    let n = seeds.len();
    let mut delta = PartialCongruence::new();
    if n == 0 {
        return Ok(delta);
    }
    let m = generate_bounded(ev, seeds, depth, cap)?;
    let (support, (pa, pb)) = line_pairs(n, n - 1);
    let mut uf = UnionFind::new(ev.pool.len());
    for _ in 0..rounds {
        let mut forced: Vec<(ElemId, ElemId)> = Vec::new();
        for c in m.cubes() {
            let (x, y) = (c[pa], c[pb]);
            if uf.find(x.index()) == uf.find(y.index()) {
                continue;
            }
            if support.iter().all(|&(a, b)| uf.find(c[a].index()) == uf.find(c[b].index())) {
                forced.push((x, y));
                uf.union(x.index(), y.index());
            }
        }
        for (x, y) in &forced {
            delta.union(ev.get(*x), ev.get(*y))?;
        }
        let ambient = delta.elements().to_vec();
        delta.close(ev.algebra(), &ambient)?;
        // Fold the closure back so the next round sees it.
        for class in delta.classes() {
            let ids: Vec<ElemId> = class.into_iter().map(|e| ev.intern(e)).collect();
            while uf.len() < ev.pool.len() {
                uf.push();
            }
            for w in ids.windows(2) {
                uf.union(w[0].index(), w[1].index());
            }
        }
        if forced.is_empty() {
            break;
        }
    }
    Ok(delta)
}
