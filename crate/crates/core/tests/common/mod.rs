#![allow(dead_code)]

use hcomm::{FiniteAlgebra, Operation, Partition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const CORPUS_SEED: u64 = 0x5eed_2024;
pub const RANDOM_ALGEBRAS: usize = 50;

pub fn binary(name: &str, size: usize, table: Vec<u32>) -> FiniteAlgebra {
    FiniteAlgebra::new(
        name,
        size,
        vec![Operation {
            symbol: "f".into(),
            arity: 2,
            table,
        }],
    )
    .unwrap()
}

pub fn cyclic(n: u32) -> FiniteAlgebra {
    binary(&format!("Z{n}"), n as usize, (0..n * n).map(|k| (k / n + k % n) % n).collect())
}

pub fn meet2() -> FiniteAlgebra {
    binary("meet2", 2, vec![0, 0, 0, 1])
}

/// Permutations of {0,1,2} in lexicographic order; index 0 is the identity.
pub fn perms3() -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                if a != b && b != c && a != c {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

pub fn compose(x: &[u32; 3], y: &[u32; 3]) -> [u32; 3] {
    [x[y[0] as usize], x[y[1] as usize], x[y[2] as usize]]
}

/// S3 with multiplication table obtained by composing permutations.
pub fn s3() -> FiniteAlgebra {
    let p = perms3();
    let mut table = Vec::new();
    for x in &p {
        for y in &p {
            table.push(p.iter().position(|q| *q == compose(x, y)).unwrap() as u32);
        }
    }
    binary("S3", 6, table)
}

/// Cosets of the subgroup generated by all commutators x y x⁻¹ y⁻¹.
pub fn s3_derived_coset_partition() -> Partition {
    let p = perms3();
    let inv = |x: &[u32; 3]| {
        let mut r = [0u32; 3];
        for (i, &v) in x.iter().enumerate() {
            r[v as usize] = i as u32;
        }
        r
    };
    let mut sub: Vec<[u32; 3]> = vec![[0, 1, 2]];
    for x in &p {
        for y in &p {
            let c = compose(&compose(x, y), &compose(&inv(x), &inv(y)));
            if !sub.contains(&c) {
                sub.push(c);
            }
        }
    }
    loop {
        let mut grew = false;
        for a in sub.clone() {
            for b in sub.clone() {
                let c = compose(&a, &b);
                if !sub.contains(&c) {
                    sub.push(c);
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    // x ~ y iff x⁻¹ y lies in the subgroup.
    let labels: Vec<u32> = p
        .iter()
        .map(|x| {
            p.iter()
                .position(|y| sub.contains(&compose(&inv(y), x)))
                .unwrap() as u32
        })
        .collect();
    Partition::from_labels(&labels)
}

pub fn random_binary(rng: &mut ChaCha8Rng, name: &str) -> FiniteAlgebra {
    let size = rng.gen_range(2..=4usize);
    let table = (0..size * size).map(|_| rng.gen_range(0..size as u32)).collect();
    binary(name, size, table)
}

/// Fixed-seed random algebras followed by Z2, Z4, S3 and the semilattice.
pub fn corpus() -> Vec<FiniteAlgebra> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let mut out: Vec<FiniteAlgebra> = (0..RANDOM_ALGEBRAS)
        .map(|k| random_binary(&mut rng, &format!("random{k}")))
        .collect();
    out.extend([cyclic(2), cyclic(4), s3(), meet2()]);
    out
}

/// Every tuple of length `k` over `items`, in lexicographic index order.
pub fn tuples<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                items.iter().map(move |x| {
                    let mut u = t.clone();
                    u.push(x.clone());
                    u
                })
            })
            .collect();
    }
    out
}
