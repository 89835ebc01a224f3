//! Vertex-labeled cubes. Vertex `f ∈ 2^n` is stored at the integer whose bit
//! `k` is `f(k)`.

use crate::error::{Error, Result};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Cube<T> {
    dim: usize,
    verts: Vec<T>,
}

/// An ordered pair along one axis; `a` has that coordinate equal to 0.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Line<T> {
    pub a: T,
    pub b: T,
}

/// `v[x + 2y]` where `x` is the smaller free axis and `y` the larger one.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Square<T> {
    pub v: [T; 4],
}

pub trait Constant {
    fn is_constant(&self) -> bool;
}

fn all_equal<T: PartialEq>(xs: &[T]) -> bool {
    xs.windows(2).all(|w| w[0] == w[1])
}

impl<T: PartialEq> Constant for Cube<T> {
    fn is_constant(&self) -> bool {
        all_equal(&self.verts)
    }
}

impl<T: PartialEq> Constant for Line<T> {
    fn is_constant(&self) -> bool {
        self.a == self.b
    }
}

impl<T: PartialEq> Constant for Square<T> {
    fn is_constant(&self) -> bool {
        all_equal(&self.v)
    }
}

impl<T: PartialEq> Line<T> {
    /// Unordered membership test against a symmetric relation.
    pub fn is_pair_in(&self, related: impl Fn(&T, &T) -> bool) -> bool {
        self.a == self.b || related(&self.a, &self.b)
    }
}

pub fn vertex_index(f: &[bool]) -> usize {
    f.iter()
        .enumerate()
        .fold(0, |acc, (k, &b)| acc | ((b as usize) << k))
}

pub fn vertex_bits(index: usize, dim: usize) -> Vec<bool> {
    (0..dim).map(|k| index >> k & 1 == 1).collect()
}

/// Index pairs of the lines along `axis`: support lines in increasing order of
/// the remaining coordinates, then the pivot line (all other coordinates 1).
pub fn line_pairs(dim: usize, axis: usize) -> (Vec<(usize, usize)>, (usize, usize)) {
    assert!(axis < dim);
    let rest: Vec<usize> = (0..dim).filter(|&k| k != axis).collect();
    let mut all: Vec<(usize, usize)> = (0..1usize << rest.len())
        .map(|f| {
            let base = spread(f, &rest);
            (base, base | 1 << axis)
        })
        .collect();
    let pivot = all.pop().expect("at least one line");
    (all, pivot)
}

/// Deposits the low bits of `f` onto the coordinates listed in `coords`.
fn spread(f: usize, coords: &[usize]) -> usize {
    coords
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &c)| acc | ((f >> k & 1) << c))
}

impl<T: Clone> Cube<T> {
    pub fn new(dim: usize, verts: Vec<T>) -> Result<Cube<T>> {
        if dim >= usize::BITS as usize || verts.len() != 1usize << dim {
            return Err(Error::Validation(format!(
                "a cube of dimension {dim} needs {} vertices, got {}",
                1u128 << dim.min(127),
                verts.len()
            )));
        }
        Ok(Cube { dim, verts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn verts(&self) -> &[T] {
        &self.verts
    }

    pub fn into_verts(self) -> Vec<T> {
        self.verts
    }

    pub fn vertex(&self, f: &[bool]) -> &T {
        &self.verts[vertex_index(f)]
    }

    pub fn map<U: Clone>(&self, g: impl FnMut(&T) -> U) -> Cube<U> {
        Cube {
            dim: self.dim,
            verts: self.verts.iter().map(g).collect(),
        }
    }

    /// `h_f`: fixes the assigned coordinates; free ones keep their order.
    pub fn subcube(&self, assignment: &[(usize, bool)]) -> Result<Cube<T>> {
        let mut fixed = 0usize;
        let mut mask = 0usize;
        for &(c, b) in assignment {
            if c >= self.dim {
                return Err(Error::Coordinate {
                    coord: c,
                    dim: self.dim,
                });
            }
            if mask >> c & 1 == 1 && (fixed >> c & 1 == 1) != b {
                return Err(Error::Validation(format!("coordinate {c} assigned twice")));
            }
            mask |= 1 << c;
            fixed |= (b as usize) << c;
        }
        let free: Vec<usize> = (0..self.dim).filter(|&k| mask >> k & 1 == 0).collect();
        let verts = (0..1usize << free.len())
            .map(|g| self.verts[fixed | spread(g, &free)].clone())
            .collect();
        Ok(Cube {
            dim: free.len(),
            verts,
        })
    }

    pub fn lines(&self, axis: usize) -> Result<(Vec<Line<T>>, Line<T>)> {
        self.check_axis(axis)?;
        let (support, pivot) = line_pairs(self.dim, axis);
        let mk = |(a, b): (usize, usize)| Line {
            a: self.verts[a].clone(),
            b: self.verts[b].clone(),
        };
        Ok((support.into_iter().map(mk).collect(), mk(pivot)))
    }

    pub fn squares(&self, i: usize, j: usize) -> Result<(Vec<Square<T>>, Square<T>)> {
        self.check_axis(i)?;
        self.check_axis(j)?;
        if i == j {
            return Err(Error::Validation(format!("square axes must differ, got {i} twice")));
        }
        let (lo, hi) = (i.min(j), i.max(j));
        let rest: Vec<usize> = (0..self.dim).filter(|&k| k != lo && k != hi).collect();
        let mut all: Vec<Square<T>> = (0..1usize << rest.len())
            .map(|f| {
                let base = spread(f, &rest);
                Square {
                    v: [0, 1 << lo, 1 << hi, 1 << lo | 1 << hi]
                        .map(|off| self.verts[base | off].clone()),
                }
            })
            .collect();
        let pivot = all.pop().expect("at least one square");
        Ok((all, pivot))
    }

    fn check_axis(&self, axis: usize) -> Result<()> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(Error::Coordinate {
                coord: axis,
                dim: self.dim,
            })
        }
    }
}

/// `gcube_i^n(x, y)`: vertex `f` is `y` if `f(i) = 1`, else `x`.
pub fn gcube<T: Clone>(n: usize, i: usize, x: T, y: T) -> Result<Cube<T>> {
    if i >= n {
        return Err(Error::Coordinate { coord: i, dim: n });
    }
    let verts = (0..1usize << n)
        .map(|f| if f >> i & 1 == 1 { y.clone() } else { x.clone() })
        .collect();
    Ok(Cube { dim: n, verts })
}

/// Whether `verts` is `gcube_i(x, y)` for some axis `i` (constant cubes count).
pub fn gcube_axis<T: PartialEq>(verts: &[T]) -> Option<usize> {
    let dim = verts.len().trailing_zeros() as usize;
    if all_equal(verts) {
        return Some(0);
    }
    (0..dim).find(|&i| {
        let x = &verts[0];
        let y = &verts[1 << i];
        verts
            .iter()
            .enumerate()
            .all(|(f, v)| v == if f >> i & 1 == 1 { y } else { x })
    })
}

impl<T: fmt::Display> fmt::Display for Cube<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.verts.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Reads the report form back: elements separated by commas outside brackets.
pub fn parse_cube(text: &str) -> Result<Cube<crate::Element>> {
    let mut verts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (k, c) in text.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                verts.push(crate::Element::parse(&text[start..k])?);
                start = k + 1;
            }
            _ => {}
        }
    }
    verts.push(crate::Element::parse(&text[start..])?);
    let dim = verts.len().trailing_zeros() as usize;
    if !verts.len().is_power_of_two() {
        return Err(Error::Parse(format!("cube has {} vertices, not a power of two", verts.len())));
    }
    Cube::new(dim, verts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labelled(dim: usize) -> Cube<usize> {
        Cube::new(dim, (0..1 << dim).collect()).unwrap()
    }

    #[test]
    fn subcube_examples() {
        let h = labelled(3);
        assert_eq!(h.subcube(&[(2, true)]).unwrap().verts(), &[4, 5, 6, 7]);
        assert_eq!(h.subcube(&[]).unwrap(), h);
        let point = h.subcube(&[(0, true), (1, false), (2, true)]).unwrap();
        assert_eq!((point.dim(), point.verts()), (0, &[5][..]));
        assert_eq!(h.subcube(&[(1, true)]).unwrap().verts(), &[2, 3, 6, 7]);
        assert!(h.subcube(&[(3, true)]).is_err());
    }

    #[test]
    fn gcube_examples() {
        let c = gcube(3, 1, 'x', 'y').unwrap();
        assert_eq!(c.verts(), &['x', 'x', 'y', 'y', 'x', 'x', 'y', 'y']);
        assert_eq!(gcube(2, 0, 'x', 'y').unwrap().verts(), &['x', 'y', 'x', 'y']);
        assert!(gcube(4, 2, 'x', 'x').unwrap().is_constant());
        assert!(!gcube(2, 0, 'x', 'y').unwrap().is_constant());
        assert!(gcube(2, 2, 'x', 'y').is_err());
    }

    #[test]
    fn lines_follow_the_labelled_cube_picture() {
        // a..h at indices 0..7
        let h = Cube::new(3, "abcdefgh".chars().collect()).unwrap();
        let (support, pivot) = h.lines(2).unwrap();
        let pairs: Vec<(char, char)> = support.iter().map(|l| (l.a, l.b)).collect();
        assert_eq!(pairs, vec![('a', 'e'), ('b', 'f'), ('c', 'g')]);
        assert_eq!((pivot.a, pivot.b), ('d', 'h'));

        let one = Cube::new(1, vec!['p', 'q']).unwrap();
        let (support, pivot) = one.lines(0).unwrap();
        assert!(support.is_empty());
        assert_eq!((pivot.a, pivot.b), ('p', 'q'));

        let g = gcube(3, 1, 'x', 'y').unwrap();
        let (support, pivot) = g.lines(1).unwrap();
        assert!(support.iter().chain([&pivot]).all(|l| (l.a, l.b) == ('x', 'y')));
    }

    #[test]
    fn squares_of_a_three_cube() {
        let h = Cube::new(3, "abcdefgh".chars().collect()).unwrap();
        let (support, pivot) = h.squares(0, 1).unwrap();
        assert_eq!(support.len(), 1);
        assert_eq!(support[0].v, ['a', 'b', 'c', 'd']);
        assert_eq!(pivot.v, ['e', 'f', 'g', 'h']);
        assert_eq!(h.squares(1, 0).unwrap().1.v, ['e', 'f', 'g', 'h']);
        let (_, p02) = h.squares(2, 0).unwrap();
        assert_eq!(p02.v, ['c', 'd', 'g', 'h']);
        assert!(h.squares(1, 1).is_err());
        let sq = Cube::new(2, vec![1, 2, 3, 4]).unwrap();
        let (support, pivot) = sq.squares(0, 1).unwrap();
        assert!(support.is_empty());
        assert_eq!(pivot.v, [1, 2, 3, 4]);
        let c = gcube(3, 0, 7, 7).unwrap();
        let (support, pivot) = c.squares(0, 2).unwrap();
        assert!(support.iter().chain([&pivot]).all(Constant::is_constant));
    }

    #[test]
    fn gcube_axis_detects_shapes() {
        assert_eq!(gcube_axis(gcube(3, 2, 1, 2).unwrap().verts()), Some(2));
        assert_eq!(gcube_axis(&[5, 5, 5, 5]), Some(0));
        assert_eq!(gcube_axis(&[1, 2, 2, 1]), None);
        assert_eq!(gcube_axis(&[1]), Some(0));
    }

    proptest! {
        #[test]
        fn line_counts(dim in 1usize..7, axis_seed in 0usize..100) {
            let axis = axis_seed % dim;
            let (support, pivot) = labelled(dim).lines(axis).unwrap();
            prop_assert_eq!(support.len(), (1 << (dim - 1)) - 1);
            prop_assert_eq!(pivot.a, (1 << dim) - 1 - (1 << axis));
            for l in support.iter().chain([&pivot]) {
                prop_assert_eq!(l.b, l.a | 1 << axis);
                prop_assert_eq!(l.a >> axis & 1, 0);
            }
        }

        #[test]
        fn gcube_lines(n in 1usize..6, i_seed in 0usize..100, k_seed in 0usize..100) {
            let (i, k) = (i_seed % n, k_seed % n);
            let (support, pivot) = gcube(n, i, 0u8, 1u8).unwrap().lines(k).unwrap();
            for l in support.iter().chain([&pivot]) {
                if k == i {
                    prop_assert_eq!((l.a, l.b), (0, 1));
                } else {
                    prop_assert!(l.a == l.b);
                }
            }
        }

        #[test]
        fn subcube_assignments_compose(
            dim in 2usize..7,
            picks in prop::collection::vec((0usize..100, any::<bool>()), 2),
        ) {
            let h = labelled(dim);
            let (c1, b1) = (picks[0].0 % dim, picks[0].1);
            let mut c2 = picks[1].0 % dim;
            if c2 == c1 { c2 = (c2 + 1) % dim; }
            let b2 = picks[1].1;
            let together = h.subcube(&[(c1, b1), (c2, b2)]).unwrap();
            // After fixing c1, coordinate c2 shifts down if it was above c1.
            let c2_after = if c2 > c1 { c2 - 1 } else { c2 };
            let c1_after = if c1 > c2 { c1 - 1 } else { c1 };
            let first = h.subcube(&[(c1, b1)]).unwrap().subcube(&[(c2_after, b2)]).unwrap();
            let second = h.subcube(&[(c2, b2)]).unwrap().subcube(&[(c1_after, b1)]).unwrap();
            prop_assert_eq!(&first, &together);
            prop_assert_eq!(&second, &together);
        }

        #[test]
        fn vertex_index_round_trip(dim in 0usize..20, seed in any::<usize>()) {
            let idx = if dim == 0 { 0 } else { seed % (1 << dim) };
            prop_assert_eq!(vertex_index(&vertex_bits(idx, dim)), idx);
        }
    }
}
