//! Finite algebras given by operation tables, and the interface shared with
//! computable algebras.

use crate::element::Element;
use crate::error::{Error, Result};
use crate::pool::{ElemId, ElementPool};
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpSig {
    pub symbol: String,
    pub arity: usize,
}

/// An algebra whose operations can be evaluated on [`Element`]s.
pub trait ComputableAlgebra: Send + Sync {
    fn name(&self) -> &str;

    fn signature(&self) -> &[OpSig];

    /// Evaluates operation `op` (an index into [`signature`](Self::signature)).
    /// Arguments are assumed valid; see [`apply`] for the checked entry point.
    fn eval(&self, op: usize, args: &[Element]) -> Element;

    fn check_arg(&self, _e: &Element) -> Result<()> {
        Ok(())
    }

    /// Whether `op(a) == op(b)`, ideally without building either image.
    fn images_equal(&self, pool: &ElementPool, op: usize, a: &[ElemId], b: &[ElemId]) -> bool {
        if a == b {
            return true;
        }
        let fetch = |ids: &[ElemId]| ids.iter().map(|&id| pool.get(id).clone()).collect::<Vec<_>>();
        self.eval(op, &fetch(a)) == self.eval(op, &fetch(b))
    }

    fn op_index(&self, symbol: &str) -> Option<usize> {
        self.signature().iter().position(|s| s.symbol == symbol)
    }
}

/// Checked application by symbol.
pub fn apply(alg: &dyn ComputableAlgebra, symbol: &str, args: &[Element]) -> Result<Element> {
    let op = alg
        .op_index(symbol)
        .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))?;
    let expected = alg.signature()[op].arity;
    if expected != args.len() {
        return Err(Error::Arity {
            symbol: symbol.to_string(),
            expected,
            got: args.len(),
        });
    }
    for a in args {
        alg.check_arg(a)?;
    }
    Ok(alg.eval(op, args))
}

/// Interned, memoized evaluation of a computable algebra.
pub struct Evaluator<'a> {
    alg: &'a dyn ComputableAlgebra,
    pub pool: ElementPool,
    memo: FxHashMap<Box<[u32]>, ElemId>,
}

impl<'a> Evaluator<'a> {
    pub fn new(alg: &'a dyn ComputableAlgebra) -> Self {
        Evaluator {
            alg,
            pool: ElementPool::new(),
            memo: FxHashMap::default(),
        }
    }

    pub fn algebra(&self) -> &'a dyn ComputableAlgebra {
        self.alg
    }

    pub fn intern(&mut self, e: Element) -> ElemId {
        self.pool.intern(e)
    }

    pub fn get(&self, id: ElemId) -> &Element {
        self.pool.get(id)
    }

    pub fn eval(&mut self, op: usize, args: &[ElemId]) -> ElemId {
        let mut buf = [0u32; 8];
        let mut heap = Vec::new();
        let key: &[u32] = if args.len() < buf.len() {
            buf[0] = op as u32;
            for (slot, a) in buf[1..].iter_mut().zip(args) {
                *slot = a.0;
            }
            &buf[..args.len() + 1]
        } else {
            heap.push(op as u32);
            heap.extend(args.iter().map(|a| a.0));
            &heap
        };
        if let Some(&id) = self.memo.get(key) {
            return id;
        }
        let vals: Vec<Element> = args.iter().map(|&a| self.pool.get(a).clone()).collect();
        let out = self.alg.eval(op, &vals);
        let id = self.pool.intern(out);
        self.memo.insert(key.into(), id);
        id
    }

    pub fn images_equal(&self, op: usize, a: &[ElemId], b: &[ElemId]) -> bool {
        self.alg.images_equal(&self.pool, op, a, b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operation {
    pub symbol: String,
    pub arity: usize,
    pub table: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    ops: Vec<Operation>,
    sig: Vec<OpSig>,
}

#[derive(Serialize, Deserialize)]
struct AlgebraFile {
    name: String,
    size: u64,
    operations: Vec<OperationFile>,
}

#[derive(Serialize, Deserialize)]
struct OperationFile {
    symbol: String,
    arity: u64,
    table: Vec<u64>,
}

impl FiniteAlgebra {
    pub fn new(name: impl Into<String>, size: usize, ops: Vec<Operation>) -> Result<Self> {
        if size == 0 {
            return Err(Error::Validation("size must be at least 1".into()));
        }
        if size > u32::MAX as usize {
            return Err(Error::Validation("size too large".into()));
        }
        for (k, op) in ops.iter().enumerate() {
            if ops[..k].iter().any(|o| o.symbol == op.symbol) {
                return Err(Error::Validation(format!("duplicate symbol `{}`", op.symbol)));
            }
            let expected = u32::try_from(op.arity)
                .ok()
                .and_then(|a| size.checked_pow(a))
                .ok_or_else(|| Error::Validation(format!("table of `{}` too large", op.symbol)))?;
            if op.table.len() != expected {
                return Err(Error::Validation(format!(
                    "table of `{}` has {} entries, expected {expected}",
                    op.symbol,
                    op.table.len()
                )));
            }
            if let Some(bad) = op.table.iter().find(|&&v| v as usize >= size) {
                return Err(Error::Validation(format!(
                    "table of `{}` contains {bad}, outside carrier of size {size}",
                    op.symbol
                )));
            }
        }
        let sig = ops
            .iter()
            .map(|o| OpSig {
                symbol: o.symbol.clone(),
                arity: o.arity,
            })
            .collect();
        Ok(FiniteAlgebra {
            name: name.into(),
            size,
            ops,
            sig,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: AlgebraFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("algebra file: {e}")))?;
        let size = usize::try_from(file.size).map_err(|_| Error::Validation("size too large".into()))?;
        let mut ops = Vec::new();
        for op in file.operations {
            let table = op
                .table
                .iter()
                .map(|&v| {
                    u32::try_from(v).map_err(|_| {
                        Error::Validation(format!("table of `{}` contains {v}, outside carrier of size {size}", op.symbol))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            ops.push(Operation {
                symbol: op.symbol,
                arity: op.arity as usize,
                table,
            });
        }
        FiniteAlgebra::new(file.name, size, ops)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let file = AlgebraFile {
            name: self.name.clone(),
            size: self.size as u64,
            operations: self
                .ops
                .iter()
                .map(|o| OperationFile {
                    symbol: o.symbol.clone(),
                    arity: o.arity as u64,
                    table: o.table.iter().map(|&v| v as u64).collect(),
                })
                .collect(),
        };
        serde_json::to_string(&file).expect("serializable")
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn operations(&self) -> &[Operation] {
        &self.ops
    }

    /// Table lookup; the flat index of `(a_0,…,a_{k−1})` is `Σ a_d·N^{k−1−d}`.
    pub fn eval_op(&self, op: usize, args: &[u32]) -> u32 {
        let n = self.size;
        let idx = args.iter().fold(0usize, |acc, &a| acc * n + a as usize);
        self.ops[op].table[idx]
    }

    pub fn is_associative(&self, op: usize) -> bool {
        let o = &self.ops[op];
        if o.arity != 2 {
            return false;
        }
        let n = self.size as u32;
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..n).all(|c| {
                    let ab = self.eval_op(op, &[a, b]);
                    let bc = self.eval_op(op, &[b, c]);
                    self.eval_op(op, &[ab, c]) == self.eval_op(op, &[a, bc])
                })
            })
        })
    }
}

impl ComputableAlgebra for FiniteAlgebra {
    fn name(&self) -> &str {
        &self.name
    }

    fn signature(&self) -> &[OpSig] {
        &self.sig
    }

    fn eval(&self, op: usize, args: &[Element]) -> Element {
        let idx: Vec<u32> = args
            .iter()
            .map(|a| match a {
                Element::Fin(v) => *v,
                other => panic!("non-carrier argument {other} to a finite algebra"),
            })
            .collect();
        Element::Fin(self.eval_op(op, &idx))
    }

    fn check_arg(&self, e: &Element) -> Result<()> {
        match e {
            Element::Fin(v) if (*v as usize) < self.size => Ok(()),
            other => Err(Error::Validation(format!(
                "{other} is not an element of {} (size {})",
                self.name, self.size
            ))),
        }
    }
}
