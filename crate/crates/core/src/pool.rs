//! Hash-consing interner for elements.

use crate::element::Element;
use rustc_hash::FxHashMap;

#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ElemId(pub u32);

impl ElemId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Each distinct element is stored once; ids compare equal iff the elements do.
#[derive(Default)]
pub struct ElementPool {
    elems: Vec<Element>,
    index: FxHashMap<Element, ElemId>,
}

impl ElementPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, e: Element) -> ElemId {
        if let Some(&id) = self.index.get(&e) {
            return id;
        }
        let id = ElemId(u32::try_from(self.elems.len()).expect("element pool overflow"));
        self.elems.push(e.clone());
        self.index.insert(e, id);
        id
    }

    pub fn lookup(&self, e: &Element) -> Option<ElemId> {
        self.index.get(e).copied()
    }

    pub fn get(&self, id: ElemId) -> &Element {
        &self.elems[id.index()]
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }
}
