use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

/// Interned identifier used for coordinates, constants and ODE state variables.
///
/// Symbols compare by name, and their hash depends only on the name, so
/// canonical term orderings are identical across processes regardless of
/// interning order.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Symbol(u32);

struct Interner {
    names: Vec<Arc<str>>,
    hashes: Vec<u64>,
    lookup: HashMap<Arc<str>, u32>,
}

fn interner() -> &'static RwLock<Interner> {
    static INTERNER: OnceLock<RwLock<Interner>> = OnceLock::new();
    INTERNER.get_or_init(|| {
        RwLock::new(Interner {
            names: Vec::new(),
            hashes: Vec::new(),
            lookup: HashMap::new(),
        })
    })
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl Symbol {
    pub fn new(name: &str) -> Self {
        if let Some(&id) = interner().read().expect("symbol table poisoned").lookup.get(name) {
            return Symbol(id);
        }
        let mut table = interner().write().expect("symbol table poisoned");
        if let Some(&id) = table.lookup.get(name) {
            return Symbol(id);
        }
        let id = table.names.len() as u32;
        let name: Arc<str> = Arc::from(name);
        table.names.push(name.clone());
        table.hashes.push(fnv1a(name.as_bytes()));
        table.lookup.insert(name, id);
        Symbol(id)
    }

    pub fn name(&self) -> Arc<str> {
        interner().read().expect("symbol table poisoned").names[self.0 as usize].clone()
    }

    pub(crate) fn stable_hash(&self) -> u64 {
        interner().read().expect("symbol table poisoned").hashes[self.0 as usize]
    }

    /// Bit used in the free-variable mask of expression nodes.
    pub(crate) fn mask_bit(&self) -> u64 {
        1u64 << (self.stable_hash() % 64)
    }
}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        if self.0 == other.0 {
            return std::cmp::Ordering::Equal;
        }
        let table = interner().read().expect("symbol table poisoned");
        let a = &table.names[self.0 as usize];
        let b = &table.names[other.0 as usize];
        // Shorter names first so that x2 sorts before x10.
        a.len().cmp(&b.len()).then_with(|| a.cmp(b))
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Symbol({})", self.name())
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}
