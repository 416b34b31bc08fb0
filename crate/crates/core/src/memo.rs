//! Thread-safe memo table keyed by subset masks.
//!
//! Writes are idempotent (every writer stores the same value for a key), so a
//! relaxed atomic store is enough for the dense variant.

use std::collections::HashMap;
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::RwLock;

use crate::subset::SubsetMask;

const DENSE_LIMIT: usize = 20;
const UNKNOWN: i64 = i64::MIN;

pub(crate) enum Memo {
    Dense(Vec<AtomicI64>),
    Sparse(RwLock<HashMap<u64, i64>>),
}

impl Memo {
    pub fn new(n: usize) -> Self {
        if n <= DENSE_LIMIT {
            Memo::Dense((0..1usize << n).map(|_| AtomicI64::new(UNKNOWN)).collect())
        } else {
            Memo::Sparse(RwLock::new(HashMap::new()))
        }
    }

    #[inline]
    pub fn get_or_insert_with(&self, x: SubsetMask, f: impl FnOnce() -> i64) -> i64 {
        match self {
            Memo::Dense(slots) => {
                let slot = &slots[x.bits() as usize];
                let v = slot.load(Ordering::Relaxed);
                if v != UNKNOWN {
                    return v;
                }
                let v = f();
                slot.store(v, Ordering::Relaxed);
                v
            }
            Memo::Sparse(map) => {
                if let Some(&v) = map.read().expect("memo lock poisoned").get(&x.bits()) {
                    return v;
                }
                let v = f();
                map.write().expect("memo lock poisoned").insert(x.bits(), v);
                v
            }
        }
    }

    pub fn clear(&self) {
        match self {
            Memo::Dense(slots) => slots.iter().for_each(|s| s.store(UNKNOWN, Ordering::Relaxed)),
            Memo::Sparse(map) => map.write().expect("memo lock poisoned").clear(),
        }
    }

    pub fn fresh_like(&self) -> Self {
        match self {
            Memo::Dense(slots) => Memo::Dense((0..slots.len()).map(|_| AtomicI64::new(UNKNOWN)).collect()),
            Memo::Sparse(_) => Memo::Sparse(RwLock::new(HashMap::new())),
        }
    }
}

impl std::fmt::Debug for Memo {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Memo::Dense(slots) => write!(f, "Memo::Dense({} slots)", slots.len()),
            Memo::Sparse(_) => write!(f, "Memo::Sparse"),
        }
    }
}
