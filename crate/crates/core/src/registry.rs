//! Name-keyed registries of interchangeable strategies.
//!
//! Every family of interchangeable algorithms in the crate (gauge functions,
//! equilibrium solvers, cover strategies, transversality models) is exposed
//! as a trait object and looked up by name at runtime. [`Registry`] is the
//! shared container: insertion order is preserved so listings are stable.

use std::sync::Arc;

use crate::error::{Error, Result};

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    entries: Vec<(String, Arc<T>)>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: Vec::new(),
        }
    }

    /// Register `item` under `name`, replacing any earlier entry of that name.
    pub fn register(&mut self, name: impl Into<String>, item: Arc<T>) {
        let name = name.into();
        if let Some(slot) = self.entries.iter_mut().find(|(n, _)| *n == name) {
            slot.1 = item;
        } else {
            self.entries.push((name, item));
        }
    }

    pub fn get(&self, name: &str) -> Result<Arc<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, item)| Arc::clone(item))
            .ok_or_else(|| Error::UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.iter().any(|(n, _)| n == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Named: Send + Sync {
        fn id(&self) -> u32;
    }
    struct A(u32);
    impl Named for A {
        fn id(&self) -> u32 {
            self.0
        }
    }

    #[test]
    fn lookup_and_replace() {
        let mut reg: Registry<dyn Named> = Registry::new("thing");
        reg.register("a", Arc::new(A(1)));
        reg.register("b", Arc::new(A(2)));
        reg.register("a", Arc::new(A(3)));
        assert_eq!(reg.names(), vec!["a", "b"]);
        assert_eq!(reg.get("a").unwrap().id(), 3);
        assert_eq!(reg.len(), 2);
    }

    #[test]
    fn unknown_name_lists_known() {
        let mut reg: Registry<dyn Named> = Registry::new("thing");
        reg.register("a", Arc::new(A(1)));
        let err = reg.get("zzz").err().unwrap().to_string();
        assert!(err.contains("unknown thing `zzz`"));
        assert!(err.contains("a"));
    }
}
