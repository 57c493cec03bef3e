//! Name-keyed registries of interchangeable implementations.
//!
//! Each family (association strategies, tuning objectives, gradient checks)
//! owns a `Registry` of factories. Callers resolve a variant by the name they
//! got from a config file or command line.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{name}` (known: {known})")]
pub struct UnknownName {
    pub kind: &'static str,
    pub name: String,
    pub known: String,
}

/// Factory map from lowercase name to constructor.
pub struct Registry<F: ?Sized> {
    kind: &'static str,
    entries: BTreeMap<String, Box<F>>,
}

impl<F: ?Sized> Registry<F> {
    pub fn new(kind: &'static str) -> Self {
        Self {
            kind,
            entries: BTreeMap::new(),
        }
    }

    /// Registers `factory` under `name`, replacing any previous entry.
    pub fn register(&mut self, name: &str, factory: Box<F>) -> &mut Self {
        self.entries.insert(name.to_ascii_lowercase(), factory);
        self
    }

    pub fn get(&self, name: &str) -> Result<&F, UnknownName> {
        self.entries
            .get(&name.to_ascii_lowercase())
            .map(|f| f.as_ref())
            .ok_or_else(|| UnknownName {
                kind: self.kind,
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(&name.to_ascii_lowercase())
    }

    /// Registered names in sorted order.
    pub fn names(&self) -> Vec<&str> {
        self.entries.keys().map(String::as_str).collect()
    }
}

impl<F: ?Sized> fmt::Debug for Registry<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("names", &self.names())
            .finish()
    }
}
