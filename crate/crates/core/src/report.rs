use std::fmt;

use serde::Serialize;

/// The list of violations found by a checker. Empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report<V> {
    pub violations: Vec<V>,
}

impl<V> Report<V> {
    pub fn new() -> Self {
        Report { violations: Vec::new() }
    }

    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: V) {
        self.violations.push(v);
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, V> {
        self.violations.iter()
    }
}

impl<V> Default for Report<V> {
    fn default() -> Self {
        Report::new()
    }
}

impl<V: fmt::Display> fmt::Display for Report<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
