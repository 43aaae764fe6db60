use crate::error::{Error, Result};

/// Resource caps shared by every operation that allocates or loops in
/// proportion to its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Bytes that a single table, sieve or transform may occupy.
    pub memory_bytes: u64,
    /// Largest number of base-set elements a sieve may hold.
    pub element_cap: u64,
    /// Cap on inner-loop iterations for direct summations.
    pub work_cap: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            memory_bytes: 2 << 30,
            element_cap: 100_000_000,
            work_cap: 50_000_000_000,
        }
    }
}

impl Budget {
    pub fn check_memory(&self, what: &str, bytes: u64) -> Result<()> {
        if bytes > self.memory_bytes {
            return Err(Error::Resource {
                what: what.to_string(),
                budget: "memory_bytes",
                needed: bytes,
                allowed: self.memory_bytes,
            });
        }
        Ok(())
    }

    pub fn check_elements(&self, what: &str, count: u64) -> Result<()> {
        if count > self.element_cap {
            return Err(Error::Resource {
                what: what.to_string(),
                budget: "element_cap",
                needed: count,
                allowed: self.element_cap,
            });
        }
        Ok(())
    }

    pub fn check_work(&self, what: &str, work: u64) -> Result<()> {
        if work > self.work_cap {
            return Err(Error::Resource {
                what: what.to_string(),
                budget: "work_cap",
                needed: work,
                allowed: self.work_cap,
            });
        }
        Ok(())
    }
}
