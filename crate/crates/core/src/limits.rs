//! Size guards for exhaustive scans.
//!
//! Every operation that enumerates coalitions, partitions, or preference
//! chains is exponential in the number of agents. Each such operation takes
//! a [`SearchLimits`] and refuses instances above the relevant bound with
//! [`Error::TooLarge`](crate::Error::TooLarge) instead of hanging. The
//! bounds are configuration, not hard caps: callers raise them explicitly
//! (the CLI wires this to `CLAIMSTABLE_MAX_N` and `--force`).

/// Per-operation agent-count bounds for exhaustive searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    /// Blocking-coalition scans (2^n coalitions).
    pub blocking: usize,
    /// Partition enumeration (Bell(n) partitions, each scanned for blockers).
    pub partitions: usize,
    /// Preference-cycle search over all nonempty coalitions.
    pub cycles: usize,
    /// Full preference-order construction for one agent.
    pub preferences: usize,
    /// Pairwise alignment check over coalition pairs sharing two members.
    pub alignment: usize,
    /// Single-peaked stability scans (enumeration plus re-solving per block).
    pub scan: usize,
    /// Brute-force top-coalition search inside the constructive algorithm.
    pub top_search: usize,
}

impl SearchLimits {
    pub const fn new() -> Self {
        SearchLimits {
            blocking: 22,
            partitions: 12,
            cycles: 9,
            preferences: 20,
            alignment: 12,
            scan: 10,
            top_search: 12,
        }
    }

    /// Raise every bound to at least `n`. Used when a caller insists on a
    /// larger instance and accepts the runtime.
    pub fn raised_to(mut self, n: usize) -> Self {
        self.blocking = self.blocking.max(n);
        self.partitions = self.partitions.max(n);
        self.cycles = self.cycles.max(n);
        self.preferences = self.preferences.max(n);
        self.alignment = self.alignment.max(n);
        self.scan = self.scan.max(n);
        self.top_search = self.top_search.max(n);
        self
    }

    pub(crate) fn check(&self, what: &'static str, n: usize, max: usize) -> crate::Result<()> {
        if n > max {
            Err(crate::Error::TooLarge { what, n, max })
        } else {
            Ok(())
        }
    }
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self::new()
    }
}
