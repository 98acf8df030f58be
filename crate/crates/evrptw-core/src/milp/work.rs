//! Deterministic work accounting.
//!
//! Solver limits are enforced in abstract work units ("ticks") rather than
//! wall-clock time, so a run with the same model, configuration and seed
//! performs exactly the same sequence of steps regardless of machine load.
//! One tick is calibrated to roughly a microsecond of simplex work on a
//! desktop CPU, and second-denominated limits are converted with
//! [`TICKS_PER_SECOND`].

/// Nominal ticks per second of configured time limit.
pub const TICKS_PER_SECOND: u64 = 1_000_000;

/// Monotone counter with a hard budget.
#[derive(Debug, Clone)]
pub struct WorkMeter {
    used: u64,
    limit: u64,
}

impl WorkMeter {
    pub fn with_limit(limit: u64) -> Self {
        WorkMeter { used: 0, limit }
    }

    pub fn unlimited() -> Self {
        WorkMeter {
            used: 0,
            limit: u64::MAX,
        }
    }

    /// Budget equivalent to `seconds` of nominal solver time.
    pub fn from_seconds(seconds: f64) -> Self {
        let ticks = (seconds * TICKS_PER_SECOND as f64).ceil();
        WorkMeter {
            used: 0,
            limit: if ticks >= u64::MAX as f64 {
                u64::MAX
            } else {
                ticks as u64
            },
        }
    }

    /// A sub-meter that cannot outlive this meter's remaining budget.
    pub fn child(&self, limit: u64) -> Self {
        WorkMeter {
            used: 0,
            limit: limit.min(self.remaining()),
        }
    }

    pub fn add(&mut self, ticks: u64) {
        self.used = self.used.saturating_add(ticks);
    }

    /// Fold a finished child's consumption back into this meter.
    pub fn absorb(&mut self, child: &WorkMeter) {
        self.add(child.used);
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn remaining(&self) -> u64 {
        self.limit.saturating_sub(self.used)
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }
}
