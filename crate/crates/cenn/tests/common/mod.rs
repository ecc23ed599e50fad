//! Shared between integration test targets.

/// Cases per property suite. The acceptance checks assert this floor, so
/// lowering it for a quick local run will fail them.
pub const PROPTEST_CASES: u32 = 1000;
