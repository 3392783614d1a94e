//! Home of the `acceptance` test target (`tests/acceptance.rs`), which runs
//! every acceptance criterion and prints one pass/fail line for each.
//!
//! It lives in its own package, which sorts last in the workspace, so that
//! `cargo test --workspace` runs every other test binary before it.
