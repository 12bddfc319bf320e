//! Holds the workspace acceptance suite in `tests/acceptance.rs`. Run it with
//! `cargo test -p hyperchange-tests --test acceptance`; it prints one PASS or
//! FAIL line per criterion and exits non-zero if any criterion fails.
