//! Holds the end-to-end acceptance target in `tests/acceptance.rs`.
