//! Placeholder bench; filled in once the learners exist.
fn main() {}
