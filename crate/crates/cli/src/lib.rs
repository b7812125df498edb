//! Library side of the `hyh` command: invariant suites, benchmarks and the
//! timing helpers they share.

pub mod bench;
pub mod timing;
pub mod verify;
