pub mod check;
pub mod contract;
pub mod counterexample;
pub mod geodesic;
pub mod solve;
pub mod sweep;
