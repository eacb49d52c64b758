//! Shared inputs for the benchmarks.

use hsb_core::ExponentMatrix;

/// A spread of matrices covering every type label and both sides of the boundary.
pub fn sample_matrices() -> Vec<ExponentMatrix> {
    [
        "1,1,1;1,1,1",
        "1/3,1/3,1/3;1/4,1/4,1/2",
        "0,1/2,1/2;0,1/4,1/4",
        "1,1,1;0,0,3/4",
        "1/2,1/2,1/2;0,1/2,1/2",
        "1,1,1;-1/4,3/4,3/4",
        "3/4,1/2,1/2;1/4,1/3,1/2",
        "0,3/4,3/4;1/2,1/2,1/2",
    ]
    .iter()
    .map(|t| t.parse().expect("valid matrix"))
    .collect()
}
