//! Conditioned Galton–Watson trees and ordered subtree pattern counts.
//!
//! The crate samples size-conditioned GW trees exactly, counts copies of an
//! arbitrary ordered pattern tree inside a host tree, computes the exact and
//! limiting expectations of those counts, and runs seeded Monte Carlo
//! experiments comparing the two.

pub mod count;
pub mod error;
pub mod expectations;
pub mod experiments;
pub mod numeric;
pub mod offspring;
pub mod oracle;
pub mod random_walk;
pub mod sampler;
pub mod tree;

pub use count::{path_copies, rooted_copies, rooted_copies_all, star_copies, total_copies, undirected_path_pairs, CopyCount};
pub use error::{Error, Result};
pub use expectations::{
    exact_root_mean_conditioned, exact_star_density, limit_root_mean, limit_root_mean_conditioned, tree_size_prob, Estimate,
    ExactMean,
};
pub use offspring::{Family, Moment, OffspringDistribution};
pub use random_walk::{local_limit_ratio, point_prob, tail_bound_report, walk_sum_pmf, IntegerPmf};
pub use sampler::{sample_conditioned, sample_unconditioned, ConditionedSampler, RngState};
pub use tree::OrderedTree;
