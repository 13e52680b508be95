//! Distance-based regression for metric non-vector data.
//!
//! Objects (landmark shapes, sampled curves, correlation matrices, or plain
//! points) are embedded from their pairwise distances by classical MDS, new
//! objects are scored out-of-sample, an internal partial-least-squares model
//! links predictor scores to response scores, and predicted scores are mapped
//! back to objects in the response space ("backscoring"). Significance is
//! assessed by permutation.

pub mod corrmat;
pub mod curves;
pub mod distance;
pub mod error;
pub mod euclid;
pub mod inference;
pub mod linalg;
pub mod mds;
pub mod metric;
pub mod pipeline;
pub mod pls;
pub mod shapes;
mod serde_array2;

pub use distance::{combine_distances, DistanceMatrix};
pub use error::{Error, Result};
pub use mds::{cmds, gower_score, MdsEmbedding, Score};
pub use metric::{Backscorer, MetricSpace};
