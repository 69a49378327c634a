//! Organization mining over social graphs: a homophily-guided focused
//! crawler, synthetic ground-truth worlds, centrality measures, leadership
//! ranking and classification, and modularity-based community roles.
//!
//! Numeric kernels are generic over [`scalar::Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64` for everyday use.

pub mod centrality;
pub mod community;
pub mod crawler;
pub mod graph;
pub mod leadership;
pub mod linalg;
pub mod pipeline;
pub mod scalar;
pub mod synthworld;
pub mod util;

pub use graph::{NodeId, Profile, SocialGraph};
pub use scalar::Scalar;

pub type CentralityTable = centrality::CentralityTable<f64>;
pub type Partition = community::Partition<f64>;
pub type MergeStep = community::MergeStep<f64>;

pub type CentralityTable32 = centrality::CentralityTable<f32>;
pub type Partition32 = community::Partition<f32>;
