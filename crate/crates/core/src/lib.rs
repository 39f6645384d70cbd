//! Bias auditing for distributional word vector spaces.
//!
//! The crate measures explicit bias (WEAT effect size and permutation test,
//! embedding coherence, bias analogies) and implicit bias (KMeans++ target
//! separability) of term sets in a word embedding space, scores the space's
//! semantic quality on sentence similarity, and runs batch audits over many
//! spaces and tests.

pub mod audit;
pub mod embedding;
pub mod linalg;
pub mod metrics;

pub mod specs;
pub mod stats;
pub mod sts;

pub use embedding::{EmbeddingSpace, LookupResult, LookupStatus, NormalizationPolicy};

pub use metrics::{Metric, MetricError, MetricScore};
pub use specs::{resolve, BiasSpecification, ResolvedSpec, SpecFile};
