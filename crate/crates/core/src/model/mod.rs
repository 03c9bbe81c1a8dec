//! Linear softmax policy over feasible actions.

mod features;
mod policy;

pub use features::{ActionSlots, Decision, FeatureLayout, FeatureVector, Featurizer, DEFAULT_DIM, DEFAULT_SLOTS};
pub use policy::{sample, ActionDistribution, PolicyParams};
pub(crate) use policy::{perplexity, sample_index};
