//! Discrete STRIPS-compatible word embeddings (DSAW) and the machinery around
//! them: corpus ingestion, CBOW/DSAW/SkipGram training with hand-derived
//! gradients, the binary effect algebra (progression, regression, combined
//! effects), embedding evaluation protocols, and a classical planner that
//! turns paraphrasing queries into net-benefit planning tasks.

pub mod algebra;
pub mod bits;
pub mod corpus;
pub mod evalsuite;
pub mod fixtures;
pub mod nncore;
pub mod planner;
pub mod trainer;
