pub mod effects;
pub mod eval;
pub mod fixture;
pub mod grammar;
pub mod paraphrase;
pub mod pca;
pub mod train;
