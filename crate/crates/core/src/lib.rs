//! Threshold concept specificity and embedding networks over lemmatized corpora.
//!
//! The crate reads annotated corpora, measures how specific a fixed set of
//! threshold concepts is to each corpus, fits heavy-tailed models to the
//! resulting rank distributions, trains word embeddings and turns concept
//! similarities into networks that are analysed across alpha cuts.

pub mod compounds;
pub mod corpus;
pub mod embeddings;
pub mod pipeline;
pub mod specificity;
pub mod stats;
pub mod tcn;
