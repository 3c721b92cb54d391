//! Service recommendation for scientific workflow composition.
//!
//! Workflows are merged into a labelled service graph, turned into token
//! sequences, embedded with skip-gram, and ranked online by successor
//! probability times vector similarity.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod ingest;
pub mod recommend;
pub mod synthetic;
pub mod wskg;
