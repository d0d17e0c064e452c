pub mod corpus;
pub mod experiment;
pub mod fst;
pub mod lm;
pub mod pipeline;
pub mod rules;
