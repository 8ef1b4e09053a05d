//! Cross-lingual instruction-tuning data pipeline and exact-match
//! evaluation.
//!
//! The pipeline turns sentence-aligned parallel corpora into
//! translation-following demonstrations ([`demogen`]), mixes them with
//! Alpaca-style instruction data ([`datasets`]), and scores completion
//! endpoints on multilingual QA benchmarks ([`bench`], [`evalrun`]).

pub mod bench;
pub mod corpus;
pub mod datasets;
pub mod demogen;
pub mod error;
pub mod evalrun;
pub mod lang;
pub mod sampling;

pub use error::{Error, Result};
pub use lang::LanguageCode;
