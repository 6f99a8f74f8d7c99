//! Judgment-outcome prediction pipeline.
//!
//! Ingests court-judgment documents, auto-labels them by disposition
//! (allow / dismiss / dispose), vectorizes them with an n-gram TF-IDF
//! pipeline, trains and evaluates four classifier families, and serves
//! predictions with top-feature explanations through a drop-directory
//! watch service.

pub mod corpus;
pub mod eval;
pub mod labeler;
pub mod learners;
pub mod pipeline;
pub mod predictsvc;
pub mod rng;
pub mod textprep;
pub mod vectorizer;
