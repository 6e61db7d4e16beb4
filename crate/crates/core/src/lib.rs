//! Method-level fault localization for Java projects with chat-model
//! agents and classical ranking techniques.
//!
//! The user guide lives in `book/`; its Rust examples run as doc-tests.

pub mod agents;
pub mod baseline;
pub mod bug_input;
pub mod demo;
pub mod eval;
pub mod index;
pub mod llm;
pub mod matcher;
pub mod ranking;
pub mod toolbox;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/configuration.md")]
    mod configuration {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/library.md")]
    mod library {}
}
