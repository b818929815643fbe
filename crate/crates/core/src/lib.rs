//! Locate-and-forget text-guided editing.
//!
//! A caption describing the source image and an edit prompt are parsed into
//! noun-phrase chunks ([`text_parse`]); the locator compares them and decides
//! which caption phrases to push away from ([`locate`]); the composed guidance
//! rule ([`guidance`]) mixes unconditional, positive and forgetting noise
//! predictions inside a deterministic DDIM sampler ([`diffusion`]). Edit
//! quality is measured with [`metrics`], and [`pipeline`] ties the pieces into
//! the `laf` command-line tool.

pub mod diffusion;
pub mod error;
pub mod guidance;
pub mod locate;
pub mod metrics;
pub mod pipeline;
pub mod text_parse;

pub use error::{Error, Result};
