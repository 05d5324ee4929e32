//! Synthetic identity-document barcode datasets.
//!
//! Builds on `idbsynth-core` with everything that touches the outside world:
//! the chat-completion client, PNG templates and dataset files, image
//! augmentation and the `idbsynth` command line.

pub mod augment;
pub mod compositor;
pub mod config;
pub mod dataset;
pub mod extract;
pub mod formats;
pub mod llm;
pub mod pipeline;
pub mod template;
