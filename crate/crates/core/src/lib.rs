//! Training-free token pruning for omni-modal (video + audio + text) LLM inputs.
//!
//! The pipeline scores how relevant each modality is to the query, picks a
//! uniform or modality-centric pruning regime, allocates per-group pruning
//! ratios under a global budget, and then selects which tokens survive inside
//! every temporal group: the most attended audio positions and the least
//! redundant video tokens.
//!
//! ```no_run
//! use avprune::pipeline::{run_pipeline, PipelineConfig};
//! use avprune::synth::{generate_synthetic, Regime, SynthParams};
//!
//! let inst = generate_synthetic(&SynthParams::new(7, 16, 144, 25, 64, Regime::Balanced))?;
//! let result = run_pipeline(&inst.bundle, &inst.spec, &PipelineConfig::with_eta(0.7, 0.7))?;
//! println!("{}", result.summary().retained_ratio);
//! # Ok::<(), avprune::Error>(())
//! ```

pub mod allocation;
pub mod cost;
mod error;
pub mod grouping;
pub mod io;
pub mod oracle;
pub mod par;
pub mod pipeline;
pub mod pruning;
pub mod scoring;
pub mod synth;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result, Stage};
pub use par::Execution;
pub use tensor::{MatRef, Tensor};
