//! Music-video synchronization toolkit.
//!
//! Pipeline: extract the music onset envelope and beats, extract the
//! visual impact envelope and beats from optical flow, match the two
//! beat sequences with a monotone one-to-one dynamic program, then
//! retime every frame through an impulse-equalizing warping function.
//! DTW and random-walk unfolding baselines share the retime backend.

pub mod audio;
pub mod error;
pub mod media;
pub mod metrics;
pub mod script;
pub mod sync;
pub mod synth;
pub mod types;
pub mod visual;

pub use error::{Error, Result};
pub use media::{AudioTrack, Frame, FrameSequence};
pub use types::{BeatSequence, Envelope};
