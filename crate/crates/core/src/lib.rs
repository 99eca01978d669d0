pub mod channel;
pub mod error;
pub mod harness;
pub mod interference;
pub mod linalg;
pub mod noisecov;
pub mod prototype;
pub mod receiver;
pub mod tensor;
pub mod waveform;

pub use error::{Error, Result};
