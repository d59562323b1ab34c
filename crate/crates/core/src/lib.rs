//! Differential recurrent neural networks (dRNN) for sequence classification.
//!
//! A dRNN is an LSTM whose input, forget and output gates are additionally
//! driven by discrete derivatives of the memory cell's internal state. This
//! crate provides the cell ([`cell`]), hand-written backpropagation through
//! time with the truncation rules the model is trained with plus an exact
//! mode and finite-difference oracles ([`training`]), and the data side:
//! a text dataset format, PCA preprocessing, subject-wise splits and a
//! synthetic spike task ([`data`]).
//!
//! ```
//! use drnn::cell::{forward_sequence, CellParams};
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
//! let params = CellParams::random(1, 3, 8, 2, 0.08, &mut rng)?;
//! let frames = vec![vec![0.1, 0.2, 0.3]; 5];
//! let (outputs, traces) = forward_sequence(&frames, &params)?;
//! assert_eq!(outputs.len(), 5);
//! assert_eq!(traces[0].v, traces[0].s);
//! # Ok::<(), drnn::Error>(())
//! ```

pub mod cell;
pub mod data;
mod error;
mod fsutil;
pub mod numeric;
pub mod params_io;
pub mod training;

pub use error::{Error, Result};
pub use fsutil::write_atomic;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cell.md")]
    mod cell {}
    #[doc = include_str!("../../../book/src/dos.md")]
    mod dos {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/gradcheck.md")]
    mod gradcheck {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
