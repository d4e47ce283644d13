//! Attack detection for blockchain transactions.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`ingest`] recovers full transactions from a node (or a recorded fixture)
//!    and groups them into fixed-length time windows.
//! 2. [`evmdecode`] disassembles the transaction input into EVM instructions and
//!    [`imaging`] turns the instruction bytes and the transferred value into a
//!    fixed-shape grey image.
//! 3. [`neuralcore`] is a small convolutional classifier (conv, max-pool, dense,
//!    softmax) with hand-written backpropagation and Adam, and [`collab`] trains
//!    it either centrally or across simulated mining nodes that exchange and
//!    average gradients every round.
//! 4. [`eval`] scores predictions with a confusion matrix, accuracy and
//!    macro-averaged precision and recall.
//!
//! [`datagen`] synthesises labelled traffic for the six attack classes plus
//! normal behaviour, and [`txcore`] holds the shared transaction model and the
//! dataset file format.

pub mod collab;
pub mod datagen;
pub mod eval;
pub mod evmdecode;
pub mod imaging;
pub mod ingest;
pub mod neuralcore;
pub mod rng;
pub mod txcore;

pub use txcore::{ClassLabel, Dataset, Transaction, U256};
