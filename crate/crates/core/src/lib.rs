//! Preferential attachment trees with vertex death and their
//! continuous-time branching-process embedding.
//!
//! * [`rates`]: rate sequences, derived sums, regime classification
//! * [`malthus`]: Laplace transform, Malthusian parameter, offspring law
//! * [`discrete`]: the discrete attachment chain
//! * [`cmj`]: the continuous-time branching process and samplers
//! * [`analysis`]: exact enumeration, tilted sampling, statistical tests
//! * [`experiment`]: replicate orchestration and verification suites

pub mod analysis;
pub mod cmj;
pub mod discrete;
pub mod experiment;
pub mod malthus;
pub mod par;
pub mod rates;
