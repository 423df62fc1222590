//! Local boundary surrogates for black-box tabular classifiers.
//!
//! Given a queryable classifier `b` and a suspicious input, this crate locates
//! the classifier's nearest decision boundaries by Monte Carlo search, fits a
//! small decision-tree surrogate to them, and ranks the features a reviewer
//! should verify to counter a potentially manipulated input. It also ships the
//! pieces needed to evaluate that surrogate: a local-fidelity metric, and a
//! globally trained substitute model (Jacobian data augmentation) to compare
//! against.
//!
//! Modules:
//! - [`dataset`]: tabular ingestion, encoding, splits, and the scaled metric
//!   space every geometric routine works in.
//! - [`forest`]: from-scratch CART trees and a bagged random forest; the forest
//!   plays the black box, the depth-bounded tree plays the surrogate.
//! - [`lad`]: the boundary search itself (support points, touchpoints,
//!   hypersphere sampling, key-feature extraction).
//! - [`fidelity`]: agreement between surrogate and black box in a ball around
//!   the instance, plus the radius-sweep comparison harness.
//! - [`substitute`]: the global linear-softmax substitute baseline trained with
//!   Jacobian augmentation.

pub mod dataset;
pub mod fidelity;
pub mod forest;
pub mod lad;
pub mod seeding;
pub mod substitute;
pub mod synth;
