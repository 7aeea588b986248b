//! Backbone-free training harness.
//!
//! A synthetic scene of oriented boxes, a procedural feature field in place
//! of a CNN, and plain gradient descent on the point offsets of each
//! candidate. Only the point coordinates are learnable.

mod field;
mod learner;
mod scene;

pub use field::FeatureField;
pub use learner::{
    benchmark, init_stage, object_radius, refine_step, report, train, AssignerKind,
    BenchmarkReport, LearnerConfig, ObjectReport, ToyCandidate, TrainReport, TrainState,
};
pub use scene::{gen_scene, SceneConfig, SceneObject, SyntheticScene};
