//! Finite team decision problems: strategic measures, static reduction, classical
//! solvers, linear relaxations of correlated policies, quantum strategies, a
//! quantized Witsenhausen model, and counterexample checks.

#![allow(clippy::needless_range_loop)]

pub mod approx;
pub mod classical;
pub mod counterexamples;
pub mod error;
pub mod instances;
pub mod linprog;
pub mod model;
pub mod quantum;
pub mod reduction;
pub mod relax;

pub use approx::{solve_refinement_chain, WitsenhausenConfig, WitsenhausenInstance, WitsenhausenModel};
pub use classical::{enumerate_optimal, ClassicalSolution};
pub use error::{Result, TeamError};
pub use model::{
    evaluate, profile_value, strategic_measure_of, strategic_measure_of_behavioral, BehavioralPolicy,
    DeterministicProfile, FiniteStaticTeam, LoadedProblem, ProblemFile, Sense, StrategicMeasure,
};
pub use quantum::{QuantumStrategy, XorTeam};
pub use reduction::{static_reduce, ReductionArtifacts, SequentialFiniteTeam};
pub use relax::{hierarchy_report, CorrelationClass, HierarchyReport};
