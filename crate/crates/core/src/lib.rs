//! A parameter-less evolutionary portfolio for black-box bitstring optimization.
//!
//! Three estimation-of-distribution algorithms (UMDA, ECGA and hBOA) each run
//! inside a parameter-less population ladder. The [`portfolio`] scheduler
//! gives them equal time slices in order of model complexity and switches
//! off simpler engines once a more complex one has a better best average
//! fitness.
//!
//! ```
//! use evoport::{lookup_problem, run_portfolio, PortfolioSettings, StopCondition};
//!
//! let problem = lookup_problem(10, 20, 0.0).unwrap();
//! let stop = StopCondition { target_fitness: Some(20.0), max_fitness_calls: Some(200_000), ..Default::default() };
//! let result = run_portfolio(&PortfolioSettings::default(), &problem, 7, stop).unwrap();
//! assert_eq!(result.best_fitness, Some(20.0));
//! ```

pub mod cli;
pub mod config;
pub mod ecga;
pub mod engine;
pub mod error;
pub mod hboa;
pub mod paramless;
pub mod population;
pub mod portfolio;
pub mod problems;
pub mod report;
pub mod rng;
pub mod umda;

pub use config::{Overrides, PortfolioConfig, ValidatedConfig};
pub use engine::{AlgorithmParams, Engine, EngineKind, GenCost};
pub use error::{Error, Result};
pub use population::{Individual, Population};
pub use portfolio::{run_portfolio, Portfolio, PortfolioSettings, StopCondition, TimeMode};
pub use problems::{lookup_problem, Problem, ProblemInstance, ProblemRegistry, ProblemSpec};
pub use report::{RunResult, StopReason, SweepReport};
pub use rng::RngStream;
