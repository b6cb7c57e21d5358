//! Fuzzy inference and PSO learning for per-move Go win-rate prediction from
//! BCI indicators.
//!
//! The pipeline: load a session bundle ([`dataio`]), turn indicator streams and
//! engine predictions into per-move features ([`preprocess`]), run Mamdani
//! inference over an FML controller ([`fml`], [`inference`]) and tune its
//! trapezoids with particle swarm optimization ([`pso`]).

pub mod cli;
pub mod dataio;
pub mod fixtures;
pub mod fml;
pub mod inference;
pub mod preprocess;
pub mod pso;
