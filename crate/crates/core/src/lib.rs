pub mod array;
pub mod config;
pub mod error;
pub mod scenario;
pub mod sensing;
pub mod uncertainty;
pub mod metrics;
pub mod tracking;
pub mod allocation;
pub mod baselines;
pub mod experiment;
pub mod plots;
