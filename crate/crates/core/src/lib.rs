pub mod cbv;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod matching;
pub mod par;
pub mod routing;
pub mod sim;
pub mod sweep;
pub mod table;
pub mod topology;
pub mod workload;
