//! Scholarly profile engine over a Wikibase SPARQL endpoint.

pub mod entity_api;
pub mod model;
pub mod query;
pub mod sparql;
pub mod bibgen;
pub mod cli;
pub mod resolver;
pub mod service;
pub mod stats;
pub mod fixture;
