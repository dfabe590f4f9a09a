//! Multi-operator millimeter-wave sharing simulator and network-goods economics.
//!
//! The crate has two halves. The radio half ([`geometry`], [`radio`], [`sim`])
//! drops Poisson deployments of base stations and users on a torus, runs a
//! time-slotted downlink under one of four sharing regimes and reports per-user
//! long-run rates. The economics half ([`externality`], [`demand`],
//! [`duopoly`]) turns fifth-percentile rate curves into fulfilled-expectations
//! demand, critical mass and a vertically differentiated duopoly with and
//! without resource sharing.
//!
//! Everything random flows from one master seed through [`rng::Streams`], so
//! every drop is reproducible in isolation and results do not depend on
//! whether [`exec::Execution`] is parallel or sequential.

pub mod config;
pub mod demand;
pub mod duopoly;
pub mod error;
pub mod exec;
pub mod externality;
pub mod geometry;
pub mod radio;
pub mod report;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod units;

pub use error::{Error, Result};
