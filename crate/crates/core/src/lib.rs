//! Pair discovery over many concurrent time-series.
//!
//! The stages are independent modules: [`feedgen`] produces tick streams,
//! [`sampler`] snapshots them into a [`sampler::SampleMatrix`],
//! [`labeling`] turns rows into change vectors with a self-label,
//! [`dtree`] grows a regression tree on them, [`ranking`] counts node
//! co-occurrence to pick partners, and [`validation`] scores the resulting
//! pairs with Pearson's r. [`pipeline::classify`] chains the middle stages.

pub mod dtree;
pub mod feedgen;
pub mod labeling;
pub mod pipeline;
pub mod ranking;
pub mod sampler;
pub mod sector;
pub mod validation;

pub use sector::Sector;
