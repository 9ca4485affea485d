//! Rediscovery alarm for natural-product antibiotic discovery.

pub mod api;
pub mod digest;
pub mod extraction;
pub mod filtering;
pub mod fixtures;
pub mod kg;
pub mod literature;
pub mod lock;
pub mod lotus;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod taxonomy;
