//! Stable text formats: JSON documents for networks, partitions, boxes, and
//! results, plus the NNet network dialect.

pub mod json;
pub mod nnet;
pub mod results;
