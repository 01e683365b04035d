//! Evacuation resource allocation: a typed knowledge base of crisis
//! entities, a road network with precomputed travel times, and an exact
//! lexicographic recommender assigning driver/vehicle pairs to rescue points
//! and shelters.

pub mod generator;
pub mod knowledge;
pub mod recommender;
pub mod roads;
pub mod scenario;
