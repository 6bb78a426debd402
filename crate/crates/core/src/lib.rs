//! Grid-world path planning with tabular Q-learning, ant-colony Q-table
//! seeding and time-scaled step penalties, plus a seeded experiment harness.

pub mod geometry;
pub mod grid;
pub mod harness;
pub mod metrics;
pub mod paco;
pub mod qlearn;
pub mod reward;
