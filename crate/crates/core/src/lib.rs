pub mod change;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod map;
pub mod merge;
pub mod prior;
pub mod render;
pub mod stats;
