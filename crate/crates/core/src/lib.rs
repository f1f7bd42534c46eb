pub mod bo;
pub mod config;
pub mod flow;
pub mod geometry;
pub mod mesh;
pub mod sampling;
pub mod stl;
