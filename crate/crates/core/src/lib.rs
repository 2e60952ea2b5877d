//! Diffusion curvature of point clouds and diffusion-map based Hessian
//! estimation near critical points.

pub mod cloud;
pub mod curvature;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod io;
mod linalg;
pub mod manifest;
pub mod manifold;
pub mod net;
pub mod probe;
pub mod stats;

pub use cloud::PointCloud;
pub use error::{Error, Result};
