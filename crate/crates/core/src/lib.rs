pub mod algebra;
pub mod error;
pub mod io;
pub mod kdvlimit;
pub mod lax;
pub mod pentagram;
pub mod polygon;
pub mod scaling;
pub mod suite;

pub use error::{Error, ErrorKind, Result};
pub use polygon::{ProjectivePolygon, TwistedCoords, VertexChain};
