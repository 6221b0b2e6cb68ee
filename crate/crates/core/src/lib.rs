pub mod bench;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod localizer;
pub mod scene;
pub mod selection;
pub mod stationarity;

pub use error::{Error, Result};
pub use geometry::{Point, Rect, D_MIN};
