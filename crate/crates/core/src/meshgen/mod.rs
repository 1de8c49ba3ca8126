//! Mesh sources: structured bricks, clipped Voronoi cells, Lloyd-relaxed
//! (centroidal) Voronoi cells, and the JSON mesh file format.

mod hex;
mod io;
mod voronoi;

use crate::{Error, Point3, Result};

pub use hex::{distorted_hex_mesh, hex_mesh, HEX_SIDE_TAGS};
pub use io::{mesh_from_json, mesh_to_json, read_mesh, write_mesh, MESH_FORMAT_VERSION};
pub use voronoi::{cvt, cvt_mesh, random_seeds, voronoi_mesh, CvtResult, SeedSet, CVT_TOLERANCE};

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDomain {
    pub min: Point3,
    pub max: Point3,
}

impl BoxDomain {
    pub fn new(min: Point3, max: Point3) -> Result<Self> {
        if !(0..3).all(|c| min[c].is_finite() && max[c].is_finite() && min[c] < max[c]) {
            return Err(Error::InvalidParameter(format!(
                "box must satisfy min < max componentwise, got min {:?} max {:?}",
                min.as_slice(),
                max.as_slice()
            )));
        }
        Ok(Self { min, max })
    }

    /// `[0, 1]^3`.
    pub fn unit() -> Self {
        Self {
            min: Point3::zeros(),
            max: Point3::new(1.0, 1.0, 1.0),
        }
    }

    /// `[x0, x1, y0, y1, z0, z1]` ordering.
    pub fn from_bounds(b: [f64; 6]) -> Result<Self> {
        Self::new(Point3::new(b[0], b[2], b[4]), Point3::new(b[1], b[3], b[5]))
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn volume(&self) -> f64 {
        let e = self.extent();
        e.x * e.y * e.z
    }

    pub fn center(&self) -> Point3 {
        0.5 * (self.min + self.max)
    }

    pub fn contains_strictly(&self, p: &Point3) -> bool {
        (0..3).all(|c| p[c] > self.min[c] && p[c] < self.max[c])
    }
}
