//! Closest-point queries for analytic curves/surfaces and triangle meshes.
//!
//! Every query returns the Euclidean argmin on the surface together with the
//! outward unit normal there. For analytic kinds the normal is the exact
//! normal at the closest point; for meshes it is the angle-weighted
//! pseudo-normal of the closest feature.

mod obj;
mod point;
mod trimesh;

use std::f64::consts::{PI, TAU};

pub use obj::load_obj;
pub use point::Point;
pub use trimesh::{Feature, TriMesh};

use crate::error::{Error, Result};

/// Result of a closest-point query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpResult {
    pub cp: Point,
    pub normal: Point,
    pub dist: f64,
}

impl CpResult {
    fn new(x: &Point, cp: Point, normal: Point) -> Self {
        CpResult {
            cp,
            normal,
            dist: x.dist(&cp),
        }
    }
}

/// Surfaces (or curves, when embedded in the plane) supported by the solver.
#[derive(Clone, Debug)]
pub enum Surface {
    /// Circle of the given radius centred at the origin of the plane.
    Circle { radius: f64 },
    /// Counter-clockwise arc of a circle centred at the origin, from
    /// `angle_min` to `angle_max` (radians).
    Arc {
        radius: f64,
        angle_min: f64,
        angle_max: f64,
    },
    /// Sphere centred at the origin.
    Sphere { radius: f64 },
    /// Torus around the z axis.
    Torus { major: f64, minor: f64 },
    Mesh(Box<TriMesh>),
}

impl Surface {
    pub fn circle(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Surface::Circle { radius })
    }

    pub fn arc(radius: f64, angle_min: f64, angle_max: f64) -> Result<Self> {
        check_radius(radius)?;
        let span = angle_max - angle_min;
        if !(span > 0.0 && span < TAU) {
            return Err(Error::InvalidSurface(format!(
                "arc span {span} must lie in (0, 2π)"
            )));
        }
        Ok(Surface::Arc {
            radius,
            angle_min,
            angle_max,
        })
    }

    pub fn sphere(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Surface::Sphere { radius })
    }

    pub fn torus(major: f64, minor: f64) -> Result<Self> {
        if !(minor > 0.0 && minor < major && major.is_finite()) {
            return Err(Error::InvalidSurface(format!(
                "torus requires 0 < minor < major, got major={major}, minor={minor}"
            )));
        }
        Ok(Surface::Torus { major, minor })
    }

    pub fn mesh(mesh: TriMesh) -> Self {
        Surface::Mesh(Box::new(mesh))
    }

    /// Embedding dimension.
    pub fn dim(&self) -> usize {
        match self {
            Surface::Circle { .. } | Surface::Arc { .. } => 2,
            _ => 3,
        }
    }

    pub fn closest_point(&self, x: &Point) -> CpResult {
        match *self {
            Surface::Circle { radius } | Surface::Sphere { radius } => {
                let dir = radial_dir(x, self.dim());
                CpResult::new(x, dir * radius, dir)
            }
            Surface::Arc {
                radius,
                angle_min,
                angle_max,
            } => {
                let rho = x.0[0].hypot(x.0[1]);
                let theta = if rho > 0.0 {
                    x.0[1].atan2(x.0[0])
                } else {
                    angle_min
                };
                let rel = (theta - angle_min).rem_euclid(TAU);
                let angle = if rel <= angle_max - angle_min {
                    angle_min + rel
                } else {
                    let lo = Point::xy(angle_min.cos(), angle_min.sin()) * radius;
                    let hi = Point::xy(angle_max.cos(), angle_max.sin()) * radius;
                    if x.dist(&hi) < x.dist(&lo) {
                        angle_max
                    } else {
                        angle_min
                    }
                };
                let dir = Point::xy(angle.cos(), angle.sin());
                CpResult::new(x, dir * radius, dir)
            }
            Surface::Torus { major, minor } => {
                let rho = x.0[0].hypot(x.0[1]);
                // on the axis the ring projection is not unique: azimuth 0
                let (c, s) = if rho > 0.0 {
                    (x.0[0] / rho, x.0[1] / rho)
                } else {
                    (1.0, 0.0)
                };
                let ring = Point::new(major * c, major * s, 0.0);
                let n = (*x - ring)
                    .normalized()
                    .unwrap_or(Point::new(c, s, 0.0));
                CpResult::new(x, ring + n * minor, n)
            }
            Surface::Mesh(ref m) => m.closest_point(x),
        }
    }

    /// Upper bound on the principal curvatures, when known.
    pub fn curvature_bound(&self) -> Option<f64> {
        match *self {
            Surface::Circle { radius } | Surface::Arc { radius, .. } | Surface::Sphere { radius } => {
                Some(1.0 / radius)
            }
            Surface::Torus { major, minor } => Some((1.0 / minor).max(1.0 / (major - minor))),
            Surface::Mesh(ref m) => m.curvature_bound,
        }
    }

    /// Axis-aligned bounding box of the surface.
    pub fn bounding_box(&self) -> (Point, Point) {
        match *self {
            Surface::Circle { radius } | Surface::Arc { radius, .. } => {
                (Point::xy(-radius, -radius), Point::xy(radius, radius))
            }
            Surface::Sphere { radius } => (
                Point::new(-radius, -radius, -radius),
                Point::new(radius, radius, radius),
            ),
            Surface::Torus { major, minor } => {
                let r = major + minor;
                (Point::new(-r, -r, -minor), Point::new(r, r, minor))
            }
            Surface::Mesh(ref m) => m.bounding_box(),
        }
    }

    /// Points on the surface with spacing at most `spacing`, used to seed band
    /// construction.
    pub fn sample_points(&self, spacing: f64) -> Vec<Point> {
        let count = |len: f64| ((len / spacing).ceil() as usize).max(4);
        match *self {
            Surface::Circle { radius } => {
                let n = count(TAU * radius);
                (0..n)
                    .map(|k| {
                        let t = TAU * k as f64 / n as f64;
                        Point::xy(t.cos(), t.sin()) * radius
                    })
                    .collect()
            }
            Surface::Arc {
                radius,
                angle_min,
                angle_max,
            } => {
                let n = count((angle_max - angle_min) * radius);
                (0..=n)
                    .map(|k| {
                        let t = angle_min + (angle_max - angle_min) * k as f64 / n as f64;
                        Point::xy(t.cos(), t.sin()) * radius
                    })
                    .collect()
            }
            Surface::Sphere { radius } => {
                let nphi = count(PI * radius);
                let mut out = Vec::new();
                for i in 0..=nphi {
                    let phi = PI * i as f64 / nphi as f64;
                    let ring = radius * phi.sin();
                    let nt = count(TAU * ring).max(1);
                    for k in 0..nt {
                        let t = TAU * k as f64 / nt as f64;
                        out.push(Point::new(
                            ring * t.cos(),
                            ring * t.sin(),
                            radius * phi.cos(),
                        ));
                    }
                }
                out
            }
            Surface::Torus { major, minor } => {
                let nt = count(TAU * (major + minor));
                let np = count(TAU * minor);
                let mut out = Vec::with_capacity(nt * np);
                for i in 0..nt {
                    let t = TAU * i as f64 / nt as f64;
                    for k in 0..np {
                        let p = TAU * k as f64 / np as f64;
                        let rr = major + minor * p.cos();
                        out.push(Point::new(rr * t.cos(), rr * t.sin(), minor * p.sin()));
                    }
                }
                out
            }
            Surface::Mesh(ref m) => m.sample_points(spacing),
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidSurface(format!("radius must be positive, got {radius}")))
    }
}

/// Unit radial direction of `x`; the origin maps to the first axis.
fn radial_dir(x: &Point, dim: usize) -> Point {
    let mut v = *x;
    if dim == 2 {
        v.0[2] = 0.0;
    }
    v.normalized().unwrap_or(Point::new(1.0, 0.0, 0.0))
}
