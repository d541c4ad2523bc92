//! Closed-form right-hand sides and exact solutions for `(c − Δ_S) u = f`.

use std::str::FromStr;

use crate::band::BandGrid;
use crate::error::{Error, Result};
use crate::geometry::{Point, Surface};

/// θ = azimuth in the xy-plane, φ = polar angle from +z.
pub fn spherical_angles(x: &Point) -> (f64, f64) {
    let theta = x.0[1].atan2(x.0[0]);
    let r = x.norm();
    let phi = if r > 0.0 { (x.0[2] / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
    (theta, phi)
}

/// `u = sin²φ · e^{cos θ}` on the unit sphere.
pub fn sphere_exact(x: &Point) -> f64 {
    let (theta, phi) = spherical_angles(x);
    phi.sin().powi(2) * theta.cos().exp()
}

/// `Δ_S` of [`sphere_exact`] on the unit sphere.
pub fn sphere_laplacian(x: &Point) -> f64 {
    let (theta, phi) = spherical_angles(x);
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    ct.exp() * (4.0 * cp * cp - 2.0 * sp * sp + st * st - ct)
}

pub fn sphere_rhs(x: &Point, c: f64) -> f64 {
    c * sphere_exact(x) - sphere_laplacian(x)
}

pub fn circle_exact(x: &Point, k: f64) -> f64 {
    (k * x.0[1].atan2(x.0[0])).sin()
}

pub fn circle_rhs(x: &Point, k: f64, c: f64) -> f64 {
    (c + k * k) * circle_exact(x, k)
}

/// Exact solution of `(1 − Δ_S) u = 1 − θ²` on the arc θ ∈ [0, 2] with
/// `u(0) = 0` and `u_θ(2) + u(2) = 0`.
pub fn arc_exact(theta: f64) -> f64 {
    let b = 9.0 * (-2.0f64).exp() - 1.0;
    theta.cosh() + b * theta.sinh() - theta * theta - 1.0
}

pub fn arc_rhs(theta: f64) -> f64 {
    1.0 - theta * theta
}

/// Choice of right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    /// The surface's own manufactured solution (circle: `sin(kθ)`, sphere:
    /// `sin²φ e^{cosθ}`, arc: the mixed Dirichlet/Robin problem).
    Manufactured { k: f64 },
    /// `f(x) = x₁ + 1` evaluated at closest points: a smooth default for
    /// surfaces without a closed-form solution.
    Linear,
    Constant(f64),
    /// One value per active node, one per line.
    File(std::path::PathBuf),
}

impl FromStr for Rhs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(path) = s.strip_prefix("file:") {
            return Ok(Rhs::File(path.into()));
        }
        if let Some(v) = s.strip_prefix("constant:") {
            let v = v
                .parse()
                .map_err(|_| Error::Config(format!("bad constant right-hand side '{v}'")))?;
            return Ok(Rhs::Constant(v));
        }
        match s {
            "manufactured" => Ok(Rhs::Manufactured { k: 2.0 }),
            "linear" => Ok(Rhs::Linear),
            _ => {
                if let Some(k) = s.strip_prefix("manufactured:") {
                    let k = k
                        .parse()
                        .map_err(|_| Error::Config(format!("bad wavenumber '{k}'")))?;
                    return Ok(Rhs::Manufactured { k });
                }
                Err(Error::Config(format!(
                    "unknown right-hand side '{s}' (manufactured[:k], linear, constant:<v>, file:<path>)"
                )))
            }
        }
    }
}

/// Right-hand side on the active nodes and, when known, the exact solution
/// at their closest points.
pub fn evaluate(rhs: &Rhs, surface: &Surface, grid: &BandGrid, c: f64) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let cps: Vec<Point> = grid.active().iter().map(|n| n.cp.cp).collect();
    match rhs {
        Rhs::Manufactured { k } => match *surface {
            Surface::Circle { radius } if (radius - 1.0).abs() < 1e-14 => Ok((
                cps.iter().map(|x| circle_rhs(x, *k, c)).collect(),
                Some(cps.iter().map(|x| circle_exact(x, *k)).collect()),
            )),
            Surface::Sphere { radius } if (radius - 1.0).abs() < 1e-14 => Ok((
                cps.iter().map(|x| sphere_rhs(x, c)).collect(),
                Some(cps.iter().map(sphere_exact).collect()),
            )),
            _ => Err(Error::Config(
                "manufactured right-hand sides exist for the unit circle and unit sphere only".into(),
            )),
        },
        Rhs::Linear => Ok((cps.iter().map(|x| x.0[0] + 1.0).collect(), None)),
        Rhs::Constant(v) => Ok((vec![*v; cps.len()], None)),
        Rhs::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let mut f = Vec::with_capacity(cps.len());
            for (line, s) in text.lines().enumerate() {
                let s = s.trim();
                if s.is_empty() || s.starts_with('#') {
                    continue;
                }
                f.push(s.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: line + 1,
                    message: format!("expected a number, got '{s}'"),
                })?);
            }
            if f.len() != cps.len() {
                return Err(Error::Config(format!(
                    "right-hand side file has {} values but the band has {} active nodes",
                    f.len(),
                    cps.len()
                )));
            }
            Ok((f, None))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn from_angles(theta: f64, phi: f64) -> Point {
        Point::new(phi.sin() * theta.cos(), phi.sin() * theta.sin(), phi.cos())
    }

    #[test]
    fn sphere_laplacian_matches_finite_differences() {
        // Δ_S u = (1/sinφ)∂_φ(sinφ ∂_φ u) + (1/sin²φ)∂_θθ u, by central differences
        let u = |t: f64, p: f64| sphere_exact(&from_angles(t, p));
        let e = 1e-4;
        for &(t, p) in &[(0.3, 0.7), (2.0, 1.2), (-1.1, 2.5), (3.0, 0.4)] {
            let sp = |p: f64| p.sin();
            let dphi = (sp(p + e / 2.0) * (u(t, p + e) - u(t, p))
                - sp(p - e / 2.0) * (u(t, p) - u(t, p - e)))
                / (e * e * sp(p));
            let dtt = (u(t + e, p) - 2.0 * u(t, p) + u(t - e, p)) / (e * e * sp(p).powi(2));
            let fd = dphi + dtt;
            let exact = sphere_laplacian(&from_angles(t, p));
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "{fd} vs {exact}");
        }
    }

    #[test]
    fn arc_solution_satisfies_problem() {
        let u = arc_exact;
        assert!(u(0.0).abs() < 1e-14);
        let e = 1e-5;
        let du2 = (u(2.0) - u(2.0 - e)) / e;
        assert!((du2 + u(2.0)).abs() < 1e-4);
        for &t in &[0.3, 1.0, 1.7] {
            let d2 = (u(t + e) - 2.0 * u(t) + u(t - e)) / (e * e);
            assert!((u(t) - d2 - arc_rhs(t)).abs() < 1e-4);
        }
    }

    #[test]
    fn rhs_parsing() {
        assert_eq!("manufactured".parse::<Rhs>().unwrap(), Rhs::Manufactured { k: 2.0 });
        assert_eq!("manufactured:3".parse::<Rhs>().unwrap(), Rhs::Manufactured { k: 3.0 });
        assert_eq!("constant:1.5".parse::<Rhs>().unwrap(), Rhs::Constant(1.5));
        assert!("bogus".parse::<Rhs>().is_err());
    }
}
