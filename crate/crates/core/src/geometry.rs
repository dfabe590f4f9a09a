//! Spatial deployments on a square region, optionally wrapped into a torus.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    /// Side length in meters.
    pub side_m: f64,
    /// Torus metric: distances and directions use the nearest periodic image.
    #[serde(default = "default_wraparound")]
    pub wraparound: bool,
}

fn default_wraparound() -> bool {
    true
}

impl Region {
    pub fn new(side_m: f64, wraparound: bool) -> Result<Self> {
        if !(side_m > 0.0 && side_m.is_finite()) {
            return Err(Error::param("side_m", format!("must be positive, got {side_m}")));
        }
        Ok(Self { side_m, wraparound })
    }

    /// One square kilometer torus.
    pub fn unit_km_torus() -> Self {
        Self {
            side_m: 1000.0,
            wraparound: true,
        }
    }

    pub fn area_km2(&self) -> f64 {
        (self.side_m / 1000.0).powi(2)
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..self.side_m).contains(&p.x) && (0.0..self.side_m).contains(&p.y)
    }

    /// Displacement vector from `a` to `b`; under wraparound each axis is
    /// reduced to the nearest image, so components lie in `[-side/2, side/2]`.
    pub fn displacement(&self, a: Point, b: Point) -> (f64, f64) {
        let mut dx = b.x - a.x;
        let mut dy = b.y - a.y;
        if self.wraparound {
            let s = self.side_m;
            dx -= s * (dx / s).round();
            dy -= s * (dy / s).round();
        }
        (dx, dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// A node with its operator index (0-based internally, reported 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Site {
    pub pos: Point,
    pub operator: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub region: Region,
    pub bs: Vec<Site>,
    pub ue: Vec<Site>,
}

impl Deployment {
    /// Samples every operator's BS process, then every operator's UE process,
    /// in operator order. BS indices are therefore grouped by operator.
    pub fn sample<R: Rng + ?Sized>(
        region: Region,
        intensities: &[(f64, f64)],
        rng: &mut R,
    ) -> Result<Self> {
        let mut bs = Vec::new();
        for (op, &(bs_density, _)) in intensities.iter().enumerate() {
            bs.extend(
                sample_hppp(bs_density, region, rng)?
                    .into_iter()
                    .map(|pos| Site { pos, operator: op }),
            );
        }
        let mut ue = Vec::new();
        for (op, &(_, ue_density)) in intensities.iter().enumerate() {
            ue.extend(
                sample_hppp(ue_density, region, rng)?
                    .into_iter()
                    .map(|pos| Site { pos, operator: op }),
            );
        }
        Ok(Self { region, bs, ue })
    }
}

/// Homogeneous Poisson point process with `intensity` points per km².
pub fn sample_hppp<R: Rng + ?Sized>(intensity: f64, region: Region, rng: &mut R) -> Result<Vec<Point>> {
    if !(intensity >= 0.0 && intensity.is_finite()) {
        return Err(Error::param(
            "intensity",
            format!("must be finite and nonnegative, got {intensity}"),
        ));
    }
    let mean = intensity * region.area_km2();
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::param("intensity", e.to_string()))?
        .sample(rng) as usize;
    let s = region.side_m;
    Ok((0..count)
        .map(|_| Point::new(rng.random::<f64>() * s, rng.random::<f64>() * s))
        .collect())
}

pub fn distance(a: Point, b: Point, region: Region) -> f64 {
    let (dx, dy) = region.displacement(a, b);
    dx.hypot(dy)
}

/// Angle in degrees, in `[0, 180]`, between the rays `source → boresight_target`
/// and `source → other`. A point coinciding with `source` counts as on-boresight.
pub fn angle_from_boresight(source: Point, boresight_target: Point, other: Point, region: Region) -> Result<f64> {
    let (bx, by) = region.displacement(source, boresight_target);
    if bx == 0.0 && by == 0.0 {
        return Err(Error::Geometry(
            "boresight target coincides with source".into(),
        ));
    }
    let (ox, oy) = region.displacement(source, other);
    if ox == 0.0 && oy == 0.0 {
        return Ok(0.0);
    }
    let cross = bx * oy - by * ox;
    let dot = bx * ox + by * oy;
    Ok(cross.abs().atan2(dot).to_degrees())
}

/// Unit vector from `a` toward `b`, or zero when they coincide.
pub(crate) fn unit_vector(a: Point, b: Point, region: Region) -> (f64, f64) {
    let (dx, dy) = region.displacement(a, b);
    let d = dx.hypot(dy);
    if d == 0.0 {
        (0.0, 0.0)
    } else {
        (dx / d, dy / d)
    }
}
