//! Arc-represented saturated yield shape and the distance construction built on it.
//!
//! The saturated elastic domain is a convex set in the plane, symmetric about the
//! x-axis, normalized so that its boundary passes through `(1, 0)`. Only the upper
//! half of the boundary is stored: a chain of circular arcs running
//! counter-clockwise from `(1, 0)` to `(-k_sat_pi, 0)` with matching normals at
//! every junction.
//!
//! For a distortion level `alpha` the interpolated elastic domain is the set of
//! points whose distance from `alpha * El_sat` does not exceed `1 - alpha`. That
//! set is convex for every `alpha` because it is the Minkowski sum of a scaled
//! convex set and a disc.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Tolerance for the C¹ and endpoint checks of a shape.
pub const TOL_GEOM: f64 = 1e-9;

/// Bisection tolerance for the interpolated yield radius.
pub const TOL_ROOT: f64 = 1e-10;

/// Boundary samples used by the convexity sampler.
pub const CONVEXITY_SAMPLES: usize = 720;

const MAX_BISECTION_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("smoothness violation: {0}")]
    SmoothnessViolation(String),
    #[error("convexity violation: {0}")]
    ConvexityViolation(String),
    #[error("normalization violation: {0}")]
    NormalizationViolation(String),
    #[error("no arc satisfies the selection inequalities for y = ({x}, {y}), alpha = {alpha}")]
    NoArcFound { x: f64, y: f64, alpha: f64 },
    #[error("point lies inside the scaled set; the outward normal is undefined")]
    InsideSet,
    #[error("bisection did not converge after {0} iterations")]
    ConvergenceFailure(usize),
    #[error("angle {0} is outside [0, pi]")]
    AngleOutOfRange(f64),
    #[error("distortion level {0} is outside [0, 1]")]
    AlphaOutOfRange(f64),
    #[error("invalid shape data: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, GeometryError>;

/// One circular arc of the upper half-boundary, traversed counter-clockwise
/// around its center from `start` to `end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Arc {
    pub start: Vec2,
    pub end: Vec2,
    pub center: Vec2,
    pub radius: f64,
}

impl Arc {
    pub fn start_normal(&self) -> Vec2 {
        (self.start - self.center) / self.radius
    }

    pub fn end_normal(&self) -> Vec2 {
        (self.end - self.center) / self.radius
    }

    fn point_at(&self, normal_angle: f64) -> Vec2 {
        self.center + self.radius * Vec2::new(normal_angle.cos(), normal_angle.sin())
    }
}

/// Raw arc record of the shape file: `{"center": [x, y], "radius": r, "end": [x, y]}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcSpec {
    pub center: [f64; 2],
    pub radius: f64,
    pub end: [f64; 2],
}

/// Shape file contents. Unknown keys such as `name` or `version` are kept for
/// round-tripping but do not affect the shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub arcs: Vec<ArcSpec>,
}

/// Saturated yield shape: the validated upper half-boundary as a chain of arcs.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcBoundary {
    arcs: Vec<Arc>,
    k_sat_pi: f64,
    /// Junction points y^0..y^N.
    junctions: Vec<Vec2>,
    /// Tangents t^0..t^N, rotated +90° from the outward normals.
    tangents: Vec<Vec2>,
    /// Polar angles of the junction points, 0 = first and pi = last.
    junction_polar: Vec<f64>,
    /// Upper bound on the distance of any boundary point from the origin.
    max_radius: f64,
}

fn rot_ccw(v: Vec2) -> Vec2 {
    Vec2::new(-v.y, v.x)
}

/// `Q · v` with `Q = e1⊗e2 − e2⊗e1`.
fn q_times(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn check_theta(theta: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if !(-SLACK..=PI + SLACK).contains(&theta) {
        return Err(GeometryError::AngleOutOfRange(theta));
    }
    Ok(theta.clamp(0.0, PI))
}

fn check_alpha(alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(GeometryError::AlphaOutOfRange(alpha));
    }
    Ok(alpha)
}

impl ArcBoundary {
    /// Builds and validates a shape from `(center, radius, end)` records. The
    /// first arc starts at `(1, 0)`; every following arc starts where the
    /// previous one ends.
    pub fn build(arc_data: &[ArcSpec]) -> Result<Self> {
        if arc_data.is_empty() {
            return Err(GeometryError::InvalidInput("at least one arc is required".into()));
        }
        let mut arcs = Vec::with_capacity(arc_data.len());
        let mut start = Vec2::new(1.0, 0.0);
        for (i, spec) in arc_data.iter().enumerate() {
            let finite = spec.center.iter().chain(spec.end.iter()).all(|v| v.is_finite())
                && spec.radius.is_finite();
            if !finite {
                return Err(GeometryError::InvalidInput(format!("arc {} has non-finite data", i + 1)));
            }
            if spec.radius <= 0.0 {
                return Err(GeometryError::InvalidInput(format!(
                    "arc {} has non-positive radius {}",
                    i + 1,
                    spec.radius
                )));
            }
            let arc = Arc {
                start,
                end: Vec2::new(spec.end[0], spec.end[1]),
                center: Vec2::new(spec.center[0], spec.center[1]),
                radius: spec.radius,
            };
            for (label, p) in [("start", arc.start), ("end", arc.end)] {
                let gap = (p - arc.center).norm() - arc.radius;
                if gap.abs() > TOL_GEOM {
                    return Err(GeometryError::SmoothnessViolation(format!(
                        "{label} point of arc {} is off its circle by {gap:e}",
                        i + 1
                    )));
                }
            }
            start = arc.end;
            arcs.push(arc);
        }

        let n = arcs.len();
        let mut normals = Vec::with_capacity(n + 1);
        normals.push(arcs[0].start_normal());
        for i in 0..n - 1 {
            let a = arcs[i].end_normal();
            let b = arcs[i + 1].start_normal();
            if (a - b).norm() > TOL_GEOM {
                return Err(GeometryError::SmoothnessViolation(format!(
                    "normals of arcs {} and {} differ by {:e} at their junction",
                    i + 1,
                    i + 2,
                    (a - b).norm()
                )));
            }
            normals.push(a);
        }
        normals.push(arcs[n - 1].end_normal());

        if (normals[0] - Vec2::new(1.0, 0.0)).norm() > TOL_GEOM {
            return Err(GeometryError::SmoothnessViolation(format!(
                "normal at (1, 0) is ({}, {}), expected (1, 0)",
                normals[0].x, normals[0].y
            )));
        }
        let last = arcs[n - 1].end;
        if last.y.abs() > TOL_GEOM || last.x >= 0.0 {
            return Err(GeometryError::NormalizationViolation(format!(
                "last junction ({}, {}) is not on the negative x-axis",
                last.x, last.y
            )));
        }
        if (normals[n] - Vec2::new(-1.0, 0.0)).norm() > TOL_GEOM {
            return Err(GeometryError::SmoothnessViolation(format!(
                "normal at the last junction is ({}, {}), expected (-1, 0)",
                normals[n].x, normals[n].y
            )));
        }

        // Outward normals must turn monotonically from 0 to pi along the upper half.
        let mut normal_angles = Vec::with_capacity(n + 1);
        normal_angles.push(0.0);
        for (i, nv) in normals.iter().enumerate().take(n).skip(1) {
            if nv.y <= 0.0 {
                return Err(GeometryError::ConvexityViolation(format!(
                    "normal at junction {i} points into the lower half-plane"
                )));
            }
            normal_angles.push(nv.y.atan2(nv.x));
        }
        normal_angles.push(PI);
        if normal_angles.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::ConvexityViolation(
                "outward normal does not turn counter-clockwise along every arc".into(),
            ));
        }

        let mut junctions: Vec<Vec2> = std::iter::once(Vec2::new(1.0, 0.0))
            .chain(arcs.iter().map(|a| a.end))
            .collect();
        junctions[n].y = 0.0;
        arcs[n - 1].end.y = 0.0;
        let k_sat_pi = -junctions[n].x;

        let mut junction_polar = Vec::with_capacity(n + 1);
        junction_polar.push(0.0);
        for p in junctions.iter().take(n).skip(1) {
            junction_polar.push(p.y.atan2(p.x));
        }
        junction_polar.push(PI);
        if junction_polar.windows(2).any(|w| w[1] <= w[0]) {
            return Err(GeometryError::ConvexityViolation(
                "junction points are not ordered counter-clockwise around the origin".into(),
            ));
        }

        let tangents = normals.iter().map(|&nv| rot_ccw(nv)).collect();
        let max_radius = arcs
            .iter()
            .map(|a| a.center.norm() + a.radius)
            .fold(1.0_f64, f64::max);

        let shape = Self {
            arcs,
            k_sat_pi,
            junctions,
            tangents,
            junction_polar,
            max_radius,
        };

        let outline = shape.boundary_points(CONVEXITY_SAMPLES);
        if !is_convex_polygon(&outline, 0.0) {
            return Err(GeometryError::ConvexityViolation(
                "sampled boundary polygon is not convex".into(),
            ));
        }
        Ok(shape)
    }

    pub fn from_shape_file(file: &ShapeFile) -> Result<Self> {
        Self::build(&file.arcs)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ShapeFile =
            serde_json::from_str(text).map_err(|e| GeometryError::InvalidInput(e.to_string()))?;
        Self::from_shape_file(&file)
    }

    /// Builds a C¹ shape from the normal angles at the junctions and the arc
    /// radii. `normal_angles` runs from 0 to pi and has one more entry than
    /// `radii`. The closing point is wherever the chain ends; the validator
    /// decides whether it lands on the negative x-axis.
    pub fn from_normal_turns(normal_angles: &[f64], radii: &[f64]) -> Result<Self> {
        Self::build(&chain_arcs(normal_angles, radii)?)
    }

    /// The unit half-disc: the undistorted Huber-Mises shape.
    pub fn unit_half_disc() -> Self {
        Self::from_json(include_str!("../data/unit_half_disc.json")).expect("bundled shape is valid")
    }

    /// Four-arc shape sharpened toward `theta = 0` and flattened toward `theta = pi`.
    pub fn egg() -> Self {
        Self::from_json(include_str!("../data/egg.json")).expect("bundled shape is valid")
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn k_sat_pi(&self) -> f64 {
        self.k_sat_pi
    }

    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    pub fn to_shape_file(&self) -> ShapeFile {
        ShapeFile {
            name: None,
            version: None,
            arcs: self
                .arcs
                .iter()
                .map(|a| ArcSpec {
                    center: [a.center.x, a.center.y],
                    radius: a.radius,
                    end: [a.end.x, a.end.y],
                })
                .collect(),
        }
    }

    /// True when the shape is a single arc centred at the origin.
    pub fn is_circle(&self) -> bool {
        self.arcs.len() == 1 && self.arcs[0].center.norm() <= TOL_GEOM
    }

    /// K̄_sat(θ): distance from the origin to the boundary along `(cos θ, sin θ)`.
    pub fn radius_at(&self, theta: f64) -> Result<f64> {
        let theta = check_theta(theta)?;
        Ok(self.radius_at_unchecked(theta))
    }

    fn radius_at_unchecked(&self, theta: f64) -> f64 {
        let i = self
            .junction_polar
            .windows(2)
            .position(|w| theta <= w[1])
            .unwrap_or(self.arcs.len() - 1);
        let arc = &self.arcs[i];
        let u = Vec2::new(theta.cos(), theta.sin());
        // Exit point of the ray from the arc's disc.
        let uc = u.dot(&arc.center);
        let disc = uc * uc - arc.center.norm_squared() + arc.radius * arc.radius;
        uc + disc.max(0.0).sqrt()
    }

    /// Selects the arc whose normal wedge contains `y` (upper half-plane), or
    /// `None` when `y` lies inside `alpha * El_sat`.
    fn select_arc(&self, alpha: f64, y: Vec2) -> Result<Option<usize>> {
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(None);
        }
        let theta = y.y.atan2(y.x).clamp(0.0, PI);
        if ny <= alpha * self.radius_at_unchecked(theta) {
            return Ok(None);
        }
        let slack = -1e-12 * (1.0 + ny);
        for i in 1..=self.arcs.len() {
            let prev = alpha * self.junctions[i - 1];
            let next = alpha * self.junctions[i];
            let chord = self.junctions[i] - self.junctions[i - 1];
            let c1 = (y - prev).dot(&self.tangents[i - 1]) >= slack;
            let c2 = (y - next).dot(&(-self.tangents[i])) >= slack;
            let c3 = (y - prev).dot(&q_times(chord)) >= slack;
            if c1 && c2 && c3 {
                return Ok(Some(i - 1));
            }
        }
        Err(GeometryError::NoArcFound {
            x: y.x,
            y: y.y,
            alpha,
        })
    }

    /// 𝒟(y, α El_sat). Points below the x-axis are handled through the mirror
    /// symmetry of the shape.
    pub fn distance_to_scaled(&self, alpha: f64, y: Vec2) -> Result<f64> {
        let alpha = check_alpha(alpha)?;
        let y = Vec2::new(y.x, y.y.abs());
        if alpha == 0.0 {
            return Ok(y.norm());
        }
        Ok(match self.select_arc(alpha, y)? {
            None => 0.0,
            Some(i) => {
                let arc = &self.arcs[i];
                ((y - alpha * arc.center).norm() - alpha * arc.radius).max(0.0)
            }
        })
    }

    /// Unit outward normal of the level set of 𝒟 through `y`, equal to the
    /// gradient of 𝒟 with respect to `y`.
    pub fn outward_normal(&self, alpha: f64, y: Vec2) -> Result<Vec2> {
        let alpha = check_alpha(alpha)?;
        let mirrored = y.y < 0.0;
        let y = Vec2::new(y.x, y.y.abs());
        let v = if alpha == 0.0 {
            if y.norm() == 0.0 {
                return Err(GeometryError::InsideSet);
            }
            y
        } else {
            match self.select_arc(alpha, y)? {
                None => return Err(GeometryError::InsideSet),
                Some(i) => y - alpha * self.arcs[i].center,
            }
        };
        let n = v / v.norm();
        Ok(if mirrored { Vec2::new(n.x, -n.y) } else { n })
    }

    /// Non-dimensional overstress f̄ = ⟨𝒟(y, α El_sat) − (1 − α)⟩.
    pub fn overstress_nd(&self, alpha: f64, y: Vec2) -> Result<f64> {
        let d = self.distance_to_scaled(alpha, y)?;
        Ok((d - (1.0 - alpha)).max(0.0))
    }

    /// Radius along direction θ of the level set `f̄ = fbar` at distortion α.
    /// With `fbar = 0` this is K̄(θ, α).
    pub fn level_radius(&self, theta: f64, alpha: f64, fbar: f64) -> Result<f64> {
        let theta = check_theta(theta)?;
        let alpha = check_alpha(alpha)?;
        if !(fbar.is_finite() && fbar >= 0.0) {
            return Err(GeometryError::InvalidInput(format!("overstress level {fbar} must be >= 0")));
        }
        let target = 1.0 - alpha + fbar;
        if alpha == 0.0 {
            return Ok(target);
        }
        let k_sat = self.radius_at_unchecked(theta);
        if target == 0.0 {
            return Ok(k_sat);
        }
        let u = Vec2::new(theta.cos(), theta.sin());
        let excess = |r: f64| -> Result<f64> { Ok(self.distance_to_scaled(alpha, r * u)? - target) };

        let mut lo = alpha * k_sat;
        let mut hi = alpha * self.max_radius + target;
        let mut iters = 0;
        while hi - lo > TOL_ROOT * hi.max(1.0) {
            if iters == MAX_BISECTION_ITERS {
                return Err(GeometryError::ConvergenceFailure(iters));
            }
            let mid = 0.5 * (lo + hi);
            if excess(mid)? < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            iters += 1;
        }
        let mid = 0.5 * (lo + hi);
        // Polish with the exact circle intersection of the arc selected at the bracket.
        if let Some(i) = self.select_arc(alpha, mid * u)? {
            let arc = &self.arcs[i];
            let c = alpha * arc.center;
            let rho = alpha * arc.radius + target;
            let uc = u.dot(&c);
            let disc = uc * uc - c.norm_squared() + rho * rho;
            if disc >= 0.0 {
                let r = uc + disc.sqrt();
                if r >= lo - TOL_ROOT && r <= hi + TOL_ROOT {
                    return Ok(r);
                }
            }
        }
        Ok(mid)
    }

    /// K̄(θ, α), the interpolated non-dimensional yield stress.
    pub fn k_bar(&self, theta: f64, alpha: f64) -> Result<f64> {
        self.level_radius(theta, alpha, 0.0)
    }

    /// Closed counter-clockwise polygon (first point not repeated) sampling the
    /// full boundary of El_sat, upper half followed by its mirror image.
    pub fn boundary_points(&self, n_samples: usize) -> Vec<Vec2> {
        let half = (n_samples / 2).max(self.arcs.len() + 1);
        let lengths: Vec<f64> = self
            .arcs
            .iter()
            .enumerate()
            .map(|(i, a)| a.radius * self.normal_sweep(i))
            .collect();
        let total: f64 = lengths.iter().sum();
        let mut upper = vec![Vec2::new(1.0, 0.0)];
        for (i, arc) in self.arcs.iter().enumerate() {
            let m = ((half as f64 * lengths[i] / total).round() as usize).max(1);
            let (a0, a1) = self.normal_range(i);
            for j in 1..=m {
                let phi = a0 + (a1 - a0) * j as f64 / m as f64;
                upper.push(arc.point_at(phi));
            }
        }
        let last = upper.len() - 1;
        upper[last] = Vec2::new(-self.k_sat_pi, 0.0);
        let mut pts = upper.clone();
        pts.extend(upper[1..last].iter().rev().map(|p| Vec2::new(p.x, -p.y)));
        pts
    }

    fn normal_range(&self, i: usize) -> (f64, f64) {
        let start = if i == 0 {
            0.0
        } else {
            let n = self.arcs[i].start_normal();
            n.y.atan2(n.x)
        };
        let end = if i + 1 == self.arcs.len() {
            PI
        } else {
            let n = self.arcs[i].end_normal();
            n.y.atan2(n.x)
        };
        (start, end)
    }

    fn normal_sweep(&self, i: usize) -> f64 {
        let (a, b) = self.normal_range(i);
        b - a
    }
}

/// Chains arcs with prescribed junction normal angles and radii, starting at `(1, 0)`.
pub fn chain_arcs(normal_angles: &[f64], radii: &[f64]) -> Result<Vec<ArcSpec>> {
    if radii.is_empty() || normal_angles.len() != radii.len() + 1 {
        return Err(GeometryError::InvalidInput(
            "need one more normal angle than radii".into(),
        ));
    }
    let dir = |a: f64| Vec2::new(a.cos(), a.sin());
    let mut y = Vec2::new(1.0, 0.0);
    let mut out = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let center = y - r * dir(normal_angles[i]);
        let end = center + r * dir(normal_angles[i + 1]);
        out.push(ArcSpec {
            center: [center.x, center.y],
            radius: r,
            end: [end.x, end.y],
        });
        y = end;
    }
    Ok(out)
}

/// Brute-force 𝒟(y, α El_sat): minimum distance to `n_samples` points of the
/// scaled boundary, or 0 when `y` is inside the sampled polygon.
pub fn brute_force_distance(shape: &ArcBoundary, alpha: f64, y: Vec2, n_samples: usize) -> f64 {
    let pts: Vec<Vec2> = shape
        .boundary_points(n_samples.max(1000))
        .into_iter()
        .map(|p| alpha * p)
        .collect();
    if alpha > 0.0 && point_in_convex_polygon(&pts, y) {
        return 0.0;
    }
    pts.iter().map(|p| (y - p).norm()).fold(f64::INFINITY, f64::min)
}

/// Inclusion test for a counter-clockwise convex polygon.
pub fn point_in_convex_polygon(poly: &[Vec2], p: Vec2) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        cross(b - a, p - a) >= 0.0
    })
}

/// Convexity of a closed polygon given in counter-clockwise order (the first
/// point is not repeated). `tol` is the allowed negative turn.
pub fn is_convex_polygon(poly: &[Vec2], tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    (0..n).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let c = poly[(i + 2) % n];
        cross(b - a, c - b) >= -tol
    })
}

/// Samples the level set `f̄ = fbar` of the interpolated domain at `n` equally
/// spaced polar angles over the full circle.
pub fn sample_level_set(shape: &ArcBoundary, alpha: f64, fbar: f64, n: usize) -> Result<Vec<Vec2>> {
    (0..n)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n as f64;
            let theta = if phi <= PI { phi } else { 2.0 * PI - phi };
            let r = shape.level_radius(theta, alpha, fbar)?;
            Ok(r * Vec2::new(phi.cos(), phi.sin()))
        })
        .collect()
}

/// Convexity sampler for El(K̄(·, α)).
pub fn interpolated_set_is_convex(shape: &ArcBoundary, alpha: f64) -> Result<bool> {
    let pts = sample_level_set(shape, alpha, 0.0, CONVEXITY_SAMPLES)?;
    Ok(is_convex_polygon(&pts, 0.0))
}

/// Convexity sampler for the naive linear interpolation `(1 − α) + α K̄_sat(θ)`.
pub fn linear_interpolation_is_convex(shape: &ArcBoundary, alpha: f64) -> Result<bool> {
    let alpha = check_alpha(alpha)?;
    let pts: Vec<Vec2> = (0..CONVEXITY_SAMPLES)
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / CONVEXITY_SAMPLES as f64;
            let theta = if phi <= PI { phi } else { 2.0 * PI - phi };
            let r = (1.0 - alpha) + alpha * shape.radius_at_unchecked(theta);
            r * Vec2::new(phi.cos(), phi.sin())
        })
        .collect();
    Ok(is_convex_polygon(&pts, 0.0))
}
