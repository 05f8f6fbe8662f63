//! Yield loci and constant-overstress isolines in tension–torsion stress planes.
//!
//! A plane point `(a, b)` stands for the stress `a e_ii + (b / sqrt 3)(e_12 + e_21)`
//! plus a fixed normal stress on the other in-plane axis. The scaling of the
//! shear axis makes the map an isometry up to a constant factor: the deviators
//! of two plane points contract to `2/3` of their plane dot product.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_convex_polygon, Vec2};
use crate::material::{derived_at_stress, hardening, Hardening, MaterialError, MaterialParams, MaterialState};
use crate::tensor::SymTensor2;

/// Relative size of the out-of-plane backstress part tolerated by [`locus`].
pub const SUBSPACE_TOL: f64 = 1e-9;

/// Rays that have not left the level set at this multiple of the yield stress escape.
const RAY_CAP_FACTOR: f64 = 1e6;

const RAY_BISECTIONS: usize = 200;

const ORIGIN_SWEEPS: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProbeError {
    #[error("invalid probe request: {0}")]
    InvalidInput(String),
    #[error("ray escapes: {0}")]
    RayEscapes(String),
    #[error("backstress leaves the probed stress subspace (relative residual {0:e})")]
    SubspaceViolation(f64),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Plane {
    /// `(sigma_11, sqrt3 sigma_12)` with `sigma_22` fixed.
    AxialTorsion,
    /// `(sigma_22, sqrt3 sigma_12)` with `sigma_11` fixed.
    HoopTorsion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub a: f64,
    pub b: f64,
}

impl PlanePoint {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    fn vec(self) -> Vec2 {
        Vec2::new(self.a, self.b)
    }

    fn from_vec(v: Vec2) -> Self {
        Self { a: v.x, b: v.y }
    }
}

impl Plane {
    /// Storage index of the in-plane normal component.
    pub fn normal_index(self) -> usize {
        match self {
            Plane::AxialTorsion => 0,
            Plane::HoopTorsion => 1,
        }
    }

    /// Storage index of the fixed normal component.
    pub fn fixed_index(self) -> usize {
        1 - self.normal_index()
    }

    pub fn stress(self, pt: PlanePoint, fixed_stress: f64) -> SymTensor2 {
        let mut c = [0.0; 6];
        c[self.normal_index()] = pt.a;
        c[self.fixed_index()] = fixed_stress;
        c[3] = pt.b / 3f64.sqrt();
        SymTensor2::new(c)
    }

    /// Least-squares plane image of a deviator.
    pub fn project(self, dev: &SymTensor2) -> PlanePoint {
        let d_a = SymTensor2::unit(self.normal_index(), 1.0).dev();
        let shear = SymTensor2::unit(3, 1.0 / 3f64.sqrt());
        PlanePoint::new(1.5 * dev.dot(&d_a), 1.5 * dev.dot(&shear))
    }

    /// Deviator of a plane point with no fixed stress.
    pub fn deviator(self, pt: PlanePoint) -> SymTensor2 {
        self.stress(pt, 0.0).dev()
    }
}

/// Closed polyline of a level set `f = f_level` in a stress plane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YieldLocus {
    pub plane: Plane,
    pub fixed_stress: f64,
    pub f_level: f64,
    /// Point the rays start from.
    pub origin: PlanePoint,
    /// Polar angle of the plane image of `X_d`.
    pub axis_angle: f64,
    /// Ray angles, one per point, the closing point included.
    pub dir_angles: Vec<f64>,
    /// Points in counter-clockwise order; the last repeats the first.
    pub points: Vec<PlanePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_id: Option<String>,
}

impl YieldLocus {
    /// Points without the closing duplicate.
    pub fn polygon(&self) -> &[PlanePoint] {
        &self.points[..self.points.len() - 1]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,dir_angle_rad,a_MPa,b_MPa\n");
        for (i, (psi, p)) in self.dir_angles.iter().zip(&self.points).enumerate() {
            writeln!(out, "{i},{psi:.16e},{:.16e},{:.16e}", p.a, p.b).expect("writing to a String cannot fail");
        }
        out
    }

    pub fn is_convex(&self) -> bool {
        let pts: Vec<Vec2> = self.polygon().iter().map(|p| p.vec()).collect();
        let scale = pts.iter().map(|p| (p - self.origin.vec()).norm()).fold(0.0, f64::max);
        is_convex_polygon(&pts, 1e-12 * scale * scale)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocusMetrics {
    /// Distance from the origin to the locus along the plane image of `X_d`.
    pub forward_extent: f64,
    /// Same, against the image of `X_d`.
    pub backward_extent: f64,
    pub area: f64,
    /// Distance of the origin from the plane's zero stress.
    pub center_offset: f64,
    /// Radius of curvature at the rear apex over that at the front apex.
    pub distortion_ratio: f64,
}

/// The probe's view of a material state: frozen hardening plus the plane.
struct Probe<'a> {
    params: &'a MaterialParams,
    h: Hardening,
    plane: Plane,
    fixed_stress: f64,
    f_level: f64,
    f_bar_level: f64,
}

impl Probe<'_> {
    fn overstress(&self, pt: Vec2) -> Result<f64, ProbeError> {
        let sigma = self.plane.stress(PlanePoint::from_vec(pt), self.fixed_stress);
        Ok(derived_at_stress(self.params, &self.h, sigma)?.f)
    }

    /// Gauge of the `f_level` set: below 1 strictly inside.
    fn gauge(&self, pt: Vec2) -> Result<f64, ProbeError> {
        let sigma = self.plane.stress(PlanePoint::from_vec(pt), self.fixed_stress);
        let d = derived_at_stress(self.params, &self.h, sigma)?;
        let r = self
            .params
            .shape
            .level_radius(d.theta, self.h.alpha, self.f_bar_level)
            .map_err(MaterialError::from)?;
        Ok(d.y2d.norm() / r)
    }

    fn yield_scale(&self) -> f64 {
        self.params.k0 + self.h.r + self.f_level
    }

    /// Interior point of the level set in the plane.
    fn origin(&self, axis: Vec2) -> Result<Vec2, ProbeError> {
        let target = self.h.x_k + self.h.x_d
            - self.fixed_stress * SymTensor2::unit(self.plane.fixed_index(), 1.0).dev();
        let o = self.plane.project(&target).vec();
        if self.gauge(o)? < 1.0 {
            return Ok(o);
        }
        // The gauge is convex: alternate golden-section searches along the
        // axis and its normal until a point falls inside.
        let span = 2.0 * self.yield_scale() * (self.params.shape.max_radius() + 1.0);
        let normal = Vec2::new(-axis.y, axis.x);
        let (mut o, mut g) = (o, self.gauge(o)?);
        for sweep in 0..ORIGIN_SWEEPS {
            let dir = if sweep % 2 == 0 { axis } else { normal };
            let t = self.line_minimum(o, dir, span)?;
            let next = o + t * dir;
            let g_next = self.gauge(next)?;
            if g_next < g {
                (o, g) = (next, g_next);
            }
            if g < 1.0 {
                return Ok(o);
            }
        }
        Err(ProbeError::RayEscapes(format!(
            "the plane misses the level set f = {} (smallest gauge {g})",
            self.f_level
        )))
    }

    fn line_minimum(&self, o: Vec2, dir: Vec2, span: f64) -> Result<f64, ProbeError> {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut lo, mut hi) = (-span, span);
        let at = |t: f64| self.gauge(o + t * dir);
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let (mut g1, mut g2) = (at(x1)?, at(x2)?);
        while hi - lo > 1e-12 * span {
            if g1 < g2 {
                hi = x2;
                x2 = x1;
                g2 = g1;
                x1 = hi - phi * (hi - lo);
                g1 = at(x1)?;
            } else {
                lo = x1;
                x1 = x2;
                g1 = g2;
                x2 = lo + phi * (hi - lo);
                g2 = at(x2)?;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Distance along `dir` from `o` to the level set.
    fn ray(&self, o: Vec2, dir: Vec2) -> Result<f64, ProbeError> {
        let outside = |r: f64| -> Result<bool, ProbeError> { Ok(self.overstress(o + r * dir)? > self.f_level) };
        let cap = RAY_CAP_FACTOR * self.yield_scale();
        let mut hi = self.yield_scale();
        while !outside(hi)? {
            hi *= 2.0;
            if hi > cap {
                return Err(ProbeError::RayEscapes(format!("no crossing below {cap} MPa")));
            }
        }
        let mut lo = 0.0;
        for _ in 0..RAY_BISECTIONS {
            if hi - lo <= 1e-14 * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if outside(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn check_request(n_points: usize, f_level: f64, fixed_stress: f64) -> Result<(), ProbeError> {
    if n_points < 16 {
        return Err(ProbeError::InvalidInput(format!("need at least 16 points, got {n_points}")));
    }
    if !(f_level.is_finite() && f_level >= 0.0) {
        return Err(ProbeError::InvalidInput(format!("f_level = {f_level} must be >= 0")));
    }
    if !fixed_stress.is_finite() {
        return Err(ProbeError::InvalidInput("fixed stress must be finite".into()));
    }
    Ok(())
}

/// With `in_plane` the backstresses must lie in the span of the plane
/// deviators; otherwise only the out-of-plane shears must vanish, since the
/// fixed normal stress reaches the remaining diagonal direction.
fn check_subspace(params: &MaterialParams, h: &Hardening, plane: Plane, in_plane: bool) -> Result<(), ProbeError> {
    for x in [h.x_k, h.x_d] {
        let off = if in_plane {
            x - plane.deviator(plane.project(&x))
        } else {
            SymTensor2::new([0.0, 0.0, 0.0, 0.0, x.c[4], x.c[5]])
        };
        let residual = off.norm() / x.norm().max(params.k0);
        if residual > SUBSPACE_TOL {
            return Err(ProbeError::SubspaceViolation(residual));
        }
    }
    Ok(())
}

fn axis_of(plane: Plane, h: &Hardening) -> f64 {
    if h.x_d.norm() == 0.0 {
        return 0.0;
    }
    let img = plane.project(&h.x_d);
    img.b.atan2(img.a)
}

fn closed(origin: Vec2, axis_angle: f64, radii: &[f64]) -> (Vec<f64>, Vec<PlanePoint>) {
    let n = radii.len();
    let mut angles: Vec<f64> = (0..=n).map(|j| axis_angle + TAU * j as f64 / n as f64).collect();
    let mut points: Vec<PlanePoint> = radii
        .iter()
        .zip(&angles)
        .map(|(&r, &psi)| PlanePoint::from_vec(origin + r * Vec2::new(psi.cos(), psi.sin())))
        .collect();
    points.push(points[0]);
    angles[n] = angles[0] + TAU;
    (angles, points)
}

/// Traces the level set `f = f_level` by bisection along `n_points` rays.
pub fn locus(
    params: &MaterialParams,
    state: &MaterialState,
    plane: Plane,
    fixed_stress: f64,
    f_level: f64,
    n_points: usize,
) -> Result<YieldLocus, ProbeError> {
    check_request(n_points, f_level, fixed_stress)?;
    let h = hardening(params, state)?;
    check_subspace(params, &h, plane, false)?;
    let scale = (2.0f64 / 3.0).sqrt() * (params.k0 + h.r);
    let probe = Probe { params, h, plane, fixed_stress, f_level, f_bar_level: f_level / scale };
    let axis_angle = axis_of(plane, &h);
    let origin = probe.origin(Vec2::new(axis_angle.cos(), axis_angle.sin()))?;
    let radii = (0..n_points)
        .into_par_iter()
        .map(|j| {
            let psi = axis_angle + TAU * j as f64 / n_points as f64;
            probe.ray(origin, Vec2::new(psi.cos(), psi.sin()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (dir_angles, points) = closed(origin, axis_angle, &radii);
    Ok(YieldLocus {
        plane,
        fixed_stress,
        f_level,
        origin: PlanePoint::from_vec(origin),
        axis_angle,
        dir_angles,
        points,
        state_id: None,
    })
}

/// The axial–torsion locus without fixed stress, mapped from the interpolated
/// shape: scaled by `K0 + R`, turned onto the image of `X_d` and centred at the
/// image of `X_k + X_d`.
pub fn closed_form_locus(
    params: &MaterialParams,
    state: &MaterialState,
    f_level: f64,
    n_points: usize,
) -> Result<YieldLocus, ProbeError> {
    check_request(n_points, f_level, 0.0)?;
    let plane = Plane::AxialTorsion;
    let h = hardening(params, state)?;
    check_subspace(params, &h, plane, true)?;
    let f_bar = f_level / ((2.0f64 / 3.0).sqrt() * (params.k0 + h.r));
    let axis_angle = axis_of(plane, &h);
    let origin = plane.project(&(h.x_k + h.x_d)).vec();
    let radii = (0..n_points)
        .map(|j| {
            let rel = TAU * j as f64 / n_points as f64;
            let theta = if rel <= PI { rel } else { TAU - rel };
            let r = params.shape.level_radius(theta, h.alpha, f_bar).map_err(MaterialError::from)?;
            Ok((params.k0 + h.r) * r)
        })
        .collect::<Result<Vec<_>, ProbeError>>()?;
    let (dir_angles, points) = closed(origin, axis_angle, &radii);
    Ok(YieldLocus {
        plane,
        fixed_stress: 0.0,
        f_level,
        origin: PlanePoint::from_vec(origin),
        axis_angle,
        dir_angles,
        points,
        state_id: None,
    })
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Farthest intersection of the ray `o + t dir`, `t > 0`, with the polygon.
fn ray_exit(poly: &[Vec2], o: Vec2, dir: Vec2) -> f64 {
    let n = poly.len();
    let mut best: f64 = 0.0;
    for i in 0..n {
        let a = poly[i] - o;
        let e = poly[(i + 1) % n] - poly[i];
        let den = cross(dir, e);
        if den == 0.0 {
            continue;
        }
        let t = cross(a, e) / den;
        let s = cross(a, dir) / den;
        if t > 0.0 && (-1e-12..=1.0 + 1e-12).contains(&s) {
            best = best.max(t);
        }
    }
    best
}

fn circumradius(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    let twice_area = cross(b - a, c - a).abs();
    if twice_area == 0.0 {
        return f64::INFINITY;
    }
    (b - a).norm() * (c - b).norm() * (a - c).norm() / (2.0 * twice_area)
}

pub fn locus_metrics(locus: &YieldLocus) -> LocusMetrics {
    let poly: Vec<Vec2> = locus.polygon().iter().map(|p| p.vec()).collect();
    let n = poly.len();
    let o = locus.origin.vec();
    let axis = Vec2::new(locus.axis_angle.cos(), locus.axis_angle.sin());
    let area = 0.5
        * (0..n)
            .map(|i| cross(poly[i], poly[(i + 1) % n]))
            .sum::<f64>()
            .abs();
    let apex_radius = |sign: f64| {
        let j = (0..n)
            .max_by(|&i, &k| {
                (sign * poly[i].dot(&axis))
                    .partial_cmp(&(sign * poly[k].dot(&axis)))
                    .expect("finite locus")
            })
            .expect("non-empty locus");
        circumradius(poly[(j + n - 1) % n], poly[j], poly[(j + 1) % n])
    };
    LocusMetrics {
        forward_extent: ray_exit(&poly, o, axis),
        backward_extent: ray_exit(&poly, o, -axis),
        area,
        center_offset: o.norm(),
        distortion_ratio: apex_radius(-1.0) / apex_radius(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArcBoundary;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn params() -> MaterialParams {
        MaterialParams::reference_alloy(ArcBoundary::egg())
    }

    /// State whose backstresses are uniaxial along the in-plane axis.
    fn axial_state(p: &MaterialParams, plane: Plane, x_k: f64, alpha: f64, r: f64) -> MaterialState {
        let d = SymTensor2::unit(plane.normal_index(), 1.0).dev();
        let d = d * (1.0 / d.norm());
        MaterialState {
            eps_i: SymTensor2::ZERO,
            eps_ki: d * (-x_k / p.c_k),
            eps_di: d * (-alpha / (p.kappa_d * p.c_d)),
            s: r / p.gamma,
            ..MaterialState::default()
        }
    }

    proptest! {
        #[test]
        fn plane_map_is_an_isometry(a1 in -100.0..100.0f64, b1 in -100.0..100.0f64,
                                    a2 in -100.0..100.0f64, b2 in -100.0..100.0f64, hoop in any::<bool>()) {
            let plane = if hoop { Plane::HoopTorsion } else { Plane::AxialTorsion };
            let s1 = plane.deviator(PlanePoint::new(a1, b1));
            let s2 = plane.deviator(PlanePoint::new(a2, b2));
            let plane_dot = a1 * a2 + b1 * b2;
            prop_assert!((s1.dot(&s2) - 2.0 / 3.0 * plane_dot).abs() < 1e-12 * (1.0 + plane_dot.abs()));
            let back = plane.project(&s1);
            prop_assert!((back.a - a1).abs() < 1e-12 * (1.0 + a1.abs()));
            prop_assert!((back.b - b1).abs() < 1e-12 * (1.0 + b1.abs()));
        }
    }

    #[test]
    fn virgin_locus_is_the_k0_circle() {
        let p = params();
        let l = locus(&p, &MaterialState::virgin(), Plane::AxialTorsion, 0.0, 0.0, 64).unwrap();
        for pt in l.polygon() {
            assert_abs_diff_eq!(pt.vec().norm(), 7.4, epsilon = 1e-9);
        }
        let m = locus_metrics(&l);
        assert_abs_diff_eq!(m.forward_extent, 7.4, epsilon = 1e-9);
        assert_abs_diff_eq!(m.backward_extent, 7.4, epsilon = 1e-9);
        assert_eq!(m.center_offset, 0.0);
        assert_abs_diff_eq!(m.distortion_ratio, 1.0, epsilon = 1e-6);
        assert_eq!(l.points.first(), l.points.last());
    }

    #[test]
    fn ray_locus_matches_closed_form() {
        let p = params();
        let state = axial_state(&p, Plane::AxialTorsion, 30.0, 0.8, 2.5);
        for f_level in [0.0, 0.5] {
            let a = locus(&p, &state, Plane::AxialTorsion, 0.0, f_level, 90).unwrap();
            let b = closed_form_locus(&p, &state, f_level, 90).unwrap();
            for (x, y) in a.points.iter().zip(&b.points) {
                assert!((x.vec() - y.vec()).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn prestrained_shape_is_sharp_in_front() {
        let p = params();
        let state = axial_state(&p, Plane::AxialTorsion, 25.0, 0.99, 3.0);
        let l = locus(&p, &state, Plane::AxialTorsion, 0.0, 0.0, 360).unwrap();
        let m = locus_metrics(&l);
        assert!(m.distortion_ratio > 5.0);
        assert!(l.is_convex());
        assert!(l.origin.a > 0.0);
    }

    #[test]
    fn off_plane_backstress() {
        let p = params();
        let hoop = axial_state(&p, Plane::HoopTorsion, 25.0, 0.5, 1.0);
        assert!(locus(&p, &hoop, Plane::AxialTorsion, 30.0, 0.0, 64).unwrap().is_convex());
        assert!(matches!(locus(&p, &hoop, Plane::AxialTorsion, 0.0, 0.0, 64), Err(ProbeError::RayEscapes(_))));
        assert!(matches!(closed_form_locus(&p, &hoop, 0.0, 32), Err(ProbeError::SubspaceViolation(_))));
        let shear = MaterialState { eps_ki: SymTensor2::unit(4, -0.01), ..MaterialState::default() };
        assert!(matches!(locus(&p, &shear, Plane::AxialTorsion, 0.0, 0.0, 32), Err(ProbeError::SubspaceViolation(_))));
    }

    #[test]
    fn distant_section_escapes() {
        let p = params();
        let err = locus(&p, &MaterialState::virgin(), Plane::AxialTorsion, 40.0, 0.0, 32).unwrap_err();
        assert!(matches!(err, ProbeError::RayEscapes(_)));
    }

    #[test]
    fn too_few_points() {
        let p = params();
        assert!(matches!(
            locus(&p, &MaterialState::virgin(), Plane::AxialTorsion, 0.0, 0.0, 8),
            Err(ProbeError::InvalidInput(_))
        ));
    }

    #[test]
    fn csv_is_closed() {
        let p = params();
        let l = locus(&p, &MaterialState::virgin(), Plane::HoopTorsion, 0.0, 0.0, 16).unwrap();
        let csv = l.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "index,dir_angle_rad,a_MPa,b_MPa");
        assert_eq!(lines.len(), 18);
        assert_eq!(lines[1].split(',').skip(2).collect::<Vec<_>>(), lines[17].split(',').skip(2).collect::<Vec<_>>());
    }
}
