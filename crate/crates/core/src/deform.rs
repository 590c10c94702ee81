//! Vector fields, the maps `id + t xi` they generate, C1 deviation norms and
//! push-forwards of domains and singular sets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{HardyError, Result};
use crate::geometry::index::SegmentIndex;
use crate::geometry::{Curve, Domain, Mat2, ParametricSource, Point, Submanifold};

/// `(1 - q)^3` on `q < 1`: a C2 radial profile in `q = |x - c|^2 / r^2`.
fn bump(q: f64) -> (f64, f64) {
    if q >= 1.0 {
        (0.0, 0.0)
    } else {
        let u = 1.0 - q;
        (u * u * u, -3.0 * u * u)
    }
}

/// Spectral norm of a 2x2 matrix.
pub fn op_norm(m: &Mat2) -> f64 {
    let s = 0.5 * m.iter().map(|v| v * v).sum::<f64>();
    let det = m.determinant();
    (s + (s * s - det * det).max(0.0).sqrt()).sqrt()
}

/// Cutoff across the tube, equal to one near the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// Quintic smoothstep, C2 at both ends.
    #[default]
    Quintic,
    /// Raised cosine, C1 at both ends.
    Cosine,
}

/// Fraction of the half-width on which the cutoff is identically one.
const PLATEAU: f64 = 0.25;

impl CutoffProfile {
    /// Value and derivative in `rho = |offset| / width`.
    pub fn eval(&self, rho: f64) -> (f64, f64) {
        if rho <= PLATEAU {
            return (1.0, 0.0);
        }
        if rho >= 1.0 {
            return (0.0, 0.0);
        }
        let span = 1.0 - PLATEAU;
        let u = (rho - PLATEAU) / span;
        match self {
            CutoffProfile::Quintic => {
                let s = u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
                let ds = 30.0 * u * u * (1.0 - u) * (1.0 - u);
                (1.0 - s, -ds / span)
            }
            CutoffProfile::Cosine => {
                let a = std::f64::consts::PI * u;
                (0.5 * (1.0 + a.cos()), -0.5 * std::f64::consts::PI * a.sin() / span)
            }
        }
    }
}

/// Tangential speed along the boundary curve, in curve-parameter terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TangentialProfile {
    /// Constant speed.
    Uniform { speed: f64 },
    /// `speed * (1 - u^2)^3` with `u` the parameter offset from `center`
    /// divided by `half_width` (both in curve-parameter units, periodic).
    Bump { center: f64, half_width: f64, speed: f64 },
}

impl TangentialProfile {
    fn eval(&self, t: f64, period: f64) -> (f64, f64) {
        match *self {
            TangentialProfile::Uniform { speed } => (speed, 0.0),
            TangentialProfile::Bump { center, half_width, speed } => {
                let off = (t - center + 0.5 * period).rem_euclid(period) - 0.5 * period;
                let u = off / half_width;
                let (b, db) = bump(u * u);
                (speed * b, speed * db * 2.0 * u / half_width)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            TangentialProfile::Uniform { speed } | TangentialProfile::Bump { speed, .. } => speed == 0.0,
        }
    }
}

/// Extension of a tangential boundary field into a normal tube around the curve:
/// `Xi(gamma(t) + y N(t)) = f(|y| / width) g(t) T(t)`.
#[derive(Debug, Clone)]
pub struct TubeExtension {
    pub curve: Curve,
    pub profile: TangentialProfile,
    pub width: f64,
    pub cutoff: CutoffProfile,
    period: f64,
    samples: SegmentIndex,
    sample_params: Vec<f64>,
}

const TUBE_SAMPLES: usize = 4096;

impl TubeExtension {
    fn new(curve: Curve, profile: TangentialProfile, width: f64, cutoff: CutoffProfile) -> Self {
        let period = curve.period();
        let sample_params: Vec<f64> = (0..=TUBE_SAMPLES).map(|k| period * k as f64 / TUBE_SAMPLES as f64).collect();
        let pts: Vec<Point> = sample_params.iter().map(|&t| curve.point(t)).collect();
        let samples = SegmentIndex::new(pts.windows(2).map(|w| [w[0], w[1]]).collect());
        TubeExtension { curve, profile, width, cutoff, period, samples, sample_params }
    }

    /// Tube coordinates `(t, y)` of `x`, or `None` outside the tube.
    fn coords(&self, x: &Point) -> Option<(f64, f64)> {
        let hit = *self.samples.near(x, 0.0).first()?;
        if hit.distance >= self.width * 1.5 {
            return None;
        }
        let (t0, t1) = (self.sample_params[hit.segment], self.sample_params[hit.segment + 1]);
        let mut t = t0 + hit.fraction * (t1 - t0);
        let h = t1 - t0;
        for _ in 0..30 {
            let (c, d1, d2) = self.curve.jet(t);
            let g = (c - x).dot(&d1);
            let dg = d1.norm_squared() + (c - x).dot(&d2);
            let step = (g / dg).clamp(-h, h);
            t -= step;
            if step.abs() <= 1e-15 * self.period {
                break;
            }
        }
        let (c, d1, _) = self.curve.jet(t);
        let tan = d1.normalize();
        let normal = Point::new(-tan.y, tan.x);
        let y = (x - c).dot(&normal);
        (y.abs() < self.width).then_some((t, y))
    }

    fn value(&self, x: &Point) -> Point {
        let Some((t, y)) = self.coords(x) else { return Point::zeros() };
        let (f, _) = self.cutoff.eval(y.abs() / self.width);
        let (g, _) = self.profile.eval(t, self.period);
        self.curve.unit_tangent(t) * (f * g)
    }

    fn jacobian(&self, x: &Point) -> Mat2 {
        let Some((t, y)) = self.coords(x) else { return Mat2::zeros() };
        let (_, d1, d2) = self.curve.jet(t);
        let speed = d1.norm();
        let tan = d1 / speed;
        let dtan = (d2 - tan * d2.dot(&tan)) / speed;
        let normal = Point::new(-tan.y, tan.x);
        let dnormal = Point::new(-dtan.y, dtan.x);
        // x = c(t) + y N(t): columns d/dt, d/dy
        let jx = Mat2::from_columns(&[d1 + dnormal * y, normal]);
        let inv = jx.try_inverse().expect("tube coordinates are regular inside the reach");
        let grad_t = inv.row(0).transpose();
        let grad_y = inv.row(1).transpose();
        let rho = y.abs() / self.width;
        let (f, df) = self.cutoff.eval(rho);
        let df_dy = df * y.signum() / self.width;
        let (g, dg) = self.profile.eval(t, self.period);
        let d_dt = (tan * dg + dtan * g) * f;
        let d_dy = tan * (g * df_dy);
        d_dt * grad_t.transpose() + d_dy * grad_y.transpose()
    }
}

/// Compactly supported (or globally affine) C1 vector field.
#[derive(Debug, Clone)]
pub enum DeformationField {
    Constant(Point),
    /// `x -> A x`.
    Linear(Mat2),
    /// `amplitude * (1 - |x-c|^2/r^2)^3 * (x - c) / r` inside the disk.
    RadialBump { center: Point, radius: f64, amplitude: f64 },
    /// `(1 - |x-c|^2/r^2)^3 * vector` inside the disk.
    DirectionalBump { center: Point, radius: f64, vector: Point },
    BoundaryExtension(Arc<TubeExtension>),
    Sum(Vec<DeformationField>),
    Scaled(f64, Box<DeformationField>),
}

impl DeformationField {
    pub fn zero() -> Self {
        DeformationField::Constant(Point::zeros())
    }

    /// Identity field `x -> x`, the generator of dilations.
    pub fn dilation() -> Self {
        DeformationField::Linear(Mat2::identity())
    }

    /// Infinitesimal rotation about the origin.
    pub fn rotation() -> Self {
        DeformationField::Linear(Mat2::new(0.0, -1.0, 1.0, 0.0))
    }

    pub fn scaled(self, c: f64) -> Self {
        DeformationField::Scaled(c, Box::new(self))
    }

    pub fn value(&self, x: &Point) -> Point {
        match self {
            DeformationField::Constant(c) => *c,
            DeformationField::Linear(a) => a * x,
            DeformationField::RadialBump { center, radius, amplitude } => {
                let d = x - center;
                let (b, _) = bump(d.norm_squared() / (radius * radius));
                d * (amplitude * b / radius)
            }
            DeformationField::DirectionalBump { center, radius, vector } => {
                let (b, _) = bump((x - center).norm_squared() / (radius * radius));
                vector * b
            }
            DeformationField::BoundaryExtension(t) => t.value(x),
            DeformationField::Sum(fs) => fs.iter().map(|f| f.value(x)).sum(),
            DeformationField::Scaled(c, f) => f.value(x) * *c,
        }
    }

    /// `J[i][j] = d xi_i / d x_j`.
    pub fn jacobian(&self, x: &Point) -> Mat2 {
        match self {
            DeformationField::Constant(_) => Mat2::zeros(),
            DeformationField::Linear(a) => *a,
            DeformationField::RadialBump { center, radius, amplitude } => {
                let d = x - center;
                let r2 = radius * radius;
                let (b, db) = bump(d.norm_squared() / r2);
                let grad_b = d * (2.0 * db / r2);
                (Mat2::identity() * b + d * grad_b.transpose()) * (amplitude / radius)
            }
            DeformationField::DirectionalBump { center, radius, vector } => {
                let d = x - center;
                let r2 = radius * radius;
                let (_, db) = bump(d.norm_squared() / r2);
                vector * (d * (2.0 * db / r2)).transpose()
            }
            DeformationField::BoundaryExtension(t) => t.jacobian(x),
            DeformationField::Sum(fs) => fs.iter().map(|f| f.jacobian(x)).sum(),
            DeformationField::Scaled(c, f) => f.jacobian(x) * *c,
        }
    }

    pub fn divergence(&self, x: &Point) -> f64 {
        self.jacobian(x).trace()
    }

    /// Bounding box outside which the field vanishes, or `None` when unbounded.
    pub fn support(&self) -> Option<(Point, Point)> {
        match self {
            DeformationField::Constant(c) if c.norm() == 0.0 => Some((Point::zeros(), Point::zeros())),
            DeformationField::Constant(_) | DeformationField::Linear(_) => None,
            DeformationField::RadialBump { center, radius, .. }
            | DeformationField::DirectionalBump { center, radius, .. } => {
                let r = Point::new(*radius, *radius);
                Some((center - r, center + r))
            }
            DeformationField::BoundaryExtension(t) => {
                let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
                for k in 0..TUBE_SAMPLES {
                    let p = t.curve.point(t.period * k as f64 / TUBE_SAMPLES as f64);
                    lo = lo.inf(&p);
                    hi = hi.sup(&p);
                }
                let w = Point::repeat(t.width);
                Some((lo - w, hi + w))
            }
            DeformationField::Sum(fs) => fs.iter().try_fold((Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY)), |(lo, hi), f| {
                f.support().map(|(a, b)| (lo.inf(&a), hi.sup(&b)))
            }),
            DeformationField::Scaled(_, f) => f.support(),
        }
    }
}

/// Extends a tangential field on the boundary curve into a tube of half-width `width`.
pub fn extend_boundary_field(
    domain: &Domain,
    profile: TangentialProfile,
    width: f64,
    cutoff: CutoffProfile,
) -> Result<DeformationField> {
    let src = domain
        .source()
        .ok_or_else(|| HardyError::InvalidDomain("boundary extension needs a parametric boundary".into()))?;
    let reach = domain.reach_estimate();
    if width >= reach || width <= 0.0 {
        return Err(HardyError::TubeTooWide { width, reach });
    }
    if profile.is_zero() {
        return Ok(DeformationField::zero());
    }
    Ok(DeformationField::BoundaryExtension(Arc::new(TubeExtension::new(src.curve.clone(), profile, width, cutoff))))
}

/// `x -> x + sum_k t_k xi_k(x)`.
#[derive(Debug, Clone, Default)]
pub struct Diffeomorphism {
    terms: Vec<(f64, DeformationField)>,
}

impl Diffeomorphism {
    pub fn identity() -> Self {
        Diffeomorphism { terms: Vec::new() }
    }

    /// `id + t xi`.
    pub fn along(field: &DeformationField, t: f64) -> Self {
        Diffeomorphism { terms: vec![(t, field.clone())] }
    }

    pub fn translation(c: Point) -> Self {
        Self::along(&DeformationField::Constant(c), 1.0)
    }

    /// `x -> (R - I) x + x + c` as a sum of a linear and a constant term.
    pub fn rigid(angle: f64, shift: Point) -> Self {
        let (s, c) = angle.sin_cos();
        let lin = Mat2::new(c - 1.0, -s, s, c - 1.0);
        Diffeomorphism {
            terms: vec![(1.0, DeformationField::Linear(lin)), (1.0, DeformationField::Constant(shift))],
        }
    }

    pub fn scaling(factor: f64) -> Self {
        Self::along(&DeformationField::dilation(), factor - 1.0)
    }

    pub fn then_add(mut self, t: f64, field: DeformationField) -> Self {
        self.terms.push((t, field));
        self
    }

    pub fn is_identity(&self) -> bool {
        self.terms.iter().all(|(t, _)| *t == 0.0)
    }

    pub fn apply(&self, x: &Point) -> Point {
        self.terms.iter().fold(*x, |acc, (t, f)| acc + f.value(x) * *t)
    }

    pub fn jacobian(&self, x: &Point) -> Mat2 {
        self.terms.iter().fold(Mat2::identity(), |acc, (t, f)| acc + f.jacobian(x) * *t)
    }

    /// `|| D phi(x) - I ||` at one point.
    pub fn deviation_at(&self, x: &Point) -> f64 {
        op_norm(&(self.jacobian(x) - Mat2::identity()))
    }

    /// Solves `phi(x) = y` by damped Newton iteration from `x = y`.
    pub fn invert_apply(&self, y: &Point) -> Result<Point> {
        let tol = 1e-13 * y.norm().max(1.0);
        let mut x = *y;
        let mut res = self.apply(&x) - y;
        for it in 0..100 {
            if res.norm() <= tol {
                return Ok(x);
            }
            let j = self.jacobian(&x);
            let step = j.try_inverse().ok_or(HardyError::NoConvergence { iterations: it, residual: res.norm() })? * res;
            let mut lambda = 1.0;
            loop {
                let cand = x - step * lambda;
                let r = self.apply(&cand) - y;
                if r.norm() < res.norm() || lambda < 1e-6 {
                    x = cand;
                    res = r;
                    break;
                }
                lambda *= 0.5;
            }
        }
        if res.norm() <= tol {
            Ok(x)
        } else {
            Err(HardyError::NoConvergence { iterations: 100, residual: res.norm() })
        }
    }
}

/// Uniform `n x n` grid over the bounding box of `domain` restricted to the
/// domain, plus boundary vertices and edge midpoints.
pub fn sample_points(domain: &Domain, n: usize) -> Vec<Point> {
    let (lo, hi) = domain.bbox();
    let mut pts = Vec::new();
    let n = n.max(2);
    for i in 0..n {
        for j in 0..n {
            let p = Point::new(
                lo.x + (hi.x - lo.x) * i as f64 / (n - 1) as f64,
                lo.y + (hi.y - lo.y) * j as f64 / (n - 1) as f64,
            );
            if domain.contains(&p) {
                pts.push(p);
            }
        }
    }
    for [a, b] in domain.edges() {
        pts.push(a);
        pts.push((a + b) * 0.5);
    }
    pts
}

/// Sampled sup over `region` of `|| D phi - I ||`.
pub fn c1_deviation(phi: &Diffeomorphism, region: &Domain, grid: usize) -> Result<f64> {
    let pts = sample_points(region, grid);
    if pts.is_empty() {
        return Err(HardyError::EmptyRegion);
    }
    Ok(pts.iter().map(|p| phi.deviation_at(p)).fold(0.0, f64::max))
}

/// Default grid density for sampled sup-norms.
pub const DEFAULT_GRID: usize = 256;

/// Maps a domain and its singular set through `phi`.
pub fn push_forward(phi: &Diffeomorphism, domain: &Domain, sigma: &Submanifold) -> Result<(Domain, Submanifold)> {
    let dev = c1_deviation(phi, domain, DEFAULT_GRID)?;
    if dev >= 1.0 {
        return Err(HardyError::NotInvertible(dev));
    }
    let pts: Vec<Point> = domain.boundary().iter().map(|p| phi.apply(p)).collect();
    let mapped = Domain::new(pts, domain.is_ccw())?;
    let source = domain.source().map(|s| ParametricSource {
        curve: if phi.is_identity() {
            s.curve.clone()
        } else {
            Curve::Mapped { base: Box::new(s.curve.clone()), map: phi.clone() }
        },
        params: s.params.clone(),
    });
    let sigma = match sigma {
        Submanifold::PointSet { .. } => Submanifold::PointSet {
            points: sigma.points().iter().map(|p| phi.apply(p)).map(|q| [q.x, q.y]).collect(),
        },
        other => other.clone(),
    };
    Ok((mapped.with_source(source), sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fd_jacobian(f: &DeformationField, x: &Point, h: f64) -> Mat2 {
        let mut m = Mat2::zeros();
        for j in 0..2 {
            let mut e = Point::zeros();
            e[j] = h;
            let col = (f.value(&(x + e)) - f.value(&(x - e))) / (2.0 * h);
            m.set_column(j, &col);
        }
        m
    }

    fn sample_fields() -> Vec<DeformationField> {
        vec![
            DeformationField::Constant(Point::new(0.3, -0.2)),
            DeformationField::Linear(Mat2::new(0.2, -0.5, 0.1, 0.4)),
            DeformationField::RadialBump { center: Point::new(0.4, 0.5), radius: 0.6, amplitude: 0.3 },
            DeformationField::DirectionalBump { center: Point::new(0.6, 0.3), radius: 0.5, vector: Point::new(0.2, 0.7) },
        ]
    }

    #[test]
    fn jacobians_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fields = sample_fields();
        let sum = DeformationField::Sum(fields.clone());
        for f in fields.iter().chain([&sum]) {
            for _ in 0..50 {
                let x = Point::new(rng.random_range(-0.2..1.2), rng.random_range(-0.2..1.2));
                let err = (f.jacobian(&x) - fd_jacobian(f, &x, 1e-5)).norm();
                assert!(err < 1e-8, "{f:?} at {x}: {err}");
                assert!((f.divergence(&x) - f.jacobian(&x).trace()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sum_jacobian_is_sum_of_members() {
        let fields = sample_fields();
        let sum = DeformationField::Sum(fields.clone());
        let x = Point::new(0.45, 0.55);
        let total: Mat2 = fields.iter().map(|f| f.jacobian(&x)).sum();
        assert!((sum.jacobian(&x) - total).norm() < 1e-15);
    }

    #[test]
    fn bumps_vanish_outside_support() {
        for f in &sample_fields()[2..] {
            let (lo, hi) = f.support().unwrap();
            for p in [lo, hi, Point::new(lo.x, hi.y), Point::new(3.0, 3.0)] {
                assert_eq!(f.value(&p), Point::zeros());
                assert_eq!(f.jacobian(&p), Mat2::zeros());
            }
        }
    }

    #[test]
    fn c1_deviation_examples() {
        let sq = Domain::unit_square();
        assert_eq!(c1_deviation(&Diffeomorphism::identity(), &sq, 16).unwrap(), 0.0);
        let a = Mat2::new(0.2, -0.5, 0.1, 0.4);
        let phi = Diffeomorphism::along(&DeformationField::Linear(a), 0.3);
        let expected = 0.3 * op_norm(&a);
        assert!((c1_deviation(&phi, &sq, 3).unwrap() - expected).abs() < 1e-15);
        // singular values of diag(3, 1)
        assert!((op_norm(&Mat2::new(3.0, 0.0, 0.0, 1.0)) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bump = DeformationField::RadialBump { center: Point::new(0.5, 0.5), radius: 0.5, amplitude: 1.0 };
        let phi = Diffeomorphism::along(&bump, 0.1);
        for _ in 0..200 {
            let y = Point::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            let x = phi.invert_apply(&y).unwrap();
            assert!((phi.apply(&x) - y).norm() <= 1e-12);
        }
        let shift = Diffeomorphism::along(&DeformationField::Constant(Point::new(1.0, 2.0)), 0.25);
        let x = shift.invert_apply(&Point::new(0.5, 0.5)).unwrap();
        assert!((x - Point::new(0.25, 0.0)).norm() < 1e-14);
        assert_eq!(Diffeomorphism::identity().invert_apply(&Point::new(0.3, 0.7)).unwrap(), Point::new(0.3, 0.7));
    }

    #[test]
    fn inverse_jacobian_and_determinant_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut kappa: f64 = 0.0;
        for _ in 0..2000 {
            let e = Mat2::new(
                rng.random_range(-0.35..0.35),
                rng.random_range(-0.35..0.35),
                rng.random_range(-0.35..0.35),
                rng.random_range(-0.35..0.35),
            );
            let n = op_norm(&e);
            if n > 0.5 || n == 0.0 {
                continue;
            }
            let j = Mat2::identity() + e;
            let inv = j.try_inverse().unwrap();
            assert!(op_norm(&(inv - Mat2::identity())) <= n / (1.0 - n) + 1e-14);
            assert!(op_norm(&inv) <= 1.0 / (1.0 - n) + 1e-14);
            kappa = kappa.max((j.determinant() - 1.0).abs() / n);
        }
        // |det(I+E) - 1| <= |tr E| + |det E| <= 2n + n^2 in two dimensions
        assert!(kappa <= 2.5, "kappa = {kappa}");
    }

    #[test]
    fn push_forward_translation_and_identity() {
        let sq = Domain::unit_square();
        let sigma = Submanifold::point(Point::new(0.5, 0.0));
        let (d, s) = push_forward(&Diffeomorphism::identity(), &sq, &sigma).unwrap();
        assert_eq!(d.boundary(), sq.boundary());
        assert_eq!(s, sigma);
        let c = Point::new(2.0, -1.0);
        let (d, s) = push_forward(&Diffeomorphism::translation(c), &sq, &sigma).unwrap();
        for (p, q) in d.boundary().iter().zip(sq.boundary()) {
            assert!((p - q - c).norm() < 1e-15);
        }
        assert_eq!(s.points()[0], Point::new(2.5, -1.0));
    }

    #[test]
    fn push_forward_rejects_large_deviation() {
        let sq = Domain::unit_square();
        let phi = Diffeomorphism::along(&DeformationField::dilation(), -1.5);
        assert!(matches!(push_forward(&phi, &sq, &Submanifold::FullBoundary), Err(HardyError::NotInvertible(_))));
    }

    #[test]
    fn push_forward_round_trip() {
        let d = Domain::disk(Point::new(0.5, 0.5), 0.5, 64);
        let bump = DeformationField::RadialBump { center: Point::new(0.5, 0.5), radius: 0.7, amplitude: 1.0 };
        let phi = Diffeomorphism::along(&bump, 0.05);
        let (m, _) = push_forward(&phi, &d, &Submanifold::FullBoundary).unwrap();
        for (p, q) in m.boundary().iter().zip(d.boundary()) {
            let back = phi.invert_apply(p).unwrap();
            assert!((back - q).norm() <= 1e-10 * d.diameter());
        }
    }

    fn ellipse_extension(cutoff: CutoffProfile) -> (Domain, DeformationField) {
        let d = Domain::ellipse(Point::zeros(), 1.5, 1.0, 256);
        let prof = TangentialProfile::Bump { center: 0.7, half_width: 0.9, speed: 1.0 };
        let f = extend_boundary_field(&d, prof, 0.2, cutoff).unwrap();
        (d, f)
    }

    #[test]
    fn extension_pins_boundary_values() {
        let d = Domain::disk(Point::zeros(), 1.0, 128);
        let f = extend_boundary_field(&d, TangentialProfile::Uniform { speed: 1.0 }, 0.3, CutoffProfile::Quintic).unwrap();
        for k in 0..50 {
            let t = 0.1 + k as f64 * 0.12;
            let x = Point::new(t.cos(), t.sin());
            assert!((f.value(&x) - Point::new(-t.sin(), t.cos())).norm() < 1e-12);
        }
        assert_eq!(f.value(&Point::new(0.5, 0.0)), Point::zeros());
        let zero = extend_boundary_field(&d, TangentialProfile::Uniform { speed: 0.0 }, 0.3, CutoffProfile::Quintic).unwrap();
        assert_eq!(zero.value(&Point::new(1.0, 0.0)), Point::zeros());
    }

    #[test]
    fn extension_jacobian_matches_differences() {
        for cutoff in [CutoffProfile::Quintic, CutoffProfile::Cosine] {
            let (d, f) = ellipse_extension(cutoff);
            let src = d.source().unwrap();
            for k in 0..40 {
                let t = 0.05 * k as f64 + 0.2;
                let c = src.curve.point(t);
                let tan = src.curve.unit_tangent(t);
                let normal = Point::new(-tan.y, tan.x);
                for off in [0.0, 0.03, -0.07, 0.12] {
                    let x = c + normal * off;
                    let err = (f.jacobian(&x) - fd_jacobian(&f, &x, 1e-6)).norm();
                    assert!(err < 1e-6, "t={t} off={off} err={err}");
                }
            }
        }
    }

    #[test]
    fn extension_rejects_wide_tube() {
        let d = Domain::ellipse(Point::zeros(), 1.5, 1.0, 256);
        // smallest curvature radius is b^2/a = 2/3
        let r = extend_boundary_field(&d, TangentialProfile::Uniform { speed: 1.0 }, 0.4, CutoffProfile::Quintic);
        assert!(matches!(r, Err(HardyError::TubeTooWide { .. })));
    }
}
