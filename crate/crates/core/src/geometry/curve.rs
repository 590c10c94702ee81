use serde::{Deserialize, Serialize};

use super::Point;
use crate::deform::Diffeomorphism;

/// One piece of a piecewise curve: a straight segment or a circular arc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "piece", rename_all = "snake_case")]
pub enum Piece {
    Line { from: [f64; 2], to: [f64; 2] },
    /// Arc starting at angle `start`, sweeping `sweep` radians (signed).
    Arc { center: [f64; 2], radius: f64, start: f64, sweep: f64 },
}

impl Piece {
    fn length(&self) -> f64 {
        match self {
            Piece::Line { from, to } => ((to[0] - from[0]).powi(2) + (to[1] - from[1]).powi(2)).sqrt(),
            Piece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }

    /// Position, first and second derivative with respect to arclength `s`.
    fn eval(&self, s: f64) -> (Point, Point, Point) {
        match self {
            Piece::Line { from, to } => {
                let a = Point::new(from[0], from[1]);
                let b = Point::new(to[0], to[1]);
                let t = (b - a) / self.length();
                (a + t * s, t, Point::zeros())
            }
            Piece::Arc { center, radius, start, sweep } => {
                let dir = sweep.signum();
                let ang = start + dir * s / radius;
                let (sn, cs) = ang.sin_cos();
                let c = Point::new(center[0], center[1]);
                (
                    c + Point::new(cs, sn) * *radius,
                    Point::new(-sn, cs) * dir,
                    Point::new(-cs, -sn) / *radius,
                )
            }
        }
    }
}

/// Closed parametric boundary curves.
#[derive(Debug, Clone)]
pub enum Curve {
    Circle { center: Point, radius: f64 },
    Ellipse { center: Point, a: f64, b: f64, rotation: f64 },
    /// Closed chain of lines and arcs parametrised by arclength.
    Pieces(Vec<Piece>),
    /// Image of a base curve under a diffeomorphism.
    Mapped { base: Box<Curve>, map: Diffeomorphism },
}

impl Curve {
    /// Horseshoe (thick annular arc with round caps) opening toward `+x`.
    pub fn horseshoe(inner: f64, outer: f64, half_opening: f64) -> Curve {
        use std::f64::consts::PI;
        let m = 0.5 * (inner + outer);
        let w = 0.5 * (outer - inner);
        let t = half_opening;
        let c1 = [m * (PI + t).cos(), m * (PI + t).sin()];
        let c2 = [m * (PI - t).cos(), m * (PI - t).sin()];
        Curve::Pieces(vec![
            Piece::Arc { center: [0.0, 0.0], radius: outer, start: PI - t, sweep: 2.0 * t },
            Piece::Arc { center: c1, radius: w, start: PI + t, sweep: PI },
            Piece::Arc { center: [0.0, 0.0], radius: inner, start: PI + t, sweep: -2.0 * t },
            Piece::Arc { center: c2, radius: w, start: 2.0 * PI - t, sweep: PI },
        ])
    }

    /// Disk of the given radius about the origin with a straight slot cut in
    /// from `+x`. The slot has half-width `half_width` and ends in a round tip
    /// centred at the origin; its mouth is rounded with fillets of radius
    /// `fillet`. The tip apex is `(-half_width, 0)`.
    pub fn slotted_disk(radius: f64, half_width: f64, fillet: f64) -> Curve {
        use std::f64::consts::{FRAC_PI_2, PI};
        let (r, a, f) = (radius, half_width, fillet);
        let xf = ((r - f).powi(2) - (a + f).powi(2)).sqrt();
        let phi = (a + f).atan2(xf);
        Curve::Pieces(vec![
            Piece::Arc { center: [0.0, 0.0], radius: r, start: phi, sweep: 2.0 * (PI - phi) },
            Piece::Arc { center: [xf, -(a + f)], radius: f, start: -phi, sweep: FRAC_PI_2 + phi },
            Piece::Line { from: [xf, -a], to: [0.0, -a] },
            Piece::Arc { center: [0.0, 0.0], radius: a, start: -FRAC_PI_2, sweep: -PI },
            Piece::Line { from: [0.0, a], to: [xf, a] },
            Piece::Arc { center: [xf, a + f], radius: f, start: -FRAC_PI_2, sweep: FRAC_PI_2 + phi },
        ])
    }

    pub fn period(&self) -> f64 {
        match self {
            Curve::Circle { .. } | Curve::Ellipse { .. } => std::f64::consts::TAU,
            Curve::Pieces(p) => p.iter().map(Piece::length).sum(),
            Curve::Mapped { base, .. } => base.period(),
        }
    }

    fn piece_at(pieces: &[Piece], t: f64, period: f64) -> (&Piece, f64) {
        let mut s = t.rem_euclid(period);
        for p in pieces {
            let l = p.length();
            if s <= l {
                return (p, s);
            }
            s -= l;
        }
        let last = pieces.last().expect("non-empty piece list");
        (last, last.length())
    }

    pub fn point(&self, t: f64) -> Point {
        self.jet(t).0
    }

    pub fn d1(&self, t: f64) -> Point {
        self.jet(t).1
    }

    /// Position and first two derivatives at parameter `t`. The second
    /// derivative of a mapped curve ignores the curvature of the map.
    pub fn jet(&self, t: f64) -> (Point, Point, Point) {
        match self {
            Curve::Circle { center, radius } => {
                let (s, c) = t.sin_cos();
                (
                    center + Point::new(c, s) * *radius,
                    Point::new(-s, c) * *radius,
                    Point::new(-c, -s) * *radius,
                )
            }
            Curve::Ellipse { center, a, b, rotation } => {
                let (s, c) = t.sin_cos();
                let (rs, rc) = rotation.sin_cos();
                let rot = |v: Point| Point::new(rc * v.x - rs * v.y, rs * v.x + rc * v.y);
                (
                    center + rot(Point::new(a * c, b * s)),
                    rot(Point::new(-a * s, b * c)),
                    rot(Point::new(-a * c, -b * s)),
                )
            }
            Curve::Pieces(p) => {
                let (piece, s) = Self::piece_at(p, t, self.period());
                piece.eval(s)
            }
            Curve::Mapped { base, map } => {
                let (p, d1, d2) = base.jet(t);
                let j = map.jacobian(&p);
                (map.apply(&p), j * d1, j * d2)
            }
        }
    }

    /// Smallest radius of curvature, when it is available in closed form.
    pub fn min_curvature_radius(&self) -> Option<f64> {
        match self {
            Curve::Circle { radius, .. } => Some(*radius),
            Curve::Ellipse { a, b, .. } => {
                let (big, small) = if a >= b { (a, b) } else { (b, a) };
                Some(small * small / big)
            }
            Curve::Pieces(p) => Some(
                p.iter()
                    .filter_map(|q| match q {
                        Piece::Arc { radius, .. } => Some(*radius),
                        Piece::Line { .. } => None,
                    })
                    .fold(f64::INFINITY, f64::min),
            ),
            Curve::Mapped { .. } => None,
        }
    }

    /// Parameter of the closest curve point to `p`.
    pub fn project(&self, p: &Point) -> f64 {
        let period = self.period();
        let n = 720;
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..n {
            let t = period * k as f64 / n as f64;
            let d = (self.point(t) - p).norm_squared();
            if d < best.0 {
                best = (d, t);
            }
        }
        // Newton on g(t) = (c(t) - p) . c'(t)
        let mut t = best.1;
        let h = period / n as f64;
        for _ in 0..50 {
            let (c, d1, d2) = self.jet(t);
            let g = (c - p).dot(&d1);
            let dg = d1.norm_squared() + (c - p).dot(&d2);
            if dg <= 0.0 {
                break;
            }
            let step = (g / dg).clamp(-h, h);
            t -= step;
            if step.abs() < 1e-15 * period {
                break;
            }
        }
        t.rem_euclid(period)
    }

    pub fn distance(&self, p: &Point) -> f64 {
        (self.point(self.project(p)) - p).norm()
    }

    /// Arclength between parameters `t0 <= t1` (Gauss-Legendre on 64 panels).
    pub fn arclength(&self, t0: f64, t1: f64) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let panels = 64;
        let h = (t1 - t0) / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let a = t0 + h * k as f64;
            for (x, w) in X.iter().zip(W) {
                acc += w * self.d1(a + 0.5 * h * (x + 1.0)).norm();
            }
        }
        acc * 0.5 * h
    }

    /// Parameter reached by moving arclength `s` (signed) from `t0`.
    pub fn advance(&self, t0: f64, s: f64) -> f64 {
        let mut t = t0 + s / self.d1(t0).norm().max(1e-300);
        for _ in 0..50 {
            let cur = if t >= t0 { self.arclength(t0, t) } else { -self.arclength(t, t0) };
            let step = (cur - s) / self.d1(t).norm();
            t -= step;
            if step.abs() < 1e-15 * self.period() {
                break;
            }
        }
        t
    }

    /// Unit tangent at `t`.
    pub fn unit_tangent(&self, t: f64) -> Point {
        self.d1(t).normalize()
    }
}
