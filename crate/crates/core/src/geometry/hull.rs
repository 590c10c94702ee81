use super::{Domain, Point};
use crate::error::{HardyError, Result};

fn cross(o: &Point, a: &Point, b: &Point) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Convex hull as a counterclockwise domain (monotone chain).
pub fn convex_hull(points: &[Point]) -> Result<Domain> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return Err(HardyError::DegenerateInput(format!("{} distinct points", pts.len())));
    }
    let mut lower: Vec<Point> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        return Err(HardyError::DegenerateInput("collinear points".into()));
    }
    Domain::polygon(lower)
}

/// Containment in a counterclockwise convex polygon, boundary inclusive up to `tol`.
pub fn point_in_convex(p: &Point, hull: &[Point], tol: f64) -> bool {
    let n = hull.len();
    (0..n).all(|i| {
        let a = hull[i];
        let b = hull[(i + 1) % n];
        cross(&a, &b, p) >= -tol * (b - a).norm()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_hull_discards_interior() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.5, 0.5),
            Point::new(1.0, 0.0),
            Point::new(0.0, 1.0),
        ];
        let h = convex_hull(&pts).unwrap();
        assert_eq!(h.boundary().len(), 4);
        assert!((h.area() - 1.0).abs() < 1e-15);
        assert!(h.is_ccw());
    }

    #[test]
    fn collinear_rejected() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        assert!(matches!(convex_hull(&pts), Err(HardyError::DegenerateInput(_))));
    }
}
