//! Symmetric triangle rules and recursive splitting toward singular features.

use std::sync::OnceLock;

/// Quadrature rule on a triangle in barycentric coordinates; weights sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64) -> [[f64; 3]; 3] {
    let b = 1.0 - 2.0 * a;
    [[a, a, b], [a, b, a], [b, a, a]]
}

impl TriRule {
    /// Dunavant rule exact for polynomials of the given degree (1, 2, 4 or 5;
    /// other requests round up, capped at 5).
    pub fn dunavant(degree: u32) -> TriRule {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut push = |a: f64, w: f64| {
            for p in orbit3(a) {
                points.push(p);
                weights.push(w);
            }
        };
        match degree {
            0 | 1 => {
                return TriRule { points: vec![[1.0 / 3.0; 3]], weights: vec![1.0] };
            }
            2 => push(1.0 / 6.0, 1.0 / 3.0),
            3 | 4 => {
                push(0.445_948_490_915_965, 0.223_381_589_678_011);
                push(0.091_576_213_509_771, 0.109_951_743_655_322);
            }
            _ => {
                let s = 15f64.sqrt();
                push((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
                push((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
                points.push([1.0 / 3.0; 3]);
                weights.push(0.225);
            }
        }
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        TriRule { points, weights }
    }
}

/// Which parts of an element lie on the singular set: vertex `k`, and edge `i`
/// (the edge opposite vertex `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Touch {
    pub vertices: [bool; 3],
    pub edges: [bool; 3],
}

impl Touch {
    fn code(&self) -> usize {
        (0..3).fold(0, |c, k| c | (usize::from(self.vertices[k]) << k) | (usize::from(self.edges[k]) << (k + 3)))
    }

    pub fn any(&self) -> bool {
        self.code() != 0
    }

    /// Whether the closure of a sub-triangle (barycentric corners) meets a feature.
    fn meets(&self, corners: &[[f64; 3]; 3]) -> bool {
        corners.iter().any(|c| (0..3).any(|k| (self.vertices[k] && c[k] == 1.0) || (self.edges[k] && c[k] == 0.0)))
    }
}

/// Quadrature node: barycentric position and weight as a fraction of the element area.
pub type Node = ([f64; 3], f64);

fn mid(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])]
}

fn split(rule: &TriRule, corners: [[f64; 3]; 3], frac: f64, depth: u32, touch: &Touch, out: &mut Vec<Node>) {
    if depth > 0 && touch.meets(&corners) {
        let [a, b, c] = corners;
        let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
        for sub in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]] {
            split(rule, sub, 0.25 * frac, depth - 1, touch, out);
        }
        return;
    }
    leaf(rule, &corners, frac, out);
}

fn leaf(rule: &TriRule, corners: &[[f64; 3]; 3], frac: f64, out: &mut Vec<Node>) {
    for (p, w) in rule.points.iter().zip(&rule.weights) {
        let mut x = [0.0; 3];
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = p[0] * corners[0][k] + p[1] * corners[1][k] + p[2] * corners[2][k];
        }
        out.push((x, w * frac));
    }
}

/// Layers `2^-(m+1) <= l_i <= 2^-m` parallel to the edge opposite vertex `i`,
/// each cut into two triangles, down to `l_i <= 2^-depth`.
fn strips(rule: &TriRule, i: usize, depth: u32, out: &mut Vec<Node>) {
    let (j, k) = ((i + 1) % 3, (i + 2) % 3);
    // point with l_i = s on the side joining vertex m to vertex i
    let at = |s: f64, m: usize| {
        let mut x = [0.0; 3];
        x[i] = s;
        x[m] = 1.0 - s;
        x
    };
    let frac = |c: &[[f64; 3]; 3]| {
        let det = c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
            + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0]);
        det.abs()
    };
    let mut apex = [0.0; 3];
    apex[i] = 1.0;
    let top = [apex, at(0.5, j), at(0.5, k)];
    leaf(rule, &top, frac(&top), out);
    let mut hi = 0.5;
    for level in 1..=depth {
        let lo = if level == depth { 0.0 } else { 0.5 * hi };
        let quad = [at(lo, j), at(lo, k), at(hi, k), at(hi, j)];
        for c in [[quad[0], quad[1], quad[2]], [quad[0], quad[2], quad[3]]] {
            leaf(rule, &c, frac(&c), out);
        }
        hi = lo;
    }
}

/// Node sets for every touch pattern at a fixed rule and split depth, built on demand.
#[derive(Debug)]
pub struct SplitQuadrature {
    rule: TriRule,
    depth: u32,
    cache: [OnceLock<Vec<Node>>; 64],
}

impl SplitQuadrature {
    pub fn new(degree: u32, depth: u32) -> Self {
        SplitQuadrature { rule: TriRule::dunavant(degree), depth, cache: std::array::from_fn(|_| OnceLock::new()) }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn nodes(&self, touch: &Touch) -> &[Node] {
        self.cache[touch.code()].get_or_init(|| {
            let mut out = Vec::new();
            let corners = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            // one singular edge and nothing at the opposite vertex: grade toward the edge only
            let lone_edge = match touch.edges {
                [true, false, false] => Some(0),
                [false, true, false] => Some(1),
                [false, false, true] => Some(2),
                _ => None,
            };
            match lone_edge {
                Some(i) if self.depth > 0 && !touch.vertices[i] => strips(&self.rule, i, self.depth, &mut out),
                _ => split(&self.rule, corners, 1.0, self.depth, touch, &mut out),
            }
            out
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_strips_match_isotropic_splitting() {
        let q = SplitQuadrature::new(4, 8);
        let t = Touch { vertices: [false, true, true], edges: [true, false, false] };
        let nodes = q.nodes(&t);
        for (i, j) in [(0, 0), (2, 1), (1, 3), (4, 0)] {
            let s: f64 = nodes.iter().map(|(b, w)| w * b[1].powi(i) * b[2].powi(j)).sum();
            assert!((s - monomial_exact(i as u32, j as u32)).abs() < 1e-13);
        }
        // mean of l_0 / (l_0 + e) stays accurate next to the edge
        let e = 1e-2f64;
        let exact = 1.0 - 2.0 * e * ((1.0 + e) * ((1.0 + e) / e).ln() - 1.0);
        let f = |ns: &[Node]| ns.iter().map(|(b, w)| w * b[0] / (b[0] + e)).sum::<f64>();
        let mut iso = Vec::new();
        split(&q.rule, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], 1.0, 8, &t, &mut iso);
        // as accurate as the isotropic split at a fraction of the nodes
        assert!((f(nodes) - exact).abs() <= 1.001 * (f(&iso) - exact).abs());
        assert!(nodes.len() * 50 < iso.len());
    }

    fn monomial_exact(i: u32, j: u32) -> f64 {
        // integral of x^i y^j over the reference triangle, divided by its area 1/2
        let f = |n: u32| (1..=n).map(f64::from).product::<f64>();
        2.0 * f(i) * f(j) / f(i + j + 2)
    }

    #[test]
    fn dunavant_exactness() {
        for deg in [1, 2, 4, 5] {
            let r = TriRule::dunavant(deg);
            assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            for i in 0..=deg {
                for j in 0..=(deg - i) {
                    let q: f64 = r.points.iter().zip(&r.weights).map(|(p, w)| w * p[1].powi(i as i32) * p[2].powi(j as i32)).sum();
                    assert!((q - monomial_exact(i, j)).abs() < 1e-12, "deg {deg} x^{i} y^{j}");
                }
            }
        }
    }

    #[test]
    fn split_weights_sum_to_one_and_nodes_avoid_features() {
        let q = SplitQuadrature::new(4, 6);
        let patterns = [
            Touch { vertices: [true, false, false], edges: [false; 3] },
            Touch { vertices: [false, true, true], edges: [true, false, false] },
            Touch { vertices: [true; 3], edges: [true, true, false] },
        ];
        for t in patterns {
            let nodes = q.nodes(&t);
            assert!((nodes.iter().map(|n| n.1).sum::<f64>() - 1.0).abs() < 1e-13);
            for (b, _) in nodes {
                assert!(b.iter().all(|&x| x > 0.0));
            }
        }
        assert_eq!(q.nodes(&Touch::default()).len(), 6);
        // an edge pattern uses two triangles per layer plus the apex triangle
        assert_eq!(q.nodes(&patterns[1]).len(), 6 * (2 * 6 + 1));
        // a vertex pattern refines one corner per level
        assert_eq!(q.nodes(&patterns[0]).len(), 6 * (3 * 6 + 1));
    }
}
