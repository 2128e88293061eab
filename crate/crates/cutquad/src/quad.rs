//! Reference 1D/2D quadrature rules, affine mapping of rules, rule
//! composition, and rule application to integrands.

use crate::{Error, Result};
use std::sync::OnceLock;

/// Largest supported number of Gauss points per direction.
pub const MAX_GAUSS_N: usize = 64;

/// A point in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

/// Axis-aligned rectangle given by its lower-left and upper-right corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point2 {
        Point2::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x0, self.y0),
            Point2::new(self.x1, self.y0),
            Point2::new(self.x1, self.y1),
            Point2::new(self.x0, self.y1),
        ]
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x0 && p.x <= self.x1 && p.y >= self.y0 && p.y <= self.y1
    }

    /// The four congruent sub-rectangles, in Morton order (SW, SE, NW, NE).
    pub fn quadrants(&self) -> [Rect; 4] {
        let c = self.center();
        [
            Rect::new(self.x0, self.y0, c.x, c.y),
            Rect::new(c.x, self.y0, self.x1, c.y),
            Rect::new(self.x0, c.y, c.x, self.y1),
            Rect::new(c.x, c.y, self.x1, self.y1),
        ]
    }
}

/// Tag recording which generator produced a rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Provenance {
    TensorGauss,
    Quadtree,
    Tessellate,
    MomentFitLagrange,
    HmfInterface,
    HmfVolume,
    Height,
    Green,
}

/// A quadrature rule in physical coordinates: points, weights (area-measure
/// units) and the method tag that produced it. Immutable after construction;
/// points and weights always have equal length and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<Point2>,
    weights: Vec<f64>,
    provenance: Provenance,
}

impl QuadratureRule {
    pub fn new(points: Vec<Point2>, weights: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "rule has {} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFiniteEval { x: p.x, y: p.y });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter("non-finite weight".into()));
        }
        Ok(Self {
            points,
            weights,
            provenance,
        })
    }

    pub fn empty(provenance: Provenance) -> Self {
        Self {
            points: Vec::new(),
            weights: Vec::new(),
            provenance,
        }
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Concatenates `other` onto this rule. Total weight sums add.
    pub fn concat(mut self, other: QuadratureRule) -> Self {
        self.points.extend_from_slice(&other.points);
        self.weights.extend_from_slice(&other.weights);
        self
    }

    pub(crate) fn push(&mut self, p: Point2, w: f64) {
        self.points.push(p);
        self.weights.push(w);
    }

    pub(crate) fn extend_from(&mut self, other: &QuadratureRule) {
        self.points.extend_from_slice(&other.points);
        self.weights.extend_from_slice(&other.weights);
    }

    /// Applies the rule to a scalar field: Σ wᵢ f(xᵢ). Empty rules give 0.
    pub fn integrate<F: Fn(Point2) -> f64>(&self, f: F) -> Result<f64> {
        let mut sum = 0.0;
        for (p, w) in self.points.iter().zip(&self.weights) {
            let v = f(*p);
            if !v.is_finite() {
                return Err(Error::NonFiniteEval { x: p.x, y: p.y });
            }
            sum += w * v;
        }
        Ok(sum)
    }
}

/// Applies `rule` to `f`; free-function form of [`QuadratureRule::integrate`].
pub fn integrate<F: Fn(Point2) -> f64>(rule: &QuadratureRule, f: F) -> Result<f64> {
    rule.integrate(f)
}

/// An invertible affine map x ↦ A·x + b with constant determinant.
#[derive(Debug, Clone, Copy)]
pub struct AffineMap2D {
    /// Row-major 2×2 linear part.
    pub linear: [[f64; 2]; 2],
    pub offset: Point2,
}

impl AffineMap2D {
    pub fn new(linear: [[f64; 2]; 2], offset: Point2) -> Result<Self> {
        let map = Self { linear, offset };
        if map.det() == 0.0 || !map.det().is_finite() {
            return Err(Error::InvalidParameter(
                "affine map determinant must be nonzero and finite".into(),
            ));
        }
        Ok(map)
    }

    /// Scaling + translation mapping the unit square [0,1]² onto `rect`.
    pub fn unit_to_rect(rect: Rect) -> Result<Self> {
        Self::new(
            [[rect.width(), 0.0], [0.0, rect.height()]],
            Point2::new(rect.x0, rect.y0),
        )
    }

    pub fn det(&self) -> f64 {
        self.linear[0][0] * self.linear[1][1] - self.linear[0][1] * self.linear[1][0]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        Point2::new(
            self.linear[0][0] * p.x + self.linear[0][1] * p.y + self.offset.x,
            self.linear[1][0] * p.x + self.linear[1][1] * p.y + self.offset.y,
        )
    }

    pub fn inverse(&self) -> Result<Self> {
        let d = self.det();
        let inv = [
            [self.linear[1][1] / d, -self.linear[0][1] / d],
            [-self.linear[1][0] / d, self.linear[0][0] / d],
        ];
        let off = Point2::new(
            -(inv[0][0] * self.offset.x + inv[0][1] * self.offset.y),
            -(inv[1][0] * self.offset.x + inv[1][1] * self.offset.y),
        );
        Self::new(inv, off)
    }
}

/// A 1D Gauss–Legendre rule on [−1, 1]: nodes strictly increasing and
/// symmetric about 0, weights positive and symmetric, Σweights = 2,
/// exact for monomials tᵐ with m ≤ 2n−1.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauss1D {
    n: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Gauss1D {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(t, w)| (mid + half * t, half * w))
    }

    /// Σᵢ wᵢ f(xᵢ) over [a, b].
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Legendre polynomial value and derivative at `t` by the three-term
/// recurrence.
fn legendre_pn(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    // P'_n from the stable identity (1−t²) P'_n = n (P_{n−1} − t P_n).
    let dp = if (1.0 - t * t).abs() > 1e-300 {
        n as f64 * (p0 - t * p1) / (1.0 - t * t)
    } else {
        0.0
    };
    (p1, dp)
}

fn compute_gauss(n: usize) -> Gauss1D {
    use std::f64::consts::PI;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n / 2;
    let nn = n as f64 + 0.5;
    for i in 0..half {
        // The i-th largest root lies in the Szegő interval
        // ((i+1/2)π/(n+1/2), (i+1)π/(n+1/2)) in θ with t = cos θ; start from
        // the cos-based guess at its midpoint and run Newton with a
        // bisection safeguard inside that bracket.
        let mut lo = (PI * (i as f64 + 1.0) / nn).cos();
        let mut hi = (PI * (i as f64 + 0.5) / nn).cos();
        let mut flo = legendre_pn(n, lo).0;
        let mut t = (PI * (i as f64 + 0.75) / nn).cos();
        for _ in 0..100 {
            let (v, dv) = legendre_pn(n, t);
            if v == 0.0 {
                break;
            }
            if (v > 0.0) == (flo > 0.0) {
                lo = t;
                flo = v;
            } else {
                hi = t;
            }
            let next = t - v / dv;
            let next = if next <= lo || next >= hi {
                0.5 * (lo + hi)
            } else {
                next
            };
            if (next - t).abs() <= 1e-15 {
                t = next;
                break;
            }
            t = next;
        }
        let (_, dv) = legendre_pn(n, t);
        let w = 2.0 / ((1.0 - t * t) * dv * dv);
        // Roots are enumerated from the largest downward; mirror them so the
        // node list comes out strictly increasing and exactly symmetric.
        nodes[i] = -t.abs();
        nodes[n - 1 - i] = t.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, dv) = legendre_pn(n, 0.0);
        nodes[half] = 0.0;
        weights[half] = 2.0 / (dv * dv);
    }
    Gauss1D { n, nodes, weights }
}

/// The n-point Gauss–Legendre rule on [−1, 1], computed by Newton iteration
/// on Legendre polynomials with a bisection safeguard (|residual| ≤ 1e-15)
/// and cached per order.
pub fn gauss_legendre(n: usize) -> Result<Gauss1D> {
    if n < 1 || n > MAX_GAUSS_N {
        return Err(Error::InvalidParameter(format!(
            "Gauss order {n} outside 1..={MAX_GAUSS_N}"
        )));
    }
    static CACHE: OnceLock<Vec<OnceLock<Gauss1D>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| (0..=MAX_GAUSS_N).map(|_| OnceLock::new()).collect());
    Ok(cache[n].get_or_init(|| compute_gauss(n)).clone())
}

/// Tensor-product Gauss rule with nx × ny points on an axis-aligned box.
/// Σweights = area(box); exact for bi-degree (2nx−1, 2ny−1) polynomials.
pub fn tensor_rule(nx: usize, ny: usize, bounds: Rect) -> Result<QuadratureRule> {
    if !(bounds.width() > 0.0 && bounds.height() > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box has non-positive side lengths ({} × {})",
            bounds.width(),
            bounds.height()
        )));
    }
    let gx = gauss_legendre(nx)?;
    let gy = gauss_legendre(ny)?;
    let mut points = Vec::with_capacity(nx * ny);
    let mut weights = Vec::with_capacity(nx * ny);
    for (y, wy) in gy.mapped(bounds.y0, bounds.y1) {
        for (x, wx) in gx.mapped(bounds.x0, bounds.x1) {
            points.push(Point2::new(x, y));
            weights.push(wx * wy);
        }
    }
    QuadratureRule::new(points, weights, Provenance::TensorGauss)
}

/// Maps each point through `map` and scales each weight by |det|.
pub fn map_rule(rule: &QuadratureRule, map: &AffineMap2D) -> Result<QuadratureRule> {
    let d = map.det().abs();
    if d == 0.0 {
        return Err(Error::InvalidParameter("zero determinant".into()));
    }
    let points = rule.points.iter().map(|p| map.apply(*p)).collect();
    let weights = rule.weights.iter().map(|w| w * d).collect();
    QuadratureRule::new(points, weights, rule.provenance)
}

/// An n×n rule on a triangle, built by collapsing a tensor rule through the
/// degenerate (Duffy) mapping. Σweights equals the triangle area; exact for
/// total degree ≥ n−1 (tessellation paths use n ≤ 3).
pub fn triangle_rule(n: usize, vertices: [Point2; 3]) -> Result<QuadratureRule> {
    let [a, b, c] = vertices;
    let signed2 = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if signed2.abs() * 0.5 <= 1e-300 {
        return Err(Error::DegenerateGeometry(format!(
            "collinear triangle vertices ({}, {}), ({}, {}), ({}, {})",
            a.x, a.y, b.x, b.y, c.x, c.y
        )));
    }
    let g = gauss_legendre(n)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    // Duffy collapse: (u, v) in [0,1]² → (u, v(1−u)) on the reference
    // triangle, then affine onto the given vertices.
    for (u, wu) in g.mapped(0.0, 1.0) {
        for (v, wv) in g.mapped(0.0, 1.0) {
            let xi = u;
            let eta = v * (1.0 - u);
            let jac = 1.0 - u;
            let p = Point2::new(
                a.x + (b.x - a.x) * xi + (c.x - a.x) * eta,
                a.y + (b.y - a.y) * xi + (c.y - a.y) * eta,
            );
            points.push(p);
            weights.push(wu * wv * jac * signed2.abs());
        }
    }
    QuadratureRule::new(points, weights, Provenance::TensorGauss)
}
