//! Boundary representations (implicit level sets and parametric Bézier
//! chains), element classification, background Cartesian meshes, and the
//! built-in test-case catalog with analytic reference values.
//!
//! Sign convention everywhere: the active region is {x : φ(x) ≤ 0}.

use crate::poly::{find_roots_1d, Poly1D, Poly2D, RationalBezier};
use crate::quad::{Point2, Rect};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

/// Number of equispaced samples used when restricting a level set to a line.
pub(crate) const EDGE_ROOT_SAMPLES: usize = 32;

/// Shape tag of a level-set descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTag {
    Polynomial,
    ComposedMin,
    ComposedMax,
    Generic,
}

type FieldFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;

#[derive(Clone)]
enum LevelSetForm {
    Polynomial {
        f: Poly2D,
        fx: Poly2D,
        fy: Poly2D,
    },
    Min(Vec<LevelSet>),
    Max(Vec<LevelSet>),
    Generic {
        f: FieldFn,
        grad: GradFn,
    },
}

/// Implicit boundary descriptor φ with gradient. Active region = {φ ≤ 0}.
#[derive(Clone)]
pub struct LevelSet {
    form: LevelSetForm,
}

impl std::fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LevelSet({:?})", self.form_tag())
    }
}

impl LevelSet {
    pub fn polynomial(f: Poly2D) -> Self {
        let fx = f.partial_x();
        let fy = f.partial_y();
        Self {
            form: LevelSetForm::Polynomial { f, fx, fy },
        }
    }

    /// min-composition: active where any child is active (union).
    pub fn min_of(children: Vec<LevelSet>) -> Self {
        Self {
            form: LevelSetForm::Min(children),
        }
    }

    /// max-composition: active where all children are active (intersection).
    pub fn max_of(children: Vec<LevelSet>) -> Self {
        Self {
            form: LevelSetForm::Max(children),
        }
    }

    pub fn generic(
        f: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        grad: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    ) -> Self {
        Self {
            form: LevelSetForm::Generic {
                f: Arc::new(f),
                grad: Arc::new(grad),
            },
        }
    }

    pub fn form_tag(&self) -> FormTag {
        match &self.form {
            LevelSetForm::Polynomial { .. } => FormTag::Polynomial,
            LevelSetForm::Min(_) => FormTag::ComposedMin,
            LevelSetForm::Max(_) => FormTag::ComposedMax,
            LevelSetForm::Generic { .. } => FormTag::Generic,
        }
    }

    /// Polynomial coefficient access for export; `None` for composed or
    /// generic forms.
    pub fn as_polynomial(&self) -> Option<&Poly2D> {
        match &self.form {
            LevelSetForm::Polynomial { f, .. } => Some(f),
            _ => None,
        }
    }

    pub fn children(&self) -> Option<&[LevelSet]> {
        match &self.form {
            LevelSetForm::Min(c) | LevelSetForm::Max(c) => Some(c),
            _ => None,
        }
    }

    pub fn value(&self, p: Point2) -> f64 {
        match &self.form {
            LevelSetForm::Polynomial { f, .. } => f.eval(p),
            LevelSetForm::Min(c) => c
                .iter()
                .map(|ls| ls.value(p))
                .fold(f64::INFINITY, f64::min),
            LevelSetForm::Max(c) => c
                .iter()
                .map(|ls| ls.value(p))
                .fold(f64::NEG_INFINITY, f64::max),
            LevelSetForm::Generic { f, .. } => f(p),
        }
    }

    /// ∇φ; for min/max compositions the gradient of the selected branch.
    pub fn gradient(&self, p: Point2) -> Point2 {
        match &self.form {
            LevelSetForm::Polynomial { fx, fy, .. } => Point2::new(fx.eval(p), fy.eval(p)),
            LevelSetForm::Min(c) => {
                let best = c
                    .iter()
                    .min_by(|a, b| a.value(p).partial_cmp(&b.value(p)).unwrap())
                    .expect("min composition needs children");
                best.gradient(p)
            }
            LevelSetForm::Max(c) => {
                let best = c
                    .iter()
                    .max_by(|a, b| a.value(p).partial_cmp(&b.value(p)).unwrap())
                    .expect("max composition needs children");
                best.gradient(p)
            }
            LevelSetForm::Generic { grad, .. } => grad(p),
        }
    }
}

/// Cell state relative to the active region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Inside,
    Outside,
    Cut,
}

/// Classifies a cell by evaluating φ on a grid×grid tensor sample including
/// the corners: all ≤ 0 → Inside, all > 0 → Outside, mixed → Cut.
pub fn classify_cell(ls: &LevelSet, cell: Rect, grid: usize) -> Result<Classification> {
    if grid < 2 {
        return Err(Error::InvalidParameter(
            "classification grid must be at least 2".into(),
        ));
    }
    let mut any_active = false;
    let mut any_void = false;
    for i in 0..grid {
        let x = cell.x0 + cell.width() * (i as f64 / (grid - 1) as f64);
        for j in 0..grid {
            let y = cell.y0 + cell.height() * (j as f64 / (grid - 1) as f64);
            let v = ls.value(Point2::new(x, y));
            if !v.is_finite() {
                return Err(Error::NonFiniteEval { x, y });
            }
            if v <= 0.0 {
                any_active = true;
            } else {
                any_void = true;
            }
            if any_active && any_void {
                return Ok(Classification::Cut);
            }
        }
    }
    Ok(if any_active {
        Classification::Inside
    } else {
        Classification::Outside
    })
}

/// Sorted root parameters (arclength fraction in [0,1], increasing
/// coordinate) of φ restricted to each cell edge.
#[derive(Debug, Clone, Default)]
pub struct EdgeRoots {
    pub bottom: Vec<f64>,
    pub right: Vec<f64>,
    pub top: Vec<f64>,
    pub left: Vec<f64>,
}

pub fn edge_roots(ls: &LevelSet, cell: Rect) -> Result<EdgeRoots> {
    let on_edge = |p0: Point2, p1: Point2| {
        find_roots_1d(
            |t| ls.value(Point2::new(p0.x + (p1.x - p0.x) * t, p0.y + (p1.y - p0.y) * t)),
            0.0,
            1.0,
            EDGE_ROOT_SAMPLES,
        )
    };
    Ok(EdgeRoots {
        bottom: on_edge(Point2::new(cell.x0, cell.y0), Point2::new(cell.x1, cell.y0))?,
        right: on_edge(Point2::new(cell.x1, cell.y0), Point2::new(cell.x1, cell.y1))?,
        top: on_edge(Point2::new(cell.x0, cell.y1), Point2::new(cell.x1, cell.y1))?,
        left: on_edge(Point2::new(cell.x0, cell.y0), Point2::new(cell.x0, cell.y1))?,
    })
}

/// Ordered rational Bézier segments describing a closed, counterclockwise
/// boundary of the active region.
#[derive(Debug, Clone)]
pub struct BoundaryChain {
    segments: Vec<RationalBezier>,
}

impl BoundaryChain {
    pub fn new(segments: Vec<RationalBezier>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::Geometry("chain has no segments".into()));
        }
        for (i, seg) in segments.iter().enumerate() {
            let next = &segments[(i + 1) % segments.len()];
            let gap = (seg.end() - next.start()).norm();
            if gap > 1e-12 {
                return Err(Error::Geometry(format!(
                    "chain not closed: segment {i} ends {gap:.3e} away from the next start"
                )));
            }
        }
        let chain = Self { segments };
        if chain.sampled_signed_area() <= 0.0 {
            return Err(Error::Geometry(
                "chain orientation must be counterclockwise".into(),
            ));
        }
        Ok(chain)
    }

    pub fn segments(&self) -> &[RationalBezier] {
        &self.segments
    }

    /// Shoelace area of a dense polyline sampling; positive for
    /// counterclockwise chains.
    pub fn sampled_signed_area(&self) -> f64 {
        const K: usize = 16;
        let mut area = 0.0;
        let mut prev: Option<Point2> = None;
        let mut first: Option<Point2> = None;
        for seg in &self.segments {
            for k in 0..K {
                let s = k as f64 / K as f64;
                let (p, _) = seg.eval(s).expect("parameter in range");
                if let Some(q) = prev {
                    area += q.x * p.y - p.x * q.y;
                } else {
                    first = Some(p);
                }
                prev = Some(p);
            }
        }
        if let (Some(q), Some(p)) = (prev, first) {
            area += q.x * p.y - p.x * q.y;
        }
        0.5 * area
    }

    /// Point-in-region test by ray casting against the exact curve segments
    /// (crossing parity of the rightward horizontal ray).
    pub fn contains(&self, p: Point2) -> Result<bool> {
        let mut crossings = 0usize;
        for seg in &self.segments {
            // Roots of the homogeneous ordinate numerator Σ Bᵢ wᵢ (yᵢ − p.y).
            let vals: Vec<f64> = seg
                .control_points()
                .iter()
                .zip(seg.weights())
                .map(|(c, w)| w * (c.y - p.y))
                .collect();
            let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if scale == 0.0 {
                continue; // segment lies on the ray line
            }
            let eval = |s: f64| {
                let mut v = vals.clone();
                while v.len() > 1 {
                    for i in 0..v.len() - 1 {
                        v[i] += s * (v[i + 1] - v[i]);
                    }
                    v.pop();
                }
                v[0]
            };
            let roots = find_roots_1d(eval, 0.0, 1.0, EDGE_ROOT_SAMPLES)?;
            for s in roots {
                // A junction root appears at s=1 here and s=0 on the next
                // segment; count it once.
                if s >= 1.0 - 1e-9 {
                    continue;
                }
                let (q, _) = seg.eval(s)?;
                if q.x > p.x {
                    crossings += 1;
                }
            }
        }
        Ok(crossings % 2 == 1)
    }
}

/// Uniform Cartesian background mesh over a rectangular domain.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundMesh {
    pub domain: Rect,
    pub nx: usize,
    pub ny: usize,
}

impl BackgroundMesh {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidParameter(
                "mesh needs at least one cell per direction".into(),
            ));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) {
            return Err(Error::InvalidParameter("degenerate mesh domain".into()));
        }
        Ok(Self { domain, nx, ny })
    }

    pub fn cell(&self, i: usize, j: usize) -> Rect {
        let fx = |k: usize| self.domain.x0 + self.domain.width() * (k as f64 / self.nx as f64);
        let fy = |k: usize| self.domain.y0 + self.domain.height() * (k as f64 / self.ny as f64);
        Rect::new(fx(i), fy(j), fx(i + 1), fy(j + 1))
    }

    pub fn cells(&self) -> impl Iterator<Item = Rect> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| self.cell(i, j)))
    }
}

/// Analytic description of an active region, used by the reference oracle.
#[derive(Debug, Clone)]
pub enum RegionKind {
    /// Union of vertical strips bounded below/above by polynomial graphs.
    GraphStrips(Vec<GraphStrip>),
    Disk { center: Point2, radius: f64 },
}

/// One strip {(x, y) : xa ≤ x ≤ xb, lower(x) ≤ y ≤ upper(x)}.
#[derive(Debug, Clone)]
pub struct GraphStrip {
    pub xa: f64,
    pub xb: f64,
    pub lower: Poly1D,
    pub upper: Poly1D,
}

/// A catalog entry: implicit form, optional parametric form, and reference
/// integrals computed by the oracle (≥ 17 significant digits when exported).
#[derive(Debug, Clone)]
pub struct TestCase {
    pub id: String,
    pub level_set: LevelSet,
    pub chain: Option<BoundaryChain>,
    pub domain: Rect,
    pub curve_degree: u32,
    pub reference_area: f64,
    pub reference_monomials: BTreeMap<u32, f64>,
    pub active_bbox: Rect,
    /// Analytic region used by the oracle; absent on imported cases.
    pub region: Option<RegionKind>,
}

impl TestCase {
    /// Stored reference value for the degree-q scaled monomial.
    pub fn reference(&self, q: u32) -> Option<f64> {
        if q == 0 {
            Some(self.reference_area)
        } else {
            self.reference_monomials.get(&q).copied()
        }
    }

    fn with_level_set(mut self, ls: LevelSet) -> Self {
        self.level_set = ls;
        self
    }
}

/// The scaled monomial f̃(x,y) = ((x−x₀)/Δx)^q ((y−y₀)/Δy)^q on the case's
/// active-region bounding box. q = 0 is the constant 1.
pub fn scaled_monomial(tc: &TestCase, q: u32) -> impl Fn(Point2) -> f64 + Send + Sync + 'static {
    let b = tc.active_bbox;
    move |p: Point2| {
        if q == 0 {
            return 1.0;
        }
        let u = (p.x - b.x0) / b.width();
        let v = (p.y - b.y0) / b.height();
        (u * v).powi(q as i32)
    }
}

/// Highest monomial degree with stored reference values.
pub const MAX_REFERENCE_DEGREE: u32 = 6;

fn binomial(n: usize, k: usize) -> f64 {
    let mut b = 1.0;
    for i in 0..k {
        b = b * (n - i) as f64 / (i + 1) as f64;
    }
    b
}

/// Degree-n Bézier segment tracing the polynomial graph y = g(x) from
/// x_from to x_to. The x control ordinates are equispaced; the y control
/// values come from the power→Bernstein conversion of g(x(s)).
pub(crate) fn graph_segment(g: &Poly1D, x_from: f64, x_to: f64) -> Result<RationalBezier> {
    let y_of_s = g.compose_affine(x_to - x_from, x_from);
    let n = (y_of_s.coeffs().len().max(2) - 1).max(1);
    let mut a = y_of_s.coeffs().to_vec();
    a.resize(n + 1, 0.0);
    let mut control = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut y = 0.0;
        for (k, ak) in a.iter().enumerate().take(i + 1) {
            y += binomial(i, k) / binomial(n, k) * ak;
        }
        let x = x_from + (x_to - x_from) * (i as f64 / n as f64);
        control.push(Point2::new(x, y));
    }
    RationalBezier::polynomial(control)
}

fn line(ax: f64, ay: f64, bx: f64, by: f64) -> RationalBezier {
    RationalBezier::line(Point2::new(ax, ay), Point2::new(bx, by)).expect("valid line")
}

fn poly2d_from_graph(g: &Poly1D) -> Poly2D {
    // φ(x, y) = y − g(x)
    let mut f = Poly2D::monomial(0, 1, 1.0);
    for (i, c) in g.coeffs().iter().enumerate() {
        f = f.add(&Poly2D::monomial(i, 0, -c));
    }
    f
}

/// The quintic boundary of case3: 0.6 + 0.4·s(x/0.8) with s the quintic
/// smoothstep; rises from (0, 0.6) to (0.8, 1) with an inflection at x = 0.4
/// and stays ≥ 1 on [0.8, 1].
fn case3_boundary() -> Poly1D {
    Poly1D::new(vec![0.6, 0.0, 0.0, 7.8125, -14.6484375, 7.32421875])
}

const UNIT: Rect = Rect::new(0.0, 0.0, 1.0, 1.0);

fn build_case1() -> TestCase {
    let g = Poly1D::new(vec![0.2, 0.6]);
    let chain = BoundaryChain::new(vec![
        line(0.0, 0.0, 1.0, 0.0),
        line(1.0, 0.0, 1.0, 0.8),
        line(1.0, 0.8, 0.0, 0.2),
        line(0.0, 0.2, 0.0, 0.0),
    ])
    .expect("case1 chain");
    let region = RegionKind::GraphStrips(vec![GraphStrip {
        xa: 0.0,
        xb: 1.0,
        lower: Poly1D::zero(),
        upper: g.clone(),
    }]);
    finish_case(
        "case1",
        poly2d_from_graph(&g),
        Some(chain),
        1,
        region,
        Rect::new(0.0, 0.0, 1.0, 0.8),
    )
}

fn build_case2() -> TestCase {
    let g = Poly1D::new(vec![0.15, 0.5, 0.3]);
    let curve = graph_segment(&g, 1.0, 0.0).expect("case2 curve");
    let chain = BoundaryChain::new(vec![
        line(0.0, 0.0, 1.0, 0.0),
        line(1.0, 0.0, 1.0, 0.95),
        curve,
        line(0.0, 0.15, 0.0, 0.0),
    ])
    .expect("case2 chain");
    let region = RegionKind::GraphStrips(vec![GraphStrip {
        xa: 0.0,
        xb: 1.0,
        lower: Poly1D::zero(),
        upper: g.clone(),
    }]);
    finish_case(
        "case2",
        poly2d_from_graph(&g),
        Some(chain),
        2,
        region,
        Rect::new(0.0, 0.0, 1.0, 0.95),
    )
}

fn build_case3() -> TestCase {
    let g = case3_boundary();
    let curve = graph_segment(&g, 0.8, 0.0).expect("case3 curve");
    let chain = BoundaryChain::new(vec![
        line(0.0, 0.0, 1.0, 0.0),
        line(1.0, 0.0, 1.0, 1.0),
        line(1.0, 1.0, 0.8, 1.0),
        curve,
        line(0.0, 0.6, 0.0, 0.0),
    ])
    .expect("case3 chain");
    let region = RegionKind::GraphStrips(vec![
        GraphStrip {
            xa: 0.0,
            xb: 0.8,
            lower: Poly1D::zero(),
            upper: g.clone(),
        },
        GraphStrip {
            xa: 0.8,
            xb: 1.0,
            lower: Poly1D::zero(),
            upper: Poly1D::constant(1.0),
        },
    ]);
    finish_case("case3", poly2d_from_graph(&g), Some(chain), 5, region, UNIT)
}

fn build_disk() -> TestCase {
    let (cx, cy, r) = (0.5, 0.5, 0.4);
    // (x−cx)² + (y−cy)² − r²
    let mut f = Poly2D::monomial(2, 0, 1.0);
    f = f.add(&Poly2D::monomial(0, 2, 1.0));
    f = f.add(&Poly2D::monomial(1, 0, -2.0 * cx));
    f = f.add(&Poly2D::monomial(0, 1, -2.0 * cy));
    f = f.add(&Poly2D::constant(cx * cx + cy * cy - r * r));
    let w = std::f64::consts::FRAC_1_SQRT_2;
    let arc = |p0: Point2, pm: Point2, p1: Point2| {
        RationalBezier::new(vec![p0, pm, p1], vec![1.0, w, 1.0]).expect("arc")
    };
    let chain = BoundaryChain::new(vec![
        arc(
            Point2::new(cx + r, cy),
            Point2::new(cx + r, cy + r),
            Point2::new(cx, cy + r),
        ),
        arc(
            Point2::new(cx, cy + r),
            Point2::new(cx - r, cy + r),
            Point2::new(cx - r, cy),
        ),
        arc(
            Point2::new(cx - r, cy),
            Point2::new(cx - r, cy - r),
            Point2::new(cx, cy - r),
        ),
        arc(
            Point2::new(cx, cy - r),
            Point2::new(cx + r, cy - r),
            Point2::new(cx + r, cy),
        ),
    ])
    .expect("disk chain");
    let region = RegionKind::Disk {
        center: Point2::new(cx, cy),
        radius: r,
    };
    finish_case(
        "disk",
        f,
        Some(chain),
        2,
        region,
        Rect::new(cx - r, cy - r, cx + r, cy + r),
    )
}

/// Lower and upper parabola bounds of the `parabolas(s)` active region.
fn parabola_bounds(shift: f64) -> (Poly1D, Poly1D) {
    // lower: 1.6(x−s)² + 0.15, upper: 0.85 − 1.6(x−s−0.1)²
    let lower = Poly1D::new(vec![1.6 * shift * shift + 0.15, -3.2 * shift, 1.6]);
    let t = shift + 0.1;
    let upper = Poly1D::new(vec![0.85 - 1.6 * t * t, 3.2 * t, -1.6]);
    (lower, upper)
}

/// The shifted intersected-parabolas case: active region
/// {1.6(x−s)² + 0.15 ≤ y ≤ 0.85 − 1.6(x−s−0.1)²} via φ = max(φ₁, φ₂).
/// Implicit form only.
pub fn parabolas(shift: f64) -> Result<TestCase> {
    if !(0.0..=0.9).contains(&shift) {
        return Err(Error::InvalidParameter(format!(
            "parabola shift {shift} outside [0, 0.9]"
        )));
    }
    let (lower, upper) = parabola_bounds(shift);
    // φ₁ = lower(x) − y (active above the lower parabola)
    let phi1 = {
        let mut f = Poly2D::monomial(0, 1, -1.0);
        for (i, c) in lower.coeffs().iter().enumerate() {
            f = f.add(&Poly2D::monomial(i, 0, *c));
        }
        f
    };
    // φ₂ = y − upper(x)
    let phi2 = poly2d_from_graph(&upper);
    let ls = LevelSet::max_of(vec![LevelSet::polynomial(phi1), LevelSet::polynomial(phi2)]);
    // Intersection abscissae: lower(x) = upper(x).
    let diff = upper.add(&lower.scale(-1.0));
    let roots = find_roots_1d(|x| diff.eval(x), shift - 1.0, shift + 1.0, 257)?;
    if roots.len() != 2 {
        return Err(Error::Geometry(format!(
            "expected 2 parabola intersections, found {}",
            roots.len()
        )));
    }
    let xa = roots[0].max(0.0);
    let xb = roots[1].min(1.0);
    let region = RegionKind::GraphStrips(vec![GraphStrip {
        xa,
        xb,
        lower,
        upper,
    }]);
    let bbox = Rect::new(xa, 0.15, xb, 0.85);
    Ok(finish_case("parabolas", Poly2D::zero(), None, 2, region, bbox).with_level_set(ls))
}

fn finish_case(
    id: &str,
    phi: Poly2D,
    chain: Option<BoundaryChain>,
    degree: u32,
    region: RegionKind,
    bbox: Rect,
) -> TestCase {
    let mut tc = TestCase {
        id: id.to_string(),
        level_set: LevelSet::polynomial(phi),
        chain,
        domain: UNIT,
        curve_degree: degree,
        reference_area: 0.0,
        reference_monomials: BTreeMap::new(),
        active_bbox: bbox,
        region: Some(region),
    };
    tc.reference_area = crate::bench::oracle_integral(&tc, 0).expect("area oracle");
    for q in 0..=MAX_REFERENCE_DEGREE {
        let v = crate::bench::oracle_integral(&tc, q).expect("monomial oracle");
        tc.reference_monomials.insert(q, v);
    }
    tc
}

/// The built-in test cases: case1 (linear cut), case2 (quadratic cut),
/// case3 (quintic five-sided), disk, and parabolas at its starting shift
/// 0.10. Constructed once and cached.
pub fn catalog() -> &'static [TestCase] {
    static CATALOG: OnceLock<Vec<TestCase>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        vec![
            build_case1(),
            build_case2(),
            build_case3(),
            build_disk(),
            parabolas(0.10).expect("parabolas case"),
        ]
    })
}

/// Looks up a catalog entry by id.
pub fn test_case(id: &str) -> Result<&'static TestCase> {
    catalog().iter().find(|tc| tc.id == id).ok_or_else(|| {
        let ids: Vec<&str> = catalog().iter().map(|tc| tc.id.as_str()).collect();
        Error::UnknownId(format!("case '{id}'; valid cases: {}", ids.join(", ")))
    })
}

/// Radical-inverse Halton value for `index` in the given base.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Checks that the implicit and parametric forms classify the same:
/// winding-number membership agrees with sign(φ) on `samples` Halton points,
/// excluding points within 1e-10 of the boundary (distance estimated as
/// |φ|/|∇φ|).
pub fn check_form_agreement(tc: &TestCase, samples: usize) -> Result<()> {
    let Some(chain) = &tc.chain else {
        return Ok(());
    };
    for k in 0..samples {
        let p = Point2::new(
            tc.domain.x0 + tc.domain.width() * halton(k as u64 + 1, 2),
            tc.domain.y0 + tc.domain.height() * halton(k as u64 + 1, 3),
        );
        let phi = tc.level_set.value(p);
        let grad_norm = tc.level_set.gradient(p).norm().max(1e-8);
        if phi.abs() / grad_norm <= 1e-10 {
            continue;
        }
        let implicit_inside = phi <= 0.0;
        let parametric_inside = chain.contains(p)?;
        if implicit_inside != parametric_inside {
            return Err(Error::Geometry(format!(
                "case {}: forms disagree at ({}, {}) (φ = {phi:.3e})",
                tc.id, p.x, p.y
            )));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Catalog export/import.
//
// Line-oriented text format, one record per case:
//
//   cutquad-catalog 1
//   case <id>
//   degree <p>
//   domain <x0> <y0> <x1> <y1>
//   bbox <x0> <y0> <x1> <y1>
//   levelset poly <rows> <cols>      (or: levelset max <k> / levelset min <k>,
//   <row-major coefficients>          followed by k nested poly blocks)
//   chain <n-segments>                (omitted when no parametric form)
//   segment <n-control-points>
//   cp <x> <y> <w>
//   ref area <value>
//   ref monomial <q> <value>
//   end
//
// All reals are written with 17 significant digits.

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_poly(out: &mut String, p: &Poly2D) {
    let rows = p.coeffs().len().max(1);
    let cols = p.coeffs().first().map_or(1, |r| r.len().max(1));
    out.push_str(&format!("levelset poly {rows} {cols}\n"));
    for i in 0..rows {
        let row: Vec<String> = (0..cols).map(|j| fmt_f(p.coeff(i, j))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

fn write_level_set(out: &mut String, ls: &LevelSet) -> Result<()> {
    match ls.form_tag() {
        FormTag::Polynomial => {
            write_poly(out, ls.as_polynomial().unwrap());
            Ok(())
        }
        FormTag::ComposedMax | FormTag::ComposedMin => {
            let children = ls.children().unwrap();
            let kind = if ls.form_tag() == FormTag::ComposedMax {
                "max"
            } else {
                "min"
            };
            out.push_str(&format!("levelset {kind} {}\n", children.len()));
            for child in children {
                let p = child.as_polynomial().ok_or_else(|| {
                    Error::UnsupportedCase("nested composed level sets are not exportable".into())
                })?;
                write_poly(out, p);
            }
            Ok(())
        }
        FormTag::Generic => Err(Error::UnsupportedCase(
            "generic level sets are not exportable".into(),
        )),
    }
}

/// Serializes catalog entries to the structured text format.
pub fn catalog_to_string(cases: &[TestCase]) -> Result<String> {
    let mut out = String::from("cutquad-catalog 1\n");
    for tc in cases {
        out.push_str(&format!("case {}\n", tc.id));
        out.push_str(&format!("degree {}\n", tc.curve_degree));
        out.push_str(&format!(
            "domain {} {} {} {}\n",
            fmt_f(tc.domain.x0),
            fmt_f(tc.domain.y0),
            fmt_f(tc.domain.x1),
            fmt_f(tc.domain.y1)
        ));
        out.push_str(&format!(
            "bbox {} {} {} {}\n",
            fmt_f(tc.active_bbox.x0),
            fmt_f(tc.active_bbox.y0),
            fmt_f(tc.active_bbox.x1),
            fmt_f(tc.active_bbox.y1)
        ));
        write_level_set(&mut out, &tc.level_set)?;
        if let Some(chain) = &tc.chain {
            out.push_str(&format!("chain {}\n", chain.segments().len()));
            for seg in chain.segments() {
                out.push_str(&format!("segment {}\n", seg.control_points().len()));
                for (c, w) in seg.control_points().iter().zip(seg.weights()) {
                    out.push_str(&format!("cp {} {} {}\n", fmt_f(c.x), fmt_f(c.y), fmt_f(*w)));
                }
            }
        }
        out.push_str(&format!("ref area {}\n", fmt_f(tc.reference_area)));
        for (q, v) in &tc.reference_monomials {
            out.push_str(&format!("ref monomial {q} {}\n", fmt_f(*v)));
        }
        out.push_str("end\n");
    }
    Ok(out)
}

struct LineParser<'a> {
    lines: std::iter::Peekable<std::str::Lines<'a>>,
    lineno: usize,
}

impl<'a> LineParser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().peekable(),
            lineno: 0,
        }
    }

    fn next_line(&mut self) -> Result<&'a str> {
        loop {
            let line = self
                .lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of catalog file".into()))?;
            self.lineno += 1;
            let line = line.trim();
            if !line.is_empty() {
                return Ok(line);
            }
        }
    }

    fn peek(&mut self) -> Option<&'a str> {
        while let Some(line) = self.lines.peek() {
            if line.trim().is_empty() {
                self.lines.next();
                self.lineno += 1;
            } else {
                return Some(line.trim());
            }
        }
        None
    }

    fn err(&self, msg: impl std::fmt::Display) -> Error {
        Error::Parse(format!("line {}: {msg}", self.lineno))
    }
}

fn parse_floats(p: &LineParser, parts: &[&str], n: usize) -> Result<Vec<f64>> {
    if parts.len() != n {
        return Err(p.err(format!("expected {n} values, found {}", parts.len())));
    }
    parts
        .iter()
        .map(|s| {
            s.parse::<f64>()
                .map_err(|e| p.err(format!("bad float '{s}': {e}")))
        })
        .collect()
}

fn parse_poly(p: &mut LineParser, rows: usize, cols: usize) -> Result<Poly2D> {
    let mut coeffs = Vec::with_capacity(rows);
    for _ in 0..rows {
        let line = p.next_line()?;
        let parts: Vec<&str> = line.split_whitespace().collect();
        coeffs.push(parse_floats(p, &parts, cols)?);
    }
    Ok(Poly2D::new(coeffs))
}

fn parse_level_set(p: &mut LineParser) -> Result<LevelSet> {
    let line = p.next_line()?;
    let parts: Vec<&str> = line.split_whitespace().collect();
    match parts.as_slice() {
        ["levelset", "poly", rows, cols] => {
            let rows: usize = rows.parse().map_err(|e| p.err(e))?;
            let cols: usize = cols.parse().map_err(|e| p.err(e))?;
            Ok(LevelSet::polynomial(parse_poly(p, rows, cols)?))
        }
        ["levelset", kind @ ("max" | "min"), k] => {
            let k: usize = k.parse().map_err(|e| p.err(e))?;
            let is_max = *kind == "max";
            let mut children = Vec::with_capacity(k);
            for _ in 0..k {
                let line = p.next_line()?;
                let parts: Vec<&str> = line.split_whitespace().collect();
                let ["levelset", "poly", rows, cols] = parts.as_slice() else {
                    return Err(p.err("expected nested 'levelset poly' block"));
                };
                let rows: usize = rows.parse().map_err(|e| p.err(e))?;
                let cols: usize = cols.parse().map_err(|e| p.err(e))?;
                children.push(LevelSet::polynomial(parse_poly(p, rows, cols)?));
            }
            Ok(if is_max {
                LevelSet::max_of(children)
            } else {
                LevelSet::min_of(children)
            })
        }
        _ => Err(p.err(format!("expected levelset header, found '{line}'"))),
    }
}

/// Parses a catalog file produced by [`catalog_to_string`]. Imported cases
/// carry their stored reference values but no analytic region descriptor.
pub fn catalog_from_str(text: &str) -> Result<Vec<TestCase>> {
    let mut p = LineParser::new(text);
    let header = p.next_line()?;
    if header != "cutquad-catalog 1" {
        return Err(p.err(format!("unrecognized header '{header}'")));
    }
    let mut cases = Vec::new();
    while p.peek().is_some() {
        let line = p.next_line()?;
        let Some(id) = line.strip_prefix("case ") else {
            return Err(p.err(format!("expected 'case <id>', found '{line}'")));
        };
        let id = id.trim().to_string();

        let line = p.next_line()?;
        let degree: u32 = line
            .strip_prefix("degree ")
            .ok_or_else(|| p.err("expected 'degree'"))?
            .trim()
            .parse()
            .map_err(|e| p.err(e))?;

        let line = p.next_line()?;
        let parts: Vec<&str> = line
            .strip_prefix("domain ")
            .ok_or_else(|| p.err("expected 'domain'"))?
            .split_whitespace()
            .collect();
        let d = parse_floats(&p, &parts, 4)?;
        let domain = Rect::new(d[0], d[1], d[2], d[3]);

        let line = p.next_line()?;
        let parts: Vec<&str> = line
            .strip_prefix("bbox ")
            .ok_or_else(|| p.err("expected 'bbox'"))?
            .split_whitespace()
            .collect();
        let b = parse_floats(&p, &parts, 4)?;
        let bbox = Rect::new(b[0], b[1], b[2], b[3]);

        let level_set = parse_level_set(&mut p)?;

        let mut chain = None;
        if let Some(line) = p.peek() {
            if let Some(n) = line.strip_prefix("chain ") {
                let n: usize = n.trim().parse().map_err(|e| p.err(e))?;
                p.next_line()?;
                let mut segments = Vec::with_capacity(n);
                for _ in 0..n {
                    let line = p.next_line()?;
                    let k: usize = line
                        .strip_prefix("segment ")
                        .ok_or_else(|| p.err("expected 'segment'"))?
                        .trim()
                        .parse()
                        .map_err(|e| p.err(e))?;
                    let mut control = Vec::with_capacity(k);
                    let mut weights = Vec::with_capacity(k);
                    for _ in 0..k {
                        let line = p.next_line()?;
                        let parts: Vec<&str> = line
                            .strip_prefix("cp ")
                            .ok_or_else(|| p.err("expected 'cp'"))?
                            .split_whitespace()
                            .collect();
                        let v = parse_floats(&p, &parts, 3)?;
                        control.push(Point2::new(v[0], v[1]));
                        weights.push(v[2]);
                    }
                    segments.push(RationalBezier::new(control, weights)?);
                }
                chain = Some(BoundaryChain::new(segments)?);
            }
        }

        let mut reference_area = f64::NAN;
        let mut reference_monomials = BTreeMap::new();
        loop {
            let line = p.next_line()?;
            if line == "end" {
                break;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["ref", "area", v] => {
                    reference_area = v.parse().map_err(|e| p.err(e))?;
                }
                ["ref", "monomial", q, v] => {
                    reference_monomials.insert(
                        q.parse().map_err(|e| p.err(e))?,
                        v.parse().map_err(|e| p.err(e))?,
                    );
                }
                _ => return Err(p.err(format!("unexpected line '{line}'"))),
            }
        }
        if !reference_area.is_finite() {
            return Err(p.err(format!("case {id} has no reference area")));
        }
        cases.push(TestCase {
            id,
            level_set,
            chain,
            domain,
            curve_degree: degree,
            reference_area,
            reference_monomials,
            active_bbox: bbox,
            region: None,
        });
    }
    Ok(cases)
}
