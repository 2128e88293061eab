//! Polynomial arithmetic in one and two variables, rational Bézier curve
//! evaluation, and safeguarded root finding. Substrate for the geometry
//! catalog, the reference oracles, and the degree predictor.

use crate::quad::Point2;
use crate::{Error, Result};

/// Relative magnitude below which a coefficient counts as zero for degree
/// bookkeeping.
const DEGREE_TRIM: f64 = 1e-12;

/// Univariate polynomial, coefficients in ascending power. The zero
/// polynomial is the empty (or all-zero) coefficient list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly1D {
    coeffs: Vec<f64>,
}

impl Poly1D {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self { coeffs: vec![c] }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Highest index with a non-negligible coefficient; 0 for the zero
    /// polynomial.
    pub fn degree(&self) -> usize {
        let max = self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return 0;
        }
        self.coeffs
            .iter()
            .rposition(|c| c.abs() > DEGREE_TRIM * max)
            .unwrap_or(0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Poly1D {
        if self.coeffs.len() <= 1 {
            return Poly1D::zero();
        }
        Poly1D::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| (i + 1) as f64 * c)
                .collect(),
        )
    }

    /// Antiderivative with constant term 0; the derivative of the result
    /// equals the input coefficient-wise.
    pub fn antiderivative(&self) -> Poly1D {
        if self.coeffs.is_empty() {
            return Poly1D::zero();
        }
        let mut out = Vec::with_capacity(self.coeffs.len() + 1);
        out.push(0.0);
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c / (i + 1) as f64),
        );
        Poly1D::new(out)
    }

    pub fn add(&self, other: &Poly1D) -> Poly1D {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.coeffs.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            out[i] += c;
        }
        Poly1D::new(out)
    }

    pub fn scale(&self, s: f64) -> Poly1D {
        Poly1D::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn mul(&self, other: &Poly1D) -> Poly1D {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Poly1D::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly1D::new(out)
    }

    /// Substitutes t ↦ a·t + b.
    pub fn compose_affine(&self, a: f64, b: f64) -> Poly1D {
        self.compose(&Poly1D::new(vec![b, a]))
    }

    /// Substitutes t ↦ inner(t).
    pub fn compose(&self, inner: &Poly1D) -> Poly1D {
        let mut out = Poly1D::zero();
        let mut power = Poly1D::constant(1.0);
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                power = power.mul(inner);
            }
            out = out.add(&power.scale(*c));
        }
        out
    }
}

/// Bivariate polynomial; `coeffs[i][j]` multiplies xⁱyʲ.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2D {
    coeffs: Vec<Vec<f64>>,
}

impl Poly2D {
    pub fn new(coeffs: Vec<Vec<f64>>) -> Self {
        let cols = coeffs.iter().map(|r| r.len()).max().unwrap_or(0);
        let coeffs = coeffs
            .into_iter()
            .map(|mut r| {
                r.resize(cols, 0.0);
                r
            })
            .collect();
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            coeffs: vec![vec![c]],
        }
    }

    /// The monomial xᵃyᵇ.
    pub fn monomial(a: usize, b: usize, c: f64) -> Self {
        let mut coeffs = vec![vec![0.0; b + 1]; a + 1];
        coeffs[a][b] = c;
        Self { coeffs }
    }

    /// Separable product p(x)·q(y).
    pub fn separable(px: &Poly1D, py: &Poly1D) -> Self {
        if px.coeffs().is_empty() || py.coeffs().is_empty() {
            return Self::zero();
        }
        Self {
            coeffs: px
                .coeffs()
                .iter()
                .map(|a| py.coeffs().iter().map(|b| a * b).collect())
                .collect(),
        }
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs
            .get(i)
            .and_then(|r| r.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .fold(0.0f64, |m, c| m.max(c.abs()))
    }

    /// Bi-degree (deg_x, deg_y) with coefficients below 1e-12·max counted as
    /// zero. The zero polynomial reports (0, 0).
    pub fn bidegree(&self) -> (usize, usize) {
        let max = self.max_abs();
        if max == 0.0 {
            return (0, 0);
        }
        let tol = DEGREE_TRIM * max;
        let mut dx = 0;
        let mut dy = 0;
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                if c.abs() > tol {
                    dx = dx.max(i);
                    dy = dy.max(j);
                }
            }
        }
        (dx, dy)
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == 0.0
    }

    pub fn eval(&self, p: Point2) -> f64 {
        // Horner in x of Horner-in-y row evaluations.
        let mut acc = 0.0;
        for row in self.coeffs.iter().rev() {
            let row_val = row.iter().rev().fold(0.0, |a, c| a * p.y + c);
            acc = acc * p.x + row_val;
        }
        acc
    }

    pub fn add(&self, other: &Poly2D) -> Poly2D {
        let rows = self.coeffs.len().max(other.coeffs.len());
        let cols = self
            .coeffs
            .first()
            .map_or(0, |r| r.len())
            .max(other.coeffs.first().map_or(0, |r| r.len()));
        let mut out = vec![vec![0.0; cols]; rows];
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out[i][j] += c;
            }
        }
        for (i, row) in other.coeffs.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                out[i][j] += c;
            }
        }
        Poly2D { coeffs: out }
    }

    pub fn scale(&self, s: f64) -> Poly2D {
        Poly2D {
            coeffs: self
                .coeffs
                .iter()
                .map(|r| r.iter().map(|c| c * s).collect())
                .collect(),
        }
    }

    /// Product with Neumaier-compensated accumulation per output coefficient.
    pub fn mul(&self, other: &Poly2D) -> Result<Poly2D> {
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Ok(Poly2D::zero());
        }
        let rows = self.coeffs.len() + other.coeffs.len() - 1;
        let cols = self.coeffs[0].len() + other.coeffs[0].len() - 1;
        let mut sum = vec![vec![0.0f64; cols]; rows];
        let mut comp = vec![vec![0.0f64; cols]; rows];
        for (i, arow) in self.coeffs.iter().enumerate() {
            for (j, a) in arow.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (k, brow) in other.coeffs.iter().enumerate() {
                    for (l, b) in brow.iter().enumerate() {
                        let term = a * b;
                        let s = &mut sum[i + k][j + l];
                        let t = *s + term;
                        comp[i + k][j + l] += if s.abs() >= term.abs() {
                            (*s - t) + term
                        } else {
                            (term - t) + *s
                        };
                        *s = t;
                    }
                }
            }
        }
        for (srow, crow) in sum.iter_mut().zip(&comp) {
            for (s, c) in srow.iter_mut().zip(crow) {
                *s += c;
            }
        }
        let out = Poly2D { coeffs: sum };
        if out.max_abs() > 1e300 {
            return Err(Error::NumericRange(format!(
                "coefficient magnitude {:.3e} exceeds 1e300",
                out.max_abs()
            )));
        }
        Ok(out)
    }

    pub fn partial_x(&self) -> Poly2D {
        if self.coeffs.len() <= 1 {
            return Poly2D::zero();
        }
        Poly2D {
            coeffs: self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().map(|c| (i + 1) as f64 * c).collect())
                .collect(),
        }
    }

    pub fn partial_y(&self) -> Poly2D {
        Poly2D {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| {
                    if row.len() <= 1 {
                        vec![0.0]
                    } else {
                        row[1..]
                            .iter()
                            .enumerate()
                            .map(|(j, c)| (j + 1) as f64 * c)
                            .collect()
                    }
                })
                .collect(),
        }
    }

    /// Antiderivative in x with zero constant slice.
    pub fn antiderivative_x(&self) -> Poly2D {
        if self.coeffs.is_empty() {
            return Poly2D::zero();
        }
        let cols = self.coeffs[0].len();
        let mut out = vec![vec![0.0; cols]];
        for (i, row) in self.coeffs.iter().enumerate() {
            out.push(row.iter().map(|c| c / (i + 1) as f64).collect());
        }
        Poly2D { coeffs: out }
    }

    /// Antiderivative in y with zero constant slice.
    pub fn antiderivative_y(&self) -> Poly2D {
        Poly2D {
            coeffs: self
                .coeffs
                .iter()
                .map(|row| {
                    let mut r = Vec::with_capacity(row.len() + 1);
                    r.push(0.0);
                    r.extend(row.iter().enumerate().map(|(j, c)| c / (j + 1) as f64));
                    r
                })
                .collect(),
        }
    }

    /// Restriction to a parametric line (x, y) = (x0 + dx·t, y0 + dy·t) as a
    /// polynomial in t.
    pub fn restrict_to_line(&self, x0: f64, dx: f64, y0: f64, dy: f64) -> Poly1D {
        let lx = Poly1D::new(vec![x0, dx]);
        let ly = Poly1D::new(vec![y0, dy]);
        let mut out = Poly1D::zero();
        let mut xpow = Poly1D::constant(1.0);
        for row in &self.coeffs {
            let mut ypow = Poly1D::constant(1.0);
            let mut row_poly = Poly1D::zero();
            for (j, c) in row.iter().enumerate() {
                if j > 0 {
                    ypow = ypow.mul(&ly);
                }
                row_poly = row_poly.add(&ypow.scale(*c));
            }
            out = out.add(&xpow.mul(&row_poly));
            xpow = xpow.mul(&lx);
        }
        out
    }
}

/// Coefficients of the degree-k Legendre polynomial on [−1, 1] from the
/// three-term recurrence.
pub fn legendre_poly(k: usize) -> Poly1D {
    let mut p0 = Poly1D::constant(1.0);
    if k == 0 {
        return p0;
    }
    let t = Poly1D::new(vec![0.0, 1.0]);
    let mut p1 = t.clone();
    for m in 2..=k {
        let m = m as f64;
        let next = t
            .mul(&p1)
            .scale((2.0 * m - 1.0) / m)
            .add(&p0.scale(-(m - 1.0) / m));
        p0 = p1;
        p1 = next;
    }
    p1
}

/// f(Tx(u,v), Ty(u,v)) by exact coefficient expansion. Linear in f.
pub fn poly2d_compose(f: &Poly2D, tx: &Poly2D, ty: &Poly2D) -> Result<Poly2D> {
    let (deg_x, deg_y) = {
        let rows = f.coeffs().len();
        let cols = f.coeffs().first().map_or(0, |r| r.len());
        (rows.saturating_sub(1), cols.saturating_sub(1))
    };
    // Power tables for Tx and Ty.
    let mut tx_pow = Vec::with_capacity(deg_x + 1);
    tx_pow.push(Poly2D::constant(1.0));
    for i in 1..=deg_x {
        let next = tx_pow[i - 1].mul(tx)?;
        tx_pow.push(next);
    }
    let mut ty_pow = Vec::with_capacity(deg_y + 1);
    ty_pow.push(Poly2D::constant(1.0));
    for j in 1..=deg_y {
        let next = ty_pow[j - 1].mul(ty)?;
        ty_pow.push(next);
    }
    let mut out = Poly2D::zero();
    for (i, row) in f.coeffs().iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            let term = tx_pow[i].mul(&ty_pow[j])?.scale(*c);
            out = out.add(&term);
        }
    }
    if out.max_abs() > 1e300 {
        return Err(Error::NumericRange(
            "composition coefficients exceed 1e300".into(),
        ));
    }
    Ok(out)
}

/// ∂u Tx·∂v Ty − ∂v Tx·∂u Ty, exactly.
pub fn poly2d_jacobian_det(tx: &Poly2D, ty: &Poly2D) -> Result<Poly2D> {
    let a = tx.partial_x().mul(&ty.partial_y())?;
    let b = tx.partial_y().mul(&ty.partial_x())?;
    Ok(a.add(&b.scale(-1.0)))
}

/// A rational Bernstein–Bézier curve segment in the plane. At least two
/// control points, strictly positive weights; interpolates its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalBezier {
    control: Vec<Point2>,
    weights: Vec<f64>,
}

impl RationalBezier {
    pub fn new(control: Vec<Point2>, weights: Vec<f64>) -> Result<Self> {
        if control.len() < 2 {
            return Err(Error::InvalidParameter(
                "Bézier segment needs at least 2 control points".into(),
            ));
        }
        if control.len() != weights.len() {
            return Err(Error::InvalidParameter(format!(
                "{} control points but {} weights",
                control.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "Bézier weights must be positive and finite".into(),
            ));
        }
        Ok(Self { control, weights })
    }

    /// Polynomial segment (all weights 1).
    pub fn polynomial(control: Vec<Point2>) -> Result<Self> {
        let w = vec![1.0; control.len()];
        Self::new(control, w)
    }

    /// Straight line segment.
    pub fn line(a: Point2, b: Point2) -> Result<Self> {
        Self::polynomial(vec![a, b])
    }

    pub fn degree(&self) -> usize {
        self.control.len() - 1
    }

    pub fn control_points(&self) -> &[Point2] {
        &self.control
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn start(&self) -> Point2 {
        self.control[0]
    }

    pub fn end(&self) -> Point2 {
        *self.control.last().unwrap()
    }

    /// True when every control y-coordinate coincides, so dy/ds ≡ 0.
    pub fn is_horizontal(&self) -> bool {
        let y0 = self.control[0].y;
        self.control.iter().all(|p| p.y == y0)
    }

    /// Point and first derivative at parameter s by de Casteljau evaluation
    /// of the homogeneous curve and the quotient rule.
    pub fn eval(&self, s: f64) -> Result<(Point2, Point2)> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::InvalidParameter(format!(
                "curve parameter {s} outside [0, 1]"
            )));
        }
        // Homogeneous coordinates (w·x, w·y, w).
        let hx: Vec<f64> = self
            .control
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * p.x)
            .collect();
        let hy: Vec<f64> = self
            .control
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * p.y)
            .collect();
        let hw = self.weights.clone();
        let p = self.degree() as f64;
        let de_casteljau = |mut v: Vec<f64>| {
            while v.len() > 1 {
                for i in 0..v.len() - 1 {
                    v[i] += s * (v[i + 1] - v[i]);
                }
                v.pop();
            }
            v[0]
        };
        // Hodograph control values of the homogeneous curve.
        let diffs = |v: &[f64]| v.windows(2).map(|w| p * (w[1] - w[0])).collect::<Vec<_>>();
        let dx = de_casteljau(diffs(&hx));
        let dy = de_casteljau(diffs(&hy));
        let dw = de_casteljau(diffs(&hw));
        let w = de_casteljau(hw);
        let point = Point2::new(de_casteljau(hx) / w, de_casteljau(hy) / w);
        // Quotient rule: C' = (A' − C·w') / w.
        let deriv = Point2::new((dx - point.x * dw) / w, (dy - point.y * dw) / w);
        Ok((point, deriv))
    }
}

/// Point and derivative of `c` at parameter s; free-function form of
/// [`RationalBezier::eval`].
pub fn bezier_eval(c: &RationalBezier, s: f64) -> Result<(Point2, Point2)> {
    c.eval(s)
}

/// Roots of a scalar function on [a, b] found by sampling at `samples`
/// equispaced points and refining each sign-change bracket with a
/// safeguarded secant/bisection iteration (bracket width ≤ 1e-14·(b−a)).
///
/// Samples within 1e-13 of zero (relative to the sampled magnitude) are
/// reported as roots once. Root pairs closer than the sample spacing and
/// even-multiplicity (grazing) crossings between samples are missed.
pub fn find_roots_1d<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    samples: usize,
) -> Result<Vec<f64>> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!(
            "invalid interval [{a}, {b}]"
        )));
    }
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least 2 samples".into()));
    }
    let n = samples;
    let mut ts = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut scale = 0.0f64;
    for k in 0..n {
        let t = a + (b - a) * (k as f64 / (n - 1) as f64);
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::NonFiniteEval { x: t, y: v });
        }
        scale = scale.max(v.abs());
        ts.push(t);
        vs.push(v);
    }
    let zero_tol = 1e-13 * (1.0 + scale);
    let width_tol = 1e-14 * (b - a);
    let mut roots: Vec<f64> = Vec::new();
    let push_root = |roots: &mut Vec<f64>, r: f64| {
        if roots
            .last()
            .is_none_or(|last| (r - last).abs() > width_tol.max(1e-300))
        {
            roots.push(r);
        }
    };
    for k in 0..n {
        if vs[k].abs() <= zero_tol {
            push_root(&mut roots, ts[k]);
            continue;
        }
        if k + 1 < n && vs[k + 1].abs() > zero_tol && (vs[k] > 0.0) != (vs[k + 1] > 0.0) {
            let r = refine_bracket(&f, ts[k], ts[k + 1], vs[k], vs[k + 1], width_tol)?;
            push_root(&mut roots, r);
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= width_tol.max(1e-300));
    Ok(roots)
}

/// Secant steps safeguarded by bisection inside a sign-change bracket.
fn refine_bracket<F: Fn(f64) -> f64>(
    f: &F,
    mut lo: f64,
    mut hi: f64,
    mut flo: f64,
    mut fhi: f64,
    width_tol: f64,
) -> Result<f64> {
    for _ in 0..200 {
        if hi - lo <= width_tol {
            break;
        }
        // Secant candidate; fall back to the midpoint when it leaves the
        // bracket or stalls.
        let mut t = if fhi != flo {
            lo - flo * (hi - lo) / (fhi - flo)
        } else {
            0.5 * (lo + hi)
        };
        let margin = 0.01 * (hi - lo);
        if !(t > lo + margin && t < hi - margin) {
            t = 0.5 * (lo + hi);
        }
        let v = f(t);
        if !v.is_finite() {
            return Err(Error::NonFiniteEval { x: t, y: v });
        }
        if v == 0.0 {
            return Ok(t);
        }
        if (v > 0.0) == (flo > 0.0) {
            lo = t;
            flo = v;
        } else {
            hi = t;
            fhi = v;
        }
    }
    Ok(if flo.abs() <= fhi.abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn antiderivative_basic_cases() {
        assert_eq!(
            Poly1D::constant(1.0).antiderivative().coeffs(),
            &[0.0, 1.0]
        );
        assert_eq!(
            Poly1D::new(vec![0.0, 2.0]).antiderivative().coeffs(),
            &[0.0, 0.0, 1.0]
        );
        assert_eq!(Poly1D::zero().antiderivative(), Poly1D::zero());
    }

    #[test]
    fn compose_projection_and_expansion() {
        // f = x with Tx = u², Ty = v gives u².
        let f = Poly2D::monomial(1, 0, 1.0);
        let tx = Poly2D::monomial(2, 0, 1.0);
        let ty = Poly2D::monomial(0, 1, 1.0);
        let c = poly2d_compose(&f, &tx, &ty).unwrap();
        assert_eq!(c.bidegree(), (2, 0));
        assert_eq!(c.coeff(2, 0), 1.0);

        // f = xy with Tx = u+v, Ty = u−v gives u² − v².
        let f = Poly2D::monomial(1, 1, 1.0);
        let tx = Poly2D::new(vec![vec![0.0, 1.0], vec![1.0]]);
        let ty = Poly2D::new(vec![vec![0.0, -1.0], vec![1.0]]);
        let c = poly2d_compose(&f, &tx, &ty).unwrap();
        assert_eq!(c.coeff(2, 0), 1.0);
        assert_eq!(c.coeff(0, 2), -1.0);
        assert_eq!(c.coeff(1, 1), 0.0);
    }

    #[test]
    fn compose_general_biquadratic_reaches_predicted_degree() {
        // Q_{2,2} integrand through a generic bi-quadratic map, including the
        // Jacobian factor, lands at bi-degree (11, 11): 2p(q+1)−1 with p=q=2.
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            ((seed % 7) as f64) - 3.0
        };
        let rand_poly = |next: &mut dyn FnMut() -> f64| {
            let mut rows = Vec::new();
            for _ in 0..3 {
                rows.push((0..3).map(|_| next()).collect::<Vec<_>>());
            }
            Poly2D::new(rows)
        };
        for _ in 0..5 {
            let f = rand_poly(&mut next);
            let mut tx = rand_poly(&mut next);
            let mut ty = rand_poly(&mut next);
            // Force nonzero top coefficients so the draw is generic.
            if tx.coeff(2, 2) == 0.0 {
                tx = tx.add(&Poly2D::monomial(2, 2, 1.0));
            }
            if ty.coeff(2, 2) == 0.0 {
                ty = ty.add(&Poly2D::monomial(2, 2, -1.0));
            }
            let comp = poly2d_compose(&f, &tx, &ty).unwrap();
            let det = poly2d_jacobian_det(&tx, &ty).unwrap();
            let total = comp.mul(&det).unwrap();
            let (dx, dy) = total.bidegree();
            assert!(dx <= 11 && dy <= 11, "got ({dx}, {dy})");
            if f.coeff(2, 2) != 0.0 {
                assert_eq!((dx, dy), (11, 11));
            }
        }
    }

    #[test]
    fn jacobian_det_identity_affine_degenerate() {
        let u = Poly2D::monomial(1, 0, 1.0);
        let v = Poly2D::monomial(0, 1, 1.0);
        let det = poly2d_jacobian_det(&u, &v).unwrap();
        assert_eq!(det.bidegree(), (0, 0));
        assert_eq!(det.coeff(0, 0), 1.0);

        // Affine map: constant determinant.
        let tx = Poly2D::new(vec![vec![0.5, 2.0], vec![3.0]]);
        let ty = Poly2D::new(vec![vec![-1.0, 0.25], vec![-0.75]]);
        let det = poly2d_jacobian_det(&tx, &ty).unwrap();
        assert_eq!(det.bidegree(), (0, 0));

        // Degenerate map Tx = u, Ty = (1−u)·A0 + u·B(v), B cubic:
        // det = u·B'(v), bi-degree (1, 2).
        let a0 = 2.0;
        let b = Poly1D::new(vec![1.0, -2.0, 0.5, 3.0]);
        let mut ty = Poly2D::zero();
        // (1−u)·a0 + u·B(v) = a0 + u·(B(v) − a0)
        ty = ty.add(&Poly2D::constant(a0));
        for (j, c) in b.coeffs().iter().enumerate() {
            let mut coeff = *c;
            if j == 0 {
                coeff -= a0;
            }
            ty = ty.add(&Poly2D::monomial(1, j, coeff));
        }
        let det = poly2d_jacobian_det(&u, &ty).unwrap();
        assert_eq!(det.bidegree(), (1, 2));
    }

    #[test]
    fn bezier_line_midpoint() {
        let c = RationalBezier::line(Point2::new(0.0, 0.2), Point2::new(1.0, 0.8)).unwrap();
        let (p, d) = c.eval(0.5).unwrap();
        assert!((p.x - 0.5).abs() < 1e-15 && (p.y - 0.5).abs() < 1e-15);
        assert!((d.x - 1.0).abs() < 1e-15 && (d.y - 0.6).abs() < 1e-14);
    }

    #[test]
    fn bezier_endpoint_interpolation() {
        let c = RationalBezier::new(
            vec![
                Point2::new(0.3, -1.0),
                Point2::new(0.9, 2.0),
                Point2::new(2.0, 0.5),
            ],
            vec![1.0, 0.4, 2.0],
        )
        .unwrap();
        let (p0, _) = c.eval(0.0).unwrap();
        let (p1, _) = c.eval(1.0).unwrap();
        assert_eq!(p0, c.start());
        assert_eq!(p1, c.end());
        assert!(c.eval(1.5).is_err());
    }

    #[test]
    fn bezier_quarter_circle_stays_on_circle() {
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let c = RationalBezier::new(
            vec![
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![1.0, w, 1.0],
        )
        .unwrap();
        for s in [0.1, 0.25, 0.5, 0.9] {
            let (p, _) = c.eval(s).unwrap();
            assert!((p.norm() - 1.0).abs() <= 1e-14, "off circle at s={s}");
        }
    }

    #[test]
    fn roots_simple_cases() {
        let r = find_roots_1d(|t| t - 0.5, 0.0, 1.0, 8).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() <= 1e-14);

        let r = find_roots_1d(|t| (t - 0.25) * (t - 0.75), 0.0, 1.0, 9).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 0.25).abs() <= 1e-13 && (r[1] - 0.75).abs() <= 1e-13);

        let r = find_roots_1d(|t| t * t + 1.0, 0.0, 1.0, 16).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn roots_exact_zero_sample_reported_once() {
        // 0.5 is hit exactly by an odd sample count.
        let r = find_roots_1d(|t| t - 0.5, 0.0, 1.0, 5).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0], 0.5);
    }

    #[test]
    fn roots_error_on_non_finite() {
        let err = find_roots_1d(|t| 1.0 / (t - 0.5), 0.0, 1.0, 5).unwrap_err();
        assert!(matches!(err, Error::NonFiniteEval { .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn derivative_of_antiderivative_roundtrips_exactly(
            ints in proptest::collection::vec(-100i32..100, 0..7)
        ) {
            // Multiples of lcm(1..=7) divide exactly by every index factor,
            // so the round trip must be bit-exact on this domain.
            let coeffs: Vec<f64> = ints.iter().map(|m| 420.0 * f64::from(*m)).collect();
            let p = Poly1D::new(coeffs.clone());
            let back = p.antiderivative().derivative();
            for i in 0..coeffs.len() {
                prop_assert_eq!(back.coeffs().get(i).copied().unwrap_or(0.0), coeffs[i]);
            }
            for c in back.coeffs().iter().skip(coeffs.len()) {
                prop_assert_eq!(*c, 0.0);
            }
        }

        #[test]
        fn derivative_of_antiderivative_within_one_ulp(
            coeffs in proptest::collection::vec(-100.0f64..100.0, 0..7)
        ) {
            let p = Poly1D::new(coeffs.clone());
            let back = p.antiderivative().derivative();
            for i in 0..coeffs.len() {
                let b = back.coeffs().get(i).copied().unwrap_or(0.0);
                prop_assert!((b - coeffs[i]).abs() <= coeffs[i].abs() * f64::EPSILON);
            }
        }

        #[test]
        fn compose_is_linear_in_f(
            a in proptest::collection::vec(-5.0f64..5.0, 4),
            b in proptest::collection::vec(-5.0f64..5.0, 4),
        ) {
            let f = Poly2D::new(vec![vec![a[0], a[1]], vec![a[2], a[3]]]);
            let g = Poly2D::new(vec![vec![b[0], b[1]], vec![b[2], b[3]]]);
            let tx = Poly2D::new(vec![vec![0.0, 1.0], vec![1.0, 0.5]]);
            let ty = Poly2D::new(vec![vec![0.5, -1.0], vec![2.0, 0.0]]);
            let lhs = poly2d_compose(&f.add(&g), &tx, &ty).unwrap();
            let rhs = poly2d_compose(&f, &tx, &ty).unwrap()
                .add(&poly2d_compose(&g, &tx, &ty).unwrap());
            for i in 0..lhs.coeffs().len().max(rhs.coeffs().len()) {
                for j in 0..4 {
                    let l = lhs.coeff(i, j);
                    let r = rhs.coeff(i, j);
                    prop_assert!((l - r).abs() <= 1e-12 * (1.0 + l.abs().max(r.abs())));
                }
            }
        }

        #[test]
        fn cubic_roots_recovered(
            r0 in 0.05f64..0.9,
            gap1 in 0.06f64..0.4,
            gap2 in 0.06f64..0.4,
        ) {
            let r1 = r0 + gap1;
            let r2 = r1 + gap2;
            prop_assume!(r2 < 1.95);
            let f = |t: f64| (t - r0) * (t - r1) * (t - r2);
            let roots = find_roots_1d(f, 0.0, 2.0, 64).unwrap();
            prop_assert_eq!(roots.len(), 3);
            for (found, want) in roots.iter().zip([r0, r1, r2]) {
                prop_assert!((found - want).abs() <= 1e-12);
            }
        }

        #[test]
        fn bezier_derivative_matches_finite_differences(
            px in proptest::collection::vec(-2.0f64..2.0, 6),
            py in proptest::collection::vec(-2.0f64..2.0, 6),
            wts in proptest::collection::vec(0.2f64..3.0, 6),
            s in 0.1f64..0.9,
        ) {
            let control: Vec<Point2> = px.iter().zip(&py)
                .map(|(x, y)| Point2::new(*x, *y)).collect();
            let c = RationalBezier::new(control, wts).unwrap();
            let (_, d) = c.eval(s).unwrap();
            let h = 1e-6;
            let (pp, _) = c.eval(s + h).unwrap();
            let (pm, _) = c.eval(s - h).unwrap();
            let fd = Point2::new((pp.x - pm.x) / (2.0 * h), (pp.y - pm.y) / (2.0 * h));
            let scale = d.norm().max(1.0);
            prop_assert!((d.x - fd.x).abs() <= 1e-6 * scale);
            prop_assert!((d.y - fd.y).abs() <= 1e-6 * scale);
        }
    }
}
