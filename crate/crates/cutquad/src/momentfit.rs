//! Moment-fitting rule generators.
//!
//! Two constructions share the moment-fitting idea (fixed nodes, weights
//! solved from known basis integrals):
//!
//! * [`lagrange_momentfit_rule`] fits tensor Lagrange polynomials at Gauss
//!   nodes against a masked-Gauss quadtree reference. The system matrix is
//!   the identity, so each weight is the reference integral of its cardinal
//!   function.
//! * [`hmf_interface_rule`] / [`hmf_volume_rule`] form the hierarchical
//!   construction: an interface rule from divergence-free (curl) test
//!   functions whose right-hand sides need only the straight cell edges,
//!   then a volume rule whose right-hand sides come from the divergence
//!   theorem using analytic antiderivatives and the interface rule.
//!
//! Nodes are tensor Gauss grids, so they may land in the void region and
//! weights may come out negative.

use crate::geometry::{classify_cell, edge_roots, Classification, LevelSet};
use crate::poly::{legendre_poly, Poly1D, Poly2D};
use crate::quad::{gauss_legendre, tensor_rule, Point2, Provenance, QuadratureRule, Rect};
use crate::quadtree::{quadtree_rule, LeafMode, QuadtreeConfig};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Gradient norms below this count as a degenerate normal.
const GRAD_FLOOR: f64 = 1e-10;

/// Configuration for both moment-fitting variants. The quadrature order is
/// k_q = 2·n_set − 1 (Gaussian relation).
#[derive(Debug, Clone, Copy)]
pub struct MomentFitConfig {
    pub n_set: usize,
    /// Quadtree reference for the Lagrange variant.
    pub reference: QuadtreeConfig,
    /// Safety factor ϖ for the interface rule's node count.
    pub safety_surface: f64,
    /// Safety factor ϖ for the volume rule's node count.
    pub safety_volume: f64,
}

impl MomentFitConfig {
    /// Lagrange variant: reference quadtree with masked Gauss leaves at the
    /// given depth and the same n_set.
    pub fn lagrange(n_set: usize, depth: u32) -> Result<Self> {
        let cfg = Self {
            n_set,
            reference: QuadtreeConfig::new(n_set, depth, LeafMode::MaskedGauss)?,
            safety_surface: 1.6,
            safety_volume: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Hierarchical variant with the default safety factors (surface 1.6,
    /// volume 1.0).
    pub fn hmf(n_set: usize) -> Result<Self> {
        let cfg = Self {
            n_set,
            reference: QuadtreeConfig::new(n_set.min(8), 3, LeafMode::MaskedGauss)?,
            safety_surface: 1.6,
            safety_volume: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn order(&self) -> usize {
        2 * self.n_set - 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_set == 0 {
            return Err(Error::InvalidParameter("n_set must be positive".into()));
        }
        if !(self.safety_surface >= 1.0 && self.safety_volume >= 1.0) {
            return Err(Error::InvalidParameter(
                "safety factors must be at least 1".into(),
            ));
        }
        let k_q = self.order();
        let surface_moments = (k_q + 1) * (k_q + 4) / 2;
        let volume_moments = (k_q + 1) * (k_q + 1);
        let max_nodes = (self.safety_surface * surface_moments as f64)
            .max(self.safety_volume * volume_moments as f64);
        if max_nodes > 1e4 {
            return Err(Error::InvalidParameter(format!(
                "ϖ·moment count {max_nodes:.0} exceeds 1e4"
            )));
        }
        if node_grid(surface_moments, self.safety_surface) > crate::quad::MAX_GAUSS_N {
            return Err(Error::InvalidParameter(
                "interface node grid exceeds the supported Gauss order".into(),
            ));
        }
        Ok(())
    }
}

/// A solved moment system: row-major basis-evaluation matrix, right-hand
/// side, weights, and the least-squares residual norm.
#[derive(Debug, Clone)]
pub struct MomentSystem {
    pub moments: usize,
    pub nodes: usize,
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub weights: Vec<f64>,
    pub residual: f64,
}

/// Minimum-norm least squares by SVD with rank tolerance 1e-12·σ_max.
fn min_norm_lstsq(m: DMatrix<f64>, rhs: DVector<f64>) -> Result<(Vec<f64>, f64)> {
    let svd = m.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = (1e-12 * sigma_max).max(f64::MIN_POSITIVE);
    let w = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::MethodFailure(format!("least-squares solve failed: {e}")))?;
    let residual = (&m * &w - &rhs).norm();
    Ok((w.iter().cloned().collect(), residual))
}

/// Per-direction node count: smallest square grid holding ϖ·moments nodes.
fn node_grid(moments: usize, safety: f64) -> usize {
    let wanted = (safety * moments as f64).ceil() as usize;
    let mut k = (wanted as f64).sqrt().ceil() as usize;
    while k * k < wanted {
        k += 1;
    }
    k.max(1)
}

/// Divergence-free test functions on the cell: g = curl ψ = (∂ψ/∂y, −∂ψ/∂x)
/// for the scaled local monomials ψ = ((x−xc)/hx)^a ((y−yc)/hy)^b with total
/// degree 1..=max_degree. div g vanishes identically coefficient-wise.
pub fn divergence_free_basis(max_degree: usize, cell: Rect) -> Vec<(Poly2D, Poly2D)> {
    let local_x = Poly1D::new(vec![-cell.center().x / cell.width(), 1.0 / cell.width()]);
    let local_y = Poly1D::new(vec![-cell.center().y / cell.height(), 1.0 / cell.height()]);
    let mut xpows = vec![Poly1D::constant(1.0)];
    let mut ypows = vec![Poly1D::constant(1.0)];
    for d in 1..=max_degree {
        xpows.push(xpows[d - 1].mul(&local_x));
        ypows.push(ypows[d - 1].mul(&local_y));
    }
    let mut basis = Vec::new();
    for total in 1..=max_degree {
        for a in (0..=total).rev() {
            let b = total - a;
            let psi = Poly2D::separable(&xpows[a], &ypows[b]);
            basis.push((psi.partial_y(), psi.partial_x().scale(-1.0)));
        }
    }
    basis
}

/// Tensor Legendre volume basis on the cell, degrees 0..=order per
/// direction, paired with its divergence-theorem antiderivative field
/// F = ½(∫f dx, ∫f dy).
fn legendre_volume_basis(order: usize, cell: Rect) -> Vec<(Poly2D, Poly2D, Poly2D)> {
    let to_local_x = |p: &Poly1D| {
        p.compose_affine(
            2.0 / cell.width(),
            -(cell.x0 + cell.x1) / cell.width(),
        )
    };
    let to_local_y = |p: &Poly1D| {
        p.compose_affine(
            2.0 / cell.height(),
            -(cell.y0 + cell.y1) / cell.height(),
        )
    };
    let lx: Vec<Poly1D> = (0..=order).map(|k| to_local_x(&legendre_poly(k))).collect();
    let ly: Vec<Poly1D> = (0..=order).map(|k| to_local_y(&legendre_poly(k))).collect();
    let mut basis = Vec::with_capacity((order + 1) * (order + 1));
    for a in 0..=order {
        for b in 0..=order {
            let f = Poly2D::separable(&lx[a], &ly[b]);
            let fx = f.antiderivative_x().scale(0.5);
            let fy = f.antiderivative_y().scale(0.5);
            basis.push((f, fx, fy));
        }
    }
    basis
}

struct EdgeSpec {
    start: Point2,
    end: Point2,
    normal: Point2,
    roots: Vec<f64>,
}

/// The four cell edges with outward normals and the interface roots along
/// each (parameter = arclength fraction in increasing coordinate).
fn active_edges(ls: &LevelSet, cell: Rect) -> Result<Vec<EdgeSpec>> {
    let roots = edge_roots(ls, cell)?;
    Ok(vec![
        EdgeSpec {
            start: Point2::new(cell.x0, cell.y0),
            end: Point2::new(cell.x1, cell.y0),
            normal: Point2::new(0.0, -1.0),
            roots: roots.bottom,
        },
        EdgeSpec {
            start: Point2::new(cell.x1, cell.y0),
            end: Point2::new(cell.x1, cell.y1),
            normal: Point2::new(1.0, 0.0),
            roots: roots.right,
        },
        EdgeSpec {
            start: Point2::new(cell.x0, cell.y1),
            end: Point2::new(cell.x1, cell.y1),
            normal: Point2::new(0.0, 1.0),
            roots: roots.top,
        },
        EdgeSpec {
            start: Point2::new(cell.x0, cell.y0),
            end: Point2::new(cell.x0, cell.y1),
            normal: Point2::new(-1.0, 0.0),
            roots: roots.left,
        },
    ])
}

/// Accumulates ∫ f(p)·n dΓ over the active parts of the straight cell
/// edges, with an n_gauss-point rule per active sub-segment.
fn edge_boundary_integral<F>(
    ls: &LevelSet,
    edges: &[EdgeSpec],
    n_gauss: usize,
    mut f: F,
) -> Result<Vec<f64>>
where
    F: FnMut(Point2, Point2) -> Vec<f64>,
{
    let gauss = gauss_legendre(n_gauss)?;
    let mut acc: Option<Vec<f64>> = None;
    for edge in edges {
        let length = (edge.end - edge.start).norm();
        let mut breaks = vec![0.0];
        breaks.extend(edge.roots.iter().copied());
        breaks.push(1.0);
        for pair in breaks.windows(2) {
            let (ta, tb) = (pair[0], pair[1]);
            if tb - ta <= 1e-14 {
                continue;
            }
            let tm = 0.5 * (ta + tb);
            let mid = Point2::new(
                edge.start.x + (edge.end.x - edge.start.x) * tm,
                edge.start.y + (edge.end.y - edge.start.y) * tm,
            );
            let v = ls.value(mid);
            if !v.is_finite() {
                return Err(Error::NonFiniteEval { x: mid.x, y: mid.y });
            }
            if v > 0.0 {
                continue;
            }
            for (t, wt) in gauss.mapped(ta, tb) {
                let p = Point2::new(
                    edge.start.x + (edge.end.x - edge.start.x) * t,
                    edge.start.y + (edge.end.y - edge.start.y) * t,
                );
                let vals = f(p, edge.normal);
                let acc = acc.get_or_insert_with(|| vec![0.0; vals.len()]);
                for (a, v) in acc.iter_mut().zip(&vals) {
                    *a += wt * length * v;
                }
            }
        }
    }
    Ok(acc.unwrap_or_default())
}

fn interface_normal(ls: &LevelSet, p: Point2) -> Result<Point2> {
    let g = ls.gradient(p);
    let n = g.norm();
    if n < GRAD_FLOOR {
        return Err(Error::DegenerateNormal(format!(
            "|∇φ| = {n:.3e} at ({}, {})",
            p.x, p.y
        )));
    }
    Ok(g * (1.0 / n))
}

/// Interface rule on a cut cell: nodes on a tensor Gauss grid, weights from
/// the divergence-free moment system. Applied to an integrand u, the rule
/// approximates ∫_I u dΓ over the interface piece inside the cell; the
/// weight sum estimates the interface length. Uncut cells give an empty
/// rule.
pub fn hmf_interface_rule(
    ls: &LevelSet,
    cell: Rect,
    cfg: &MomentFitConfig,
) -> Result<QuadratureRule> {
    Ok(hmf_interface_system(ls, cell, cfg)?.0)
}

/// Interface rule along with its solved moment system.
pub fn hmf_interface_system(
    ls: &LevelSet,
    cell: Rect,
    cfg: &MomentFitConfig,
) -> Result<(QuadratureRule, MomentSystem)> {
    cfg.validate()?;
    let empty = |moments: usize| MomentSystem {
        moments,
        nodes: 0,
        matrix: Vec::new(),
        rhs: Vec::new(),
        weights: Vec::new(),
        residual: 0.0,
    };
    if classify_cell(ls, cell, cfg.reference.classify_grid)? != Classification::Cut {
        return Ok((QuadratureRule::empty(Provenance::HmfInterface), empty(0)));
    }

    let basis = divergence_free_basis(cfg.order() + 1, cell);
    let m = basis.len();
    let grid = node_grid(m, cfg.safety_surface);
    let nodes = tensor_rule(grid, grid, cell)?;
    let n = nodes.len();

    let mut matrix = DMatrix::zeros(m, n);
    for (j, p) in nodes.points().iter().enumerate() {
        let normal = interface_normal(ls, *p)?;
        for (i, (gx, gy)) in basis.iter().enumerate() {
            matrix[(i, j)] = gx.eval(*p) * normal.x + gy.eval(*p) * normal.y;
        }
    }

    let edges = active_edges(ls, cell)?;
    let rhs_vec = edge_boundary_integral(ls, &edges, cfg.n_set + 2, |p, n| {
        basis
            .iter()
            .map(|(gx, gy)| -(gx.eval(p) * n.x + gy.eval(p) * n.y))
            .collect()
    })?;
    let rhs_vec = if rhs_vec.is_empty() {
        vec![0.0; m]
    } else {
        rhs_vec
    };
    let rhs = DVector::from_vec(rhs_vec.clone());

    let (weights, residual) = min_norm_lstsq(matrix.clone(), rhs)?;
    let rule = QuadratureRule::new(
        nodes.points().to_vec(),
        weights.clone(),
        Provenance::HmfInterface,
    )?;
    let system = MomentSystem {
        moments: m,
        nodes: n,
        matrix: matrix.transpose().as_slice().to_vec(),
        rhs: rhs_vec,
        weights,
        residual,
    };
    Ok((rule, system))
}

/// Volume rule on a cut cell via the divergence theorem: tensor Legendre
/// moments, right-hand sides from the straight active edges plus the
/// interface rule applied to the antiderivative flux. Inside cells bypass
/// to a plain tensor Gauss rule; Outside cells give an empty rule.
pub fn hmf_volume_rule(ls: &LevelSet, cell: Rect, cfg: &MomentFitConfig) -> Result<QuadratureRule> {
    Ok(hmf_volume_system(ls, cell, cfg)?.0)
}

/// Volume rule along with its solved moment system (empty system on
/// uncut cells).
pub fn hmf_volume_system(
    ls: &LevelSet,
    cell: Rect,
    cfg: &MomentFitConfig,
) -> Result<(QuadratureRule, MomentSystem)> {
    cfg.validate()?;
    let empty_sys = MomentSystem {
        moments: 0,
        nodes: 0,
        matrix: Vec::new(),
        rhs: Vec::new(),
        weights: Vec::new(),
        residual: 0.0,
    };
    match classify_cell(ls, cell, cfg.reference.classify_grid)? {
        Classification::Outside => {
            return Ok((QuadratureRule::empty(Provenance::HmfVolume), empty_sys))
        }
        Classification::Inside => {
            return Ok((tensor_rule(cfg.n_set, cfg.n_set, cell)?, empty_sys))
        }
        Classification::Cut => {}
    }

    let order = cfg.order();
    let basis = legendre_volume_basis(order, cell);
    let m = basis.len();
    let grid = node_grid(m, cfg.safety_volume);
    let nodes = tensor_rule(grid, grid, cell)?;
    let n = nodes.len();

    // Straight-edge part of ∫_∂K F·n dΓ.
    let edges = active_edges(ls, cell)?;
    let mut rhs_vec = edge_boundary_integral(ls, &edges, cfg.n_set + 2, |p, nrm| {
        basis
            .iter()
            .map(|(_, fx, fy)| fx.eval(p) * nrm.x + fy.eval(p) * nrm.y)
            .collect()
    })?;
    if rhs_vec.is_empty() {
        rhs_vec = vec![0.0; m];
    }
    // Interface part through the divergence-free interface rule.
    let (interface, _) = hmf_interface_system(ls, cell, cfg)?;
    for (p, w) in interface.points().iter().zip(interface.weights()) {
        let normal = interface_normal(ls, *p)?;
        for (i, (_, fx, fy)) in basis.iter().enumerate() {
            rhs_vec[i] += w * (fx.eval(*p) * normal.x + fy.eval(*p) * normal.y);
        }
    }

    let mut matrix = DMatrix::zeros(m, n);
    for (j, p) in nodes.points().iter().enumerate() {
        for (i, (f, _, _)) in basis.iter().enumerate() {
            matrix[(i, j)] = f.eval(*p);
        }
    }
    let rhs = DVector::from_vec(rhs_vec.clone());
    let (weights, residual) = min_norm_lstsq(matrix.clone(), rhs)?;
    let rule = QuadratureRule::new(
        nodes.points().to_vec(),
        weights.clone(),
        Provenance::HmfVolume,
    )?;
    let system = MomentSystem {
        moments: m,
        nodes: n,
        matrix: matrix.transpose().as_slice().to_vec(),
        rhs: rhs_vec,
        weights,
        residual,
    };
    Ok((rule, system))
}

/// Lagrange-basis moment fitting against a quadtree reference: nodes are
/// the (2·n_set)² tensor Gauss points of the cell, and because the basis is
/// the cardinal Lagrange set on those same nodes the system matrix is the
/// identity — each weight is the reference integral of its cardinal
/// function. Weights may be negative. Inside cells shortcut to the exact
/// tensor Gauss weights; Outside cells give an empty rule.
pub fn lagrange_momentfit_rule(
    ls: &LevelSet,
    cell: Rect,
    cfg: &MomentFitConfig,
) -> Result<QuadratureRule> {
    cfg.validate()?;
    let k = 2 * cfg.n_set;
    match classify_cell(ls, cell, cfg.reference.classify_grid)? {
        Classification::Outside => return Ok(QuadratureRule::empty(Provenance::MomentFitLagrange)),
        Classification::Inside => {
            let t = tensor_rule(k, k, cell)?;
            return Ok(QuadratureRule::new(
                t.points().to_vec(),
                t.weights().to_vec(),
                Provenance::MomentFitLagrange,
            )?);
        }
        Classification::Cut => {}
    }

    let nodes = tensor_rule(k, k, cell)?;
    let gauss = gauss_legendre(k)?;
    let xs: Vec<f64> = gauss
        .mapped(cell.x0, cell.x1)
        .map(|(x, _)| x)
        .collect();
    let ys: Vec<f64> = gauss
        .mapped(cell.y0, cell.y1)
        .map(|(y, _)| y)
        .collect();

    let cardinal = |abscissae: &[f64], j: usize, x: f64| {
        let mut v = 1.0;
        for (i, xi) in abscissae.iter().enumerate() {
            if i != j {
                v *= (x - xi) / (abscissae[j] - xi);
            }
        }
        v
    };

    let reference = quadtree_rule(ls, cell, &cfg.reference)?;
    let mut weights = vec![0.0; k * k];
    let mut lx = vec![0.0; k];
    let mut ly = vec![0.0; k];
    for (p, w) in reference.points().iter().zip(reference.weights()) {
        for j in 0..k {
            lx[j] = cardinal(&xs, j, p.x);
            ly[j] = cardinal(&ys, j, p.y);
        }
        for (jy, ly_v) in ly.iter().enumerate() {
            for (jx, lx_v) in lx.iter().enumerate() {
                weights[jy * k + jx] += w * lx_v * ly_v;
            }
        }
    }
    QuadratureRule::new(nodes.points().to_vec(), weights, Provenance::MomentFitLagrange)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{scaled_monomial, test_case};
    use crate::poly::poly2d_jacobian_det;

    fn unit() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn divergence_free_basis_is_divergence_free() {
        let cell = Rect::new(0.25, 0.5, 0.75, 1.25);
        for (gx, gy) in divergence_free_basis(7, cell) {
            let div = gx.partial_x().add(&gy.partial_y());
            assert!(div.is_zero(), "nonzero divergence");
        }
        // Count: Σ_{d=1}^{D} (d+1) monomials.
        assert_eq!(divergence_free_basis(4, cell).len(), 2 + 3 + 4 + 5);
        let _ = poly2d_jacobian_det; // referenced by sibling tests
    }

    #[test]
    fn lagrange_inside_cell_is_double_order_tensor_gauss() {
        let tc = test_case("case1").unwrap();
        // A cell fully below the cut.
        let cell = Rect::new(0.0, 0.0, 0.25, 0.1);
        let cfg = MomentFitConfig::lagrange(2, 3).unwrap();
        let rule = lagrange_momentfit_rule(&tc.level_set, cell, &cfg).unwrap();
        assert_eq!(rule.len(), 16);
        let tensor = tensor_rule(4, 4, cell).unwrap();
        assert_eq!(rule.points(), tensor.points());
        for (a, b) in rule.weights().iter().zip(tensor.weights()) {
            assert!((a - b).abs() <= 1e-15);
        }
    }

    #[test]
    fn lagrange_cut_cell_has_square_node_count() {
        let tc = test_case("case2").unwrap();
        for n_set in [1usize, 2, 3] {
            let cfg = MomentFitConfig::lagrange(n_set, 3).unwrap();
            let rule = lagrange_momentfit_rule(&tc.level_set, unit(), &cfg).unwrap();
            assert_eq!(rule.len(), (2 * n_set) * (2 * n_set));
        }
    }

    #[test]
    fn lagrange_reproduces_cardinal_reference_integrals() {
        // Identity system: applying the fitted rule to each cardinal
        // function returns that node's weight, i.e. the reference integral.
        let tc = test_case("case2").unwrap();
        let cfg = MomentFitConfig::lagrange(2, 3).unwrap();
        let rule = lagrange_momentfit_rule(&tc.level_set, unit(), &cfg).unwrap();
        let k = 4;
        let gauss = gauss_legendre(k).unwrap();
        let xs: Vec<f64> = gauss.mapped(0.0, 1.0).map(|(x, _)| x).collect();
        let cardinal = |j: usize, x: f64| {
            let mut v = 1.0;
            for (i, xi) in xs.iter().enumerate() {
                if i != j {
                    v *= (x - xi) / (xs[j] - xi);
                }
            }
            v
        };
        let reference = quadtree_rule(&tc.level_set, unit(), &cfg.reference).unwrap();
        for jy in 0..k {
            for jx in 0..k {
                let f = |p: Point2| cardinal(jx, p.x) * cardinal(jy, p.y);
                let fitted = rule.integrate(f).unwrap();
                let refval = reference.integrate(f).unwrap();
                assert!(
                    (fitted - refval).abs() <= 1e-12,
                    "cardinal ({jx},{jy}): {fitted} vs {refval}"
                );
            }
        }
    }

    #[test]
    fn lagrange_matches_quadtree_for_interpolated_degrees() {
        // The fitted rule evaluates the reference functional on the
        // interpolant, so both integrals coincide whenever q ≤ 2·n_set − 1.
        for (n_set, q) in [(2usize, 3u32), (3, 4)] {
            let tc = test_case("case2").unwrap();
            let cfg = MomentFitConfig::lagrange(n_set, 3).unwrap();
            let fitted = lagrange_momentfit_rule(&tc.level_set, unit(), &cfg).unwrap();
            let reference = quadtree_rule(&tc.level_set, unit(), &cfg.reference).unwrap();
            let f = scaled_monomial(tc, q);
            let a = fitted.integrate(&f).unwrap();
            let b = reference.integrate(&f).unwrap();
            assert!(
                (a - b).abs() / b.abs().max(1e-300) <= 1e-10,
                "n={n_set} q={q}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn interface_rule_weight_sum_is_interface_length() {
        // Horizontal interface of length 1.
        let ls = LevelSet::polynomial(Poly2D::new(vec![vec![-0.5, 1.0]]));
        let cfg = MomentFitConfig::hmf(2).unwrap();
        let rule = hmf_interface_rule(&ls, unit(), &cfg).unwrap();
        assert!((rule.weight_sum() - 1.0).abs() <= 1e-12, "{}", rule.weight_sum());

        // Inclined interface of case1: length √(1 + 0.6²).
        let tc = test_case("case1").unwrap();
        let rule = hmf_interface_rule(&tc.level_set, unit(), &cfg).unwrap();
        let expect = (1.0f64 + 0.36).sqrt();
        assert!(
            (rule.weight_sum() - expect).abs() <= 1e-10,
            "{} vs {expect}",
            rule.weight_sum()
        );
    }

    #[test]
    fn interface_rule_endpoint_identity() {
        // For g = curl ψ, ∫_I g·n dΓ equals the difference of ψ between the
        // interface endpoints; check the solved right-hand sides against it.
        let tc = test_case("case1").unwrap();
        let cfg = MomentFitConfig::hmf(2).unwrap();
        let (_, system) = hmf_interface_system(&tc.level_set, unit(), &cfg).unwrap();
        let basis = divergence_free_basis(cfg.order() + 1, unit());
        // Interface runs from (0, 0.2) to (1, 0.8); tangential direction is
        // +x for counterclockwise traversal of the active region.
        let cell = unit();
        let local = |p: Point2, a: usize, b: usize| {
            let u = (p.x - cell.center().x) / cell.width();
            let v = (p.y - cell.center().y) / cell.height();
            u.powi(a as i32) * v.powi(b as i32)
        };
        let (pa, pb) = (Point2::new(0.0, 0.2), Point2::new(1.0, 0.8));
        let mut idx = 0;
        for total in 1..=cfg.order() + 1 {
            for a in (0..=total).rev() {
                let b = total - a;
                let expect = local(pb, a, b) - local(pa, a, b);
                let got = system.rhs[idx];
                assert!(
                    (got - expect).abs() <= 1e-11,
                    "ψ = x^{a} y^{b}: rhs {got} vs endpoint difference {expect}"
                );
                idx += 1;
            }
        }
        assert_eq!(idx, basis.len());
    }

    #[test]
    fn interface_rule_empty_on_uncut_cell() {
        let tc = test_case("case1").unwrap();
        let cell = Rect::new(0.0, 0.0, 0.25, 0.1);
        let cfg = MomentFitConfig::hmf(2).unwrap();
        let rule = hmf_interface_rule(&tc.level_set, cell, &cfg).unwrap();
        assert!(rule.is_empty());
    }

    #[test]
    fn volume_rule_bypasses_inside_cells() {
        let tc = test_case("case1").unwrap();
        let cell = Rect::new(0.0, 0.0, 0.25, 0.1);
        let cfg = MomentFitConfig::hmf(3).unwrap();
        let rule = hmf_volume_rule(&tc.level_set, cell, &cfg).unwrap();
        let tensor = tensor_rule(3, 3, cell).unwrap();
        assert_eq!(rule.points(), tensor.points());
        assert_eq!(rule.weights(), tensor.weights());
    }

    #[test]
    fn volume_rule_machine_precision_areas() {
        let cfg = MomentFitConfig::hmf(2).unwrap();
        for id in ["case1", "case2"] {
            let tc = test_case(id).unwrap();
            let (rule, system) = hmf_volume_system(&tc.level_set, unit(), &cfg).unwrap();
            assert_eq!(rule.len(), 16, "{id}: 16 nodes at n_set = 2");
            let area = rule.integrate(|_| 1.0).unwrap();
            let rel = (area - tc.reference_area).abs() / tc.reference_area;
            assert!(rel <= 1e-12, "{id}: area error {rel:.3e}");
            let rhs_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                system.residual <= 1e-10 * (1.0 + rhs_norm),
                "{id}: residual {:.3e}",
                system.residual
            );
        }
    }

    #[test]
    fn volume_rule_integrates_low_monomials() {
        let tc = test_case("case2").unwrap();
        let cfg = MomentFitConfig::hmf(3).unwrap();
        let rule = hmf_volume_rule(&tc.level_set, unit(), &cfg).unwrap();
        let f = scaled_monomial(tc, 2);
        let got = rule.integrate(&f).unwrap();
        let want = tc.reference(2).unwrap();
        let rel = (got - want).abs() / want.abs();
        assert!(rel <= 1e-10, "q=2 error {rel:.3e}");
    }

    #[test]
    fn volume_weight_sum_tracks_moment_zero() {
        let tc = test_case("case2").unwrap();
        for n_set in [1usize, 2, 3, 4] {
            let cfg = MomentFitConfig::hmf(n_set).unwrap();
            let (rule, system) = hmf_volume_system(&tc.level_set, unit(), &cfg).unwrap();
            // Constant basis function is moment 0.
            let diff = (rule.weight_sum() - system.rhs[0]).abs();
            assert!(
                diff <= 1e-9 * (1.0 + system.rhs[0].abs()) + system.residual,
                "n={n_set}: Σw − rhs₀ = {diff:.3e}"
            );
        }
    }

    #[test]
    fn residuals_small_for_low_orders() {
        for id in ["case1", "case2"] {
            let tc = test_case(id).unwrap();
            for n_set in 1..=4usize {
                let cfg = MomentFitConfig::hmf(n_set).unwrap();
                let (_, system) = hmf_volume_system(&tc.level_set, unit(), &cfg).unwrap();
                let rhs_norm = system.rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(
                    system.residual <= 1e-10 * (1.0 + rhs_norm),
                    "{id} n={n_set}: {:.3e}",
                    system.residual
                );
            }
        }
    }

    #[test]
    fn config_guards() {
        assert!(MomentFitConfig::hmf(0).is_err());
        assert!(MomentFitConfig::hmf(60).is_err());
        let mut cfg = MomentFitConfig::hmf(2).unwrap();
        cfg.safety_surface = 0.5;
        assert!(cfg.validate().is_err());
    }
}
