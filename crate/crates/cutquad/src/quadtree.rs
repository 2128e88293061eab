//! Quadtree rule generation on cut cells: recursive bisection to a fixed
//! depth with either masked Gauss points or a marching-squares tessellation
//! on the finest level.

use crate::geometry::{classify_cell, Classification, LevelSet};
use crate::quad::{tensor_rule, triangle_rule, Point2, Provenance, QuadratureRule, Rect};
use crate::{Error, Result};

/// Hard cap on emitted points per generated rule.
pub const MAX_RULE_POINTS: usize = 10_000_000;

/// Leaf handling on the lowest subdivision level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafMode {
    /// Tensor Gauss points with points at φ > 0 discarded.
    MaskedGauss,
    /// Marching-squares polygonization and per-triangle simplex rules.
    Tessellate,
}

/// Parameters of the quadtree generator.
#[derive(Debug, Clone, Copy)]
pub struct QuadtreeConfig {
    /// Points per direction in leaf rules.
    pub n_set: usize,
    /// Number of subdivision levels ℓ.
    pub depth: u32,
    pub mode: LeafMode,
    /// Sample grid for the inside/outside cell check.
    pub classify_grid: usize,
}

impl QuadtreeConfig {
    pub fn new(n_set: usize, depth: u32, mode: LeafMode) -> Result<Self> {
        let cfg = Self {
            n_set,
            depth,
            mode,
            classify_grid: 5,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_set == 0 || self.n_set > crate::quad::MAX_GAUSS_N {
            return Err(Error::InvalidParameter(format!(
                "n_set {} outside 1..={}",
                self.n_set,
                crate::quad::MAX_GAUSS_N
            )));
        }
        if self.depth > 14 {
            return Err(Error::InvalidParameter(format!(
                "subdivision depth {} exceeds 14",
                self.depth
            )));
        }
        if self.classify_grid < 2 {
            return Err(Error::InvalidParameter(
                "classification grid must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

/// Builds a quadtree rule on `cell`: Cut cells are recursively bisected to
/// depth ℓ, Inside cells at any level receive a mapped tensor rule, Outside
/// cells contribute nothing, and Cut leaves are handled per [`LeafMode`].
pub fn quadtree_rule(ls: &LevelSet, cell: Rect, cfg: &QuadtreeConfig) -> Result<QuadratureRule> {
    cfg.validate()?;
    let provenance = match cfg.mode {
        LeafMode::MaskedGauss => Provenance::Quadtree,
        LeafMode::Tessellate => Provenance::Tessellate,
    };
    let mut rule = QuadratureRule::empty(provenance);
    descend(ls, cell, cfg, cfg.depth, &mut rule)?;
    Ok(rule)
}

fn check_budget(rule: &QuadratureRule, adding: usize) -> Result<()> {
    if rule.len() + adding > MAX_RULE_POINTS {
        return Err(Error::ResourceLimit(format!(
            "quadtree rule exceeds {MAX_RULE_POINTS} points"
        )));
    }
    Ok(())
}

fn descend(
    ls: &LevelSet,
    cell: Rect,
    cfg: &QuadtreeConfig,
    remaining: u32,
    rule: &mut QuadratureRule,
) -> Result<()> {
    match classify_cell(ls, cell, cfg.classify_grid)? {
        Classification::Outside => Ok(()),
        Classification::Inside => {
            check_budget(rule, cfg.n_set * cfg.n_set)?;
            rule.extend_from(&tensor_rule(cfg.n_set, cfg.n_set, cell)?);
            Ok(())
        }
        Classification::Cut => {
            if remaining > 0 {
                // Morton child order keeps assembly deterministic.
                for quadrant in cell.quadrants() {
                    descend(ls, quadrant, cfg, remaining - 1, rule)?;
                }
                return Ok(());
            }
            match cfg.mode {
                LeafMode::MaskedGauss => {
                    let tensor = tensor_rule(cfg.n_set, cfg.n_set, cell)?;
                    check_budget(rule, tensor.len())?;
                    for (p, w) in tensor.points().iter().zip(tensor.weights()) {
                        let v = ls.value(*p);
                        if !v.is_finite() {
                            return Err(Error::NonFiniteEval { x: p.x, y: p.y });
                        }
                        if v <= 0.0 {
                            rule.push(*p, *w);
                        }
                    }
                    Ok(())
                }
                LeafMode::Tessellate => {
                    for tri in tessellate_leaf(ls, cell)? {
                        let tri_rule = triangle_rule(cfg.n_set, tri)?;
                        check_budget(rule, tri_rule.len())?;
                        rule.extend_from(&tri_rule);
                    }
                    Ok(())
                }
            }
        }
    }
}

/// Marching-squares polygonization of a leaf's active part from the four
/// corner values of φ, with linear interpolation along sign-changing edges,
/// fan-triangulated from the lowest-index polygon vertex. The ambiguous
/// saddle pattern is resolved by the sign of φ at the cell center.
pub fn tessellate_leaf(ls: &LevelSet, cell: Rect) -> Result<Vec<[Point2; 3]>> {
    let corners = cell.corners();
    let mut values = [0.0f64; 4];
    for (v, c) in values.iter_mut().zip(&corners) {
        *v = ls.value(*c);
        if !v.is_finite() {
            return Err(Error::NonFiniteEval { x: c.x, y: c.y });
        }
    }
    let active = [
        values[0] <= 0.0,
        values[1] <= 0.0,
        values[2] <= 0.0,
        values[3] <= 0.0,
    ];
    let crossing = |a: usize, b: usize| {
        let t = values[a] / (values[a] - values[b]);
        Point2::new(
            corners[a].x + (corners[b].x - corners[a].x) * t,
            corners[a].y + (corners[b].y - corners[a].y) * t,
        )
    };

    let saddle = active[0] == active[2] && active[1] == active[3] && active[0] != active[1];
    if saddle {
        let center_active = {
            let c = cell.center();
            let v = ls.value(c);
            if !v.is_finite() {
                return Err(Error::NonFiniteEval { x: c.x, y: c.y });
            }
            v <= 0.0
        };
        if center_active {
            // Active band connecting the two opposite corners through the
            // center: a single hexagon from the boundary walk.
            let mut polygon = Vec::with_capacity(6);
            for i in 0..4 {
                if active[i] {
                    polygon.push(corners[i]);
                }
                let j = (i + 1) % 4;
                if active[i] != active[j] {
                    polygon.push(crossing(i, j));
                }
            }
            return Ok(fan_triangulate(&polygon, cell));
        }
        // Two disconnected corner triangles.
        let (a, b) = if active[0] { (0, 2) } else { (1, 3) };
        let mut tris = Vec::new();
        for corner in [a, b] {
            let prev = (corner + 3) % 4;
            let next = (corner + 1) % 4;
            let polygon = vec![
                corners[corner],
                crossing(corner, next),
                crossing(corner, prev),
            ];
            tris.extend(fan_triangulate(&polygon, cell));
        }
        return Ok(tris);
    }

    // Non-ambiguous patterns: one boundary walk collects active corners and
    // edge crossings in order.
    let mut polygon = Vec::with_capacity(6);
    for i in 0..4 {
        if active[i] {
            polygon.push(corners[i]);
        }
        let j = (i + 1) % 4;
        if active[i] != active[j] {
            polygon.push(crossing(i, j));
        }
    }
    Ok(fan_triangulate(&polygon, cell))
}

/// Fan triangulation pivoting on the first polygon vertex after dropping
/// near-duplicate consecutive vertices; triangles below a relative area
/// floor are discarded.
fn fan_triangulate(polygon: &[Point2], cell: Rect) -> Vec<[Point2; 3]> {
    let tol = 1e-14 * (cell.width() + cell.height());
    let mut verts: Vec<Point2> = Vec::with_capacity(polygon.len());
    for p in polygon {
        if verts
            .iter()
            .all(|q| (p.x - q.x).abs() > tol || (p.y - q.y).abs() > tol)
        {
            verts.push(*p);
        }
    }
    if verts.len() < 3 {
        return Vec::new();
    }
    let area_floor = 1e-16 * cell.area();
    let pivot = verts[0];
    let mut tris = Vec::with_capacity(verts.len() - 2);
    for k in 1..verts.len() - 1 {
        let (b, c) = (verts[k], verts[k + 1]);
        let area2 = (b.x - pivot.x) * (c.y - pivot.y) - (c.x - pivot.x) * (b.y - pivot.y);
        if area2.abs() * 0.5 > area_floor {
            tris.push([pivot, b, c]);
        }
    }
    tris
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{test_case, BackgroundMesh};
    use crate::poly::Poly2D;

    fn unit() -> Rect {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    fn graph_ls(coeffs: Vec<Vec<f64>>) -> LevelSet {
        LevelSet::polynomial(Poly2D::new(coeffs))
    }

    fn tri_area(t: &[Point2; 3]) -> f64 {
        0.5 * ((t[1].x - t[0].x) * (t[2].y - t[0].y) - (t[2].x - t[0].x) * (t[1].y - t[0].y)).abs()
    }

    #[test]
    fn inside_cell_reduces_to_tensor_rule() {
        let ls = graph_ls(vec![vec![-5.0, 1.0]]); // y − 5 ≤ 0 on the unit square
        for mode in [LeafMode::MaskedGauss, LeafMode::Tessellate] {
            let cfg = QuadtreeConfig::new(2, 3, mode).unwrap();
            let rule = quadtree_rule(&ls, unit(), &cfg).unwrap();
            let tensor = tensor_rule(2, 2, unit()).unwrap();
            assert_eq!(rule.points(), tensor.points());
            assert_eq!(rule.weights(), tensor.weights());
            assert!((rule.weight_sum() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn tessellate_reproduces_linear_cut_exactly() {
        let tc = test_case("case1").unwrap();
        let cfg = QuadtreeConfig::new(1, 0, LeafMode::Tessellate).unwrap();
        let rule = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
        assert!((rule.weight_sum() - 0.5).abs() / 0.5 <= 1e-13);
    }

    #[test]
    fn tessellate_error_shrinks_with_depth_on_case2() {
        let tc = test_case("case2").unwrap();
        let area = tc.reference_area;
        let err_at = |depth: u32| {
            let cfg = QuadtreeConfig::new(1, depth, LeafMode::Tessellate).unwrap();
            let rule = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
            (rule.weight_sum() - area).abs() / area
        };
        let e1 = err_at(1);
        let e3 = err_at(3);
        assert!(e3 <= 5e-3, "depth-3 error {e3}");
        assert!(e3 < e1, "no improvement: {e1} vs {e3}");
    }

    #[test]
    fn tessellate_leaf_halfplane_and_corner() {
        let ls = graph_ls(vec![vec![-0.5, 1.0]]); // y − 0.5
        let tris = tessellate_leaf(&ls, unit()).unwrap();
        assert_eq!(tris.len(), 2);
        let total: f64 = tris.iter().map(tri_area).sum();
        assert!((total - 0.5).abs() < 1e-15);

        // x + y − 0.5: one active corner.
        let ls = graph_ls(vec![vec![-0.5, 1.0], vec![1.0]]);
        let tris = tessellate_leaf(&ls, unit()).unwrap();
        assert_eq!(tris.len(), 1);
        assert!((tri_area(&tris[0]) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn tessellate_leaf_full_cover_inside_disk() {
        let tc = test_case("disk").unwrap();
        // A small leaf well inside the disk: all corners active.
        let leaf = Rect::new(0.45, 0.45, 0.55, 0.55);
        let tris = tessellate_leaf(&tc.level_set, leaf).unwrap();
        assert_eq!(tris.len(), 2);
        let total: f64 = tris.iter().map(tri_area).sum();
        assert!((total - leaf.area()).abs() < 1e-15);
    }

    #[test]
    fn tessellate_leaf_all_sign_patterns() {
        // Drive all 16 corner patterns through bilinear fields hitting the
        // requested corner signs.
        let corners = unit().corners();
        for mask in 0..16u32 {
            let want: Vec<bool> = (0..4).map(|i| mask & (1 << i) != 0).collect();
            let vals: Vec<f64> = want.iter().map(|a| if *a { -1.0 } else { 1.0 }).collect();
            let v = vals.clone();
            let ls = LevelSet::generic(
                move |p: Point2| {
                    let (x, y) = (p.x, p.y);
                    v[0] * (1.0 - x) * (1.0 - y)
                        + v[1] * x * (1.0 - y)
                        + v[2] * x * y
                        + v[3] * (1.0 - x) * y
                },
                |_| Point2::new(0.0, 0.0),
            );
            let tris = tessellate_leaf(&ls, unit()).unwrap();
            let total: f64 = tris.iter().map(tri_area).sum();
            assert!(total <= 1.0 + 1e-12, "pattern {mask}: area {total}");
            let n_active = want.iter().filter(|a| **a).count();
            match n_active {
                0 => assert!(tris.is_empty()),
                4 => assert!((total - 1.0).abs() < 1e-12),
                _ => assert!(total > 0.0 && total < 1.0, "pattern {mask}: area {total}"),
            }
            for (i, corner) in corners.iter().enumerate() {
                assert_eq!(ls.value(*corner) <= 0.0, want[i]);
            }
        }
    }

    #[test]
    fn saddle_resolved_by_center_sample() {
        // Bilinear saddle with active SW/NE corners; the center value picks
        // the topology.
        for (center_sign, expect_connected) in [(-1.0, true), (1.0, false)] {
            let ls = LevelSet::generic(
                move |p: Point2| {
                    let (x, y) = (p.x, p.y);
                    let saddle = -(1.0 - x) * (1.0 - y) + x * (1.0 - y) - x * y + (1.0 - x) * y;
                    saddle + center_sign * 0.8 * x * (1.0 - x) * y * (1.0 - y) * 4.0
                },
                |_| Point2::new(0.0, 0.0),
            );
            let tris = tessellate_leaf(&ls, unit()).unwrap();
            if expect_connected {
                assert!(tris.len() >= 4, "band should fan into ≥ 4 triangles");
            } else {
                assert_eq!(tris.len(), 2, "two separated corner triangles");
            }
        }
    }

    #[test]
    fn partition_of_measure_over_leaves() {
        // Inside, Cut and Outside leaf areas partition the cell at any
        // depth.
        for tc in crate::geometry::catalog() {
            let ls = &tc.level_set;
            for depth in [0u32, 2, 4] {
                let mut total = 0.0;
                let mut stack = vec![(unit(), depth)];
                while let Some((cell, d)) = stack.pop() {
                    match classify_cell(ls, cell, 5).unwrap() {
                        Classification::Cut if d > 0 => {
                            stack.extend(cell.quadrants().map(|q| (q, d - 1)));
                        }
                        _ => total += cell.area(),
                    }
                }
                assert!(
                    (total - 1.0).abs() <= 1e-12,
                    "case {} depth {depth}: {total}",
                    tc.id
                );
            }
        }
    }

    #[test]
    fn tessellate_weights_match_triangle_areas() {
        let tc = test_case("case2").unwrap();
        let cfg = QuadtreeConfig::new(1, 2, LeafMode::Tessellate).unwrap();
        let rule = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
        // n_set = 1: every triangle contributes its area as a single weight.
        let mut geometric = 0.0;
        let mut stack = vec![(unit(), 2u32)];
        while let Some((cell, d)) = stack.pop() {
            match classify_cell(&tc.level_set, cell, 5).unwrap() {
                Classification::Outside => {}
                Classification::Inside => geometric += cell.area(),
                Classification::Cut if d > 0 => {
                    stack.extend(cell.quadrants().map(|q| (q, d - 1)));
                }
                Classification::Cut => {
                    geometric += tessellate_leaf(&tc.level_set, cell)
                        .unwrap()
                        .iter()
                        .map(tri_area)
                        .sum::<f64>();
                }
            }
        }
        assert!((rule.weight_sum() - geometric).abs() / geometric <= 1e-13);
    }

    #[test]
    fn masked_gauss_discards_outside_points() {
        let tc = test_case("case1").unwrap();
        let cfg = QuadtreeConfig::new(3, 1, LeafMode::MaskedGauss).unwrap();
        let rule = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
        for p in rule.points() {
            assert!(tc.level_set.value(*p) <= 0.0);
        }
        assert!(!rule.is_empty());
    }

    #[test]
    fn deterministic_rules() {
        let tc = test_case("disk").unwrap();
        let cfg = QuadtreeConfig::new(2, 3, LeafMode::Tessellate).unwrap();
        let a = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
        let b = quadtree_rule(&tc.level_set, unit(), &cfg).unwrap();
        assert_eq!(a.points(), b.points());
        assert_eq!(a.weights(), b.weights());
    }

    #[test]
    fn masked_gauss_errors_fall_under_mesh_refinement() {
        let tc = test_case("case2").unwrap();
        let cfg = QuadtreeConfig::new(2, 3, LeafMode::MaskedGauss).unwrap();
        let mut errs = Vec::new();
        for n_ele in [4usize, 8, 16] {
            let mesh = BackgroundMesh::new(tc.domain, n_ele, n_ele).unwrap();
            let mut area = 0.0;
            for cell in mesh.cells() {
                area += quadtree_rule(&tc.level_set, cell, &cfg)
                    .unwrap()
                    .weight_sum();
            }
            errs.push((area - tc.reference_area).abs() / tc.reference_area);
        }
        assert!(errs[2] < errs[0], "errors {errs:?}");
    }
}
