//! Gauss–Legendre rules on the square `[-l, l]²` split along its diagonal.
//!
//! The TOA kernels jump across `q = q'`, so each triangle is integrated on
//! its own. A triangle is pulled back to the unit square by the collapsed
//! map `(u, v) ↦ (q, q') = (-l + 2lu, -l + 2luv)` (and its mirror), which
//! keeps polynomial integrands polynomial.

use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Hard cap on multiply-adds spent assembling one matrix by quadrature.
pub const EVALUATION_BUDGET: usize = 400_000_000;

/// Composite Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl UnitRule {
    pub fn new(order: usize, panels: usize) -> Result<Self> {
        let degree = NonZeroUsize::new(order)
            .ok_or_else(|| Error::ValidationError("panel_order must be positive".into()))?;
        if panels == 0 {
            return Err(Error::ValidationError("panel count must be positive".into()));
        }
        let rule = GaussLegendre::new(degree);
        let width = 1.0 / panels as f64;
        let mut nodes = Vec::with_capacity(order * panels);
        let mut weights = Vec::with_capacity(order * panels);
        for p in 0..panels {
            let left = p as f64 * width;
            for &(x, w) in rule.as_node_weight_pairs() {
                nodes.push(left + 0.5 * width * (x + 1.0));
                weights.push(0.5 * width * w);
            }
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// One outer node of the lower triangle with its inner nodes.
///
/// The lower-triangle points are `(outer, inner[k].0)` with weight
/// `outer_weight * inner[k].1`; the upper triangle uses the same nodes with
/// the roles of `q` and `q'` swapped.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub outer: f64,
    pub outer_weight: f64,
    pub inner: Vec<(f64, f64)>,
}

/// One quadrature point in the `(q, q')` square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquarePoint {
    pub q: f64,
    pub q_prime: f64,
    pub weight: f64,
}

/// Tensor Gauss–Legendre panels on each of the two triangles `q > q'` and
/// `q < q'`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalSplitRule {
    pub panel_order: usize,
    pub panels: usize,
}

impl DiagonalSplitRule {
    pub const MIN_ORDER: usize = 8;

    pub fn new(panel_order: usize, panels: usize) -> Result<Self> {
        if panel_order < Self::MIN_ORDER {
            return Err(Error::ValidationError(format!(
                "panel_order must be at least {}, got {panel_order}",
                Self::MIN_ORDER
            )));
        }
        if panels == 0 {
            return Err(Error::ValidationError("panels must be positive".into()));
        }
        Ok(Self { panel_order, panels })
    }

    pub fn point_count(&self) -> usize {
        2 * (self.panel_order * self.panels).pow(2)
    }

    /// Panels per axis giving at least `8 n_max` nodes across the box, enough
    /// for products of two momentum eigenfunctions up to `|n| = n_max`.
    pub fn auto_panels(panel_order: usize, n_max: usize) -> usize {
        (8 * n_max).div_ceil(panel_order.max(1)).max(1)
    }

    /// The lower triangle as outer lines in `q`.
    pub fn lines(&self, l: f64) -> Result<Vec<Line>> {
        let rule = UnitRule::new(self.panel_order, self.panels)?;
        let side = 2.0 * l;
        Ok(rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&u, &wu)| Line {
                outer: -l + side * u,
                outer_weight: wu * side,
                inner: rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&v, &wv)| (-l + side * u * v, wv * side * u))
                    .collect(),
            })
            .collect())
    }

    /// Points of the lower triangle (`q > q'`) followed by the upper one.
    pub fn points(&self, l: f64) -> Result<Vec<SquarePoint>> {
        let rule = UnitRule::new(self.panel_order, self.panels)?;
        let side = 2.0 * l;
        let mut lower = Vec::with_capacity(rule.len() * rule.len());
        for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
            for (&v, &wv) in rule.nodes.iter().zip(&rule.weights) {
                lower.push(SquarePoint {
                    q: -l + side * u,
                    q_prime: -l + side * u * v,
                    weight: wu * wv * side * side * u,
                });
            }
        }
        let upper: Vec<SquarePoint> = lower
            .iter()
            .map(|p| SquarePoint {
                q: p.q_prime,
                q_prime: p.q,
                weight: p.weight,
            })
            .collect();
        lower.extend(upper);
        Ok(lower)
    }

    /// `∫∫ f(q, q') dq dq'` over `[-l, l]²`.
    pub fn integrate<F>(&self, l: f64, mut f: F) -> Result<f64>
    where
        F: FnMut(f64, f64) -> Result<f64>,
    {
        let mut total = 0.0;
        for p in self.points(l)? {
            total += p.weight * f(p.q, p.q_prime)?;
        }
        Ok(total)
    }

    /// Fails if `per_point` operations at every point exceed the budget.
    pub(crate) fn check_budget(&self, per_point: usize) -> Result<()> {
        check_cost(self.point_count().saturating_mul(per_point.max(1)))
    }
}

/// Fails if `requested` multiply-adds exceed [`EVALUATION_BUDGET`].
pub(crate) fn check_cost(requested: usize) -> Result<()> {
    if requested > EVALUATION_BUDGET {
        Err(Error::QuadratureBudgetExceeded {
            requested,
            budget: EVALUATION_BUDGET,
        })
    } else {
        Ok(())
    }
}
