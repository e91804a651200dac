//! Divisors and piecewise-linear functions on a metric graph.
//!
//! A [`Divisor`] is a finite formal integer combination of [`GraphPoint`]s.
//! A [`PLFunction`] is a continuous piecewise-linear function with integer
//! slopes; its [`principal divisor`](PLFunction::principal_divisor) records
//! the sum of outgoing slopes at every point and always has degree zero.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphPoint, MetricGraph, Subdivision};
use crate::rational::Rational;

/// Divisor coefficients. Wide enough that products like `2m * rank bound`
/// never overflow for any input this library can realistically process;
/// arithmetic is still checked so an overflow fails loudly instead of
/// wrapping.
pub type Coeff = i128;

fn checked_add(a: Coeff, b: Coeff) -> Coeff {
    a.checked_add(b).expect("divisor coefficient overflow")
}

/// A finitely supported integer-valued function on points of a metric graph.
///
/// Zero coefficients are never stored, so two divisors are equal as values
/// exactly when they are equal as functions. Points are kept in the
/// deterministic [`GraphPoint`] order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct Divisor {
    coeffs: BTreeMap<GraphPoint, Coeff>,
}

impl Divisor {
    pub fn zero() -> Divisor {
        Divisor::default()
    }

    /// Builds a divisor on `g` from (point, coefficient) terms, validating
    /// every point and summing repeated ones.
    pub fn new(g: &MetricGraph, terms: Vec<(GraphPoint, Coeff)>) -> Result<Divisor> {
        let mut coeffs = BTreeMap::new();
        for (p, c) in terms {
            g.validate_point(&p)?;
            let entry = coeffs.entry(p).or_insert(0);
            *entry = checked_add(*entry, c);
        }
        coeffs.retain(|_, c| *c != 0);
        Ok(Divisor { coeffs })
    }

    /// Builds a divisor from an already-validated map, dropping zeros.
    pub(crate) fn from_map(mut coeffs: BTreeMap<GraphPoint, Coeff>) -> Divisor {
        coeffs.retain(|_, c| *c != 0);
        Divisor { coeffs }
    }

    /// The divisor `k(p)`.
    pub fn single(p: GraphPoint, k: Coeff) -> Divisor {
        let mut coeffs = BTreeMap::new();
        if k != 0 {
            coeffs.insert(p, k);
        }
        Divisor { coeffs }
    }

    pub fn degree(&self) -> Coeff {
        self.coeffs.values().fold(0, |acc, &c| checked_add(acc, c))
    }

    pub fn coeff(&self, p: &GraphPoint) -> Coeff {
        self.coeffs.get(p).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_effective(&self) -> bool {
        self.coeffs.values().all(|&c| c >= 0)
    }

    pub fn support(&self) -> impl Iterator<Item = &GraphPoint> {
        self.coeffs.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&GraphPoint, Coeff)> {
        self.coeffs.iter().map(|(p, &c)| (p, c))
    }

    /// Adds `k` to the coefficient at `p` in place.
    pub fn add_at(&mut self, p: &GraphPoint, k: Coeff) {
        let entry = self.coeffs.entry(p.clone()).or_insert(0);
        *entry = checked_add(*entry, k);
        if *entry == 0 {
            self.coeffs.remove(p);
        }
    }

    /// The divisor with every coefficient multiplied by `k`.
    pub fn scaled(&self, k: Coeff) -> Divisor {
        if k == 0 {
            return Divisor::zero();
        }
        Divisor {
            coeffs: self
                .coeffs
                .iter()
                .map(|(p, &c)| {
                    (
                        p.clone(),
                        c.checked_mul(k).expect("divisor coefficient overflow"),
                    )
                })
                .collect(),
        }
    }

    /// Rewrites every support point through `f` (for example a model
    /// translation), summing coefficients that land on the same point.
    pub fn map_points(&self, mut f: impl FnMut(&GraphPoint) -> GraphPoint) -> Divisor {
        let mut coeffs: BTreeMap<GraphPoint, Coeff> = BTreeMap::new();
        for (p, &c) in &self.coeffs {
            let entry = coeffs.entry(f(p)).or_insert(0);
            *entry = checked_add(*entry, c);
        }
        Divisor::from_map(coeffs)
    }

    /// Human-readable form like `3(u) - (e1@1/2)`; `0` for the zero divisor.
    pub fn describe(&self, g: &MetricGraph) -> String {
        if self.coeffs.is_empty() {
            return "0".to_string();
        }
        let mut out = String::new();
        for (i, (p, &c)) in self.coeffs.iter().enumerate() {
            let mag = c.unsigned_abs();
            if i == 0 {
                if c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
            }
            if mag != 1 {
                let _ = write!(out, "{mag}");
            }
            let _ = write!(out, "({})", g.describe_point(p));
        }
        out
    }
}

impl std::ops::Add<&Divisor> for &Divisor {
    type Output = Divisor;
    fn add(self, rhs: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, &c) in &rhs.coeffs {
            out.add_at(p, c);
        }
        out
    }
}

impl std::ops::Sub<&Divisor> for &Divisor {
    type Output = Divisor;
    fn sub(self, rhs: &Divisor) -> Divisor {
        let mut out = self.clone();
        for (p, &c) in &rhs.coeffs {
            out.add_at(p, -c);
        }
        out
    }
}

impl std::ops::Add for Divisor {
    type Output = Divisor;
    fn add(self, rhs: Divisor) -> Divisor {
        &self + &rhs
    }
}

impl std::ops::Sub for Divisor {
    type Output = Divisor;
    fn sub(self, rhs: Divisor) -> Divisor {
        &self - &rhs
    }
}

impl std::ops::Neg for &Divisor {
    type Output = Divisor;
    fn neg(self) -> Divisor {
        self.scaled(-1)
    }
}

impl std::ops::Neg for Divisor {
    type Output = Divisor;
    fn neg(self) -> Divisor {
        self.scaled(-1)
    }
}

/// Slope profile of a piecewise-linear function along one edge, oriented
/// from the edge's tail end: `breaks` are the interior breakpoints in
/// strictly increasing order and `slopes` has one integer slope per segment,
/// so `slopes.len() == breaks.len() + 1`.
#[derive(Clone, Debug, Default)]
pub struct EdgeProfile {
    pub breaks: Vec<Rational>,
    pub slopes: Vec<i64>,
}

impl EdgeProfile {
    /// A single slope along the whole edge.
    pub fn constant_slope(s: i64) -> EdgeProfile {
        EdgeProfile {
            breaks: Vec::new(),
            slopes: vec![s],
        }
    }
}

/// A continuous piecewise-linear function with integer slopes on a metric
/// graph, stored as a refined model whose vertex set contains every
/// breakpoint, one slope per refined edge, and the value at a base vertex.
#[derive(Clone, Debug)]
pub struct PLFunction {
    base: MetricGraph,
    sub: Subdivision,
    /// Slope on each refined edge, oriented tail to head.
    slopes: Vec<i64>,
    /// Value at each refined vertex.
    values: Vec<Rational>,
}

impl PLFunction {
    /// Builds the function with the given value at the first vertex and the
    /// given slope profile on each edge of `g` (indexed like `g`'s edges).
    ///
    /// Fails if the profiles are malformed or if the slope data is
    /// discontinuous, that is, if propagating values along edges assigns two
    /// different values to some vertex.
    pub fn new(g: &MetricGraph, base_value: Rational, profiles: Vec<EdgeProfile>) -> Result<PLFunction> {
        if profiles.len() != g.edge_count() {
            return Err(Error::Discontinuous(format!(
                "expected {} edge profiles, got {}",
                g.edge_count(),
                profiles.len()
            )));
        }
        let mut break_points = Vec::new();
        for (i, profile) in profiles.iter().enumerate() {
            let e = EdgeId(i);
            if profile.slopes.len() != profile.breaks.len() + 1 {
                return Err(Error::Discontinuous(format!(
                    "edge {} has {} breakpoints but {} slopes",
                    g.edge(e).name(),
                    profile.breaks.len(),
                    profile.slopes.len()
                )));
            }
            let mut prev: Option<&Rational> = None;
            for b in &profile.breaks {
                if !b.is_positive() || b >= g.edge(e).length() {
                    return Err(Error::Discontinuous(format!(
                        "breakpoint {b} outside the interior of edge {}",
                        g.edge(e).name()
                    )));
                }
                if prev.is_some_and(|p| p >= b) {
                    return Err(Error::Discontinuous(format!(
                        "breakpoints on edge {} are not strictly increasing",
                        g.edge(e).name()
                    )));
                }
                prev = Some(b);
                break_points.push(GraphPoint::OnEdge(e, b.clone()));
            }
        }
        let sub = g.subdivide(&break_points)?;

        // One slope per refined edge. Refined edges of one original edge are
        // emitted in offset order, matching the profile's segment order.
        let mut slopes = vec![0i64; sub.refined.edge_count()];
        for (i, profile) in profiles.iter().enumerate() {
            for (seg, &s) in profile.slopes.iter().enumerate() {
                let frag = sub.fragment(EdgeId(i), seg);
                slopes[frag.index()] = s;
            }
        }

        // Propagate values from the base vertex; a conflicting assignment is
        // exactly a continuity violation around some cycle.
        let rg = &sub.refined;
        let mut values: Vec<Option<Rational>> = vec![None; rg.vertex_count()];
        values[0] = Some(base_value);
        let mut queue = vec![crate::graph::VertexId(0)];
        while let Some(v) = queue.pop() {
            let v_val = values[v.index()].clone().expect("queued vertex has a value");
            for &(e, is_tail) in rg.incident(v) {
                let (t, h) = rg.edge(e).ends();
                let w = if is_tail { h } else { t };
                let rise = Rational::from_int(slopes[e.index()]) * rg.edge(e).length().clone();
                let w_val = if is_tail { &v_val + &rise } else { &v_val - &rise };
                match &values[w.index()] {
                    None => {
                        values[w.index()] = Some(w_val);
                        queue.push(w);
                    }
                    Some(existing) => {
                        if *existing != w_val {
                            return Err(Error::Discontinuous(format!(
                                "values disagree at vertex {}: {} vs {}",
                                rg.vertex_name(w),
                                existing,
                                w_val
                            )));
                        }
                    }
                }
            }
        }
        let values = values
            .into_iter()
            .map(|v| v.expect("connected graph reaches every vertex"))
            .collect();
        Ok(PLFunction {
            base: g.clone(),
            sub,
            slopes,
            values,
        })
    }

    /// The constant function.
    pub fn constant(g: &MetricGraph, value: Rational) -> PLFunction {
        let profiles = vec![EdgeProfile::constant_slope(0); g.edge_count()];
        PLFunction::new(g, value, profiles).expect("constant profiles are continuous")
    }

    /// The value of the function at any point of the base model.
    pub fn value_at(&self, p: &GraphPoint) -> Result<Rational> {
        self.base.validate_point(p)?;
        Ok(match self.sub.to_refined(p) {
            GraphPoint::Vertex(v) => self.values[v.index()].clone(),
            GraphPoint::OnEdge(e, off) => {
                let tail = self.sub.refined.edge(e).ends().0;
                let rise = Rational::from_int(self.slopes[e.index()]) * off;
                &self.values[tail.index()] + &rise
            }
        })
    }

    /// The divisor whose coefficient at every point is the sum of the
    /// outgoing slopes of the function there; its degree is always zero.
    /// Support points are reported in base-model coordinates.
    pub fn principal_divisor(&self) -> Divisor {
        let rg = &self.sub.refined;
        let mut coeffs = BTreeMap::new();
        for v in rg.vertex_ids() {
            let mut total: Coeff = 0;
            for &(e, is_tail) in rg.incident(v) {
                let s = self.slopes[e.index()] as Coeff;
                // Walking away from the tail the function changes at rate
                // +slope; away from the head, at rate -slope.
                total = checked_add(total, if is_tail { s } else { -s });
            }
            if total != 0 {
                coeffs.insert(GraphPoint::Vertex(v), total);
            }
        }
        Divisor::from_map(coeffs).map_points(|p| self.sub.to_original(p))
    }
}
