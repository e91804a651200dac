//! Reduced divisors on metric graphs.
//!
//! [`reduce`] computes the unique `q`-reduced divisor linearly equivalent to
//! a given divisor. The algorithm works on a *working model*: the input
//! model refined so the divisor's support and the base point are vertices.
//! Two phases run entirely in exact arithmetic:
//!
//! 1. A single electrical-flow step makes the divisor effective away from
//!    `q`. Solving the weighted Laplacian system concentrates the debt at
//!    `q` via a function that is linear on every fragment, so no new support
//!    points appear.
//! 2. Repeated burning from `q` (Dhar's criterion) and firing of the
//!    unburnt region moves chips toward `q` until everything burns. Chips
//!    travel the shortest outgoing fragment length per step, landing points
//!    become vertices of the next round's model, and all positions stay on
//!    a fixed rational lattice, so the loop terminates.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::divisor::{Coeff, Divisor};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, GraphPoint, MetricGraph};
use crate::rational::Rational;

/// The unique `q`-reduced divisor linearly equivalent to `d`: effective
/// away from `q`, and every closed connected subset avoiding `q` has a
/// boundary point with fewer chips than outgoing directions.
pub fn reduce(g: &MetricGraph, d: &Divisor, q: &GraphPoint) -> Result<Divisor> {
    g.validate_point(q)?;
    for p in d.support() {
        g.validate_point(p)?;
    }
    let mut current = make_effective_away_from(g, d, q)?;
    let mut round = 0usize;
    loop {
        let model = WorkingModel::build(g, &current, q);
        let coeffs = model.coeff_vec(&current);
        let qi = model.index_of(q);
        let burn = model.burn(&coeffs, qi);
        if burn.unburnt.is_empty() {
            log::debug!("reduce: everything burnt after {round} firing rounds");
            debug_assert_eq!(current.degree(), d.degree());
            return Ok(current);
        }
        current = model.fire(coeffs, &burn.unburnt, g)?;
        round += 1;
        log::debug!(
            "reduce: round {round}, fired {} unburnt vertices, divisor now {}",
            burn.unburnt.len(),
            current.describe(g)
        );
    }
}

/// Whether `d` is already `q`-reduced: effective away from `q` and burning
/// from `q` consumes the whole graph.
pub fn is_reduced(g: &MetricGraph, d: &Divisor, q: &GraphPoint) -> Result<bool> {
    g.validate_point(q)?;
    for p in d.support() {
        g.validate_point(p)?;
    }
    if d.iter().any(|(p, c)| c < 0 && p != q) {
        return Ok(false);
    }
    let model = WorkingModel::build(g, d, q);
    let coeffs = model.coeff_vec(d);
    let burn = model.burn(&coeffs, model.index_of(q));
    Ok(burn.unburnt.is_empty())
}

/// A divisor together with the base point it is reduced at.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ReducedDivisor {
    base: GraphPoint,
    divisor: Divisor,
}

impl ReducedDivisor {
    /// Reduces `d` at `q`.
    pub fn compute(g: &MetricGraph, d: &Divisor, q: &GraphPoint) -> Result<ReducedDivisor> {
        Ok(ReducedDivisor {
            base: q.clone(),
            divisor: reduce(g, d, q)?,
        })
    }

    pub fn base(&self) -> &GraphPoint {
        &self.base
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    pub fn into_divisor(self) -> Divisor {
        self.divisor
    }
}

/// Phase 1: one exact electrical-flow firing that clears every negative
/// coefficient away from `q` without creating new support points.
fn make_effective_away_from(g: &MetricGraph, d: &Divisor, q: &GraphPoint) -> Result<Divisor> {
    let model = WorkingModel::build(g, d, q);
    let coeffs = model.coeff_vec(d);
    let qi = model.index_of(q);
    let n = model.verts.len();
    let bad: Vec<usize> = (0..n).filter(|&i| i != qi && coeffs[i] < 0).collect();
    if bad.is_empty() {
        return Ok(d.clone());
    }

    // Demand: clear each debt once, absorbing everything at q.
    let mut demand = vec![BigRational::zero(); n];
    let mut total = BigInt::zero();
    for &b in &bad {
        let need = BigInt::from(-coeffs[b]);
        total += &need;
        demand[b] = BigRational::from_integer(need);
    }
    demand[qi] = BigRational::from_integer(-total);

    // Weighted Laplacian L (conductance 1/length per fragment, loops drop
    // out) with the q row and column removed; solve L phi = demand.
    let mut unknown_of = vec![usize::MAX; n];
    let mut vert_of = Vec::with_capacity(n - 1);
    for i in 0..n {
        if i != qi {
            unknown_of[i] = vert_of.len();
            vert_of.push(i);
        }
    }
    let m = vert_of.len();
    let mut a = vec![vec![BigRational::zero(); m]; m];
    let mut rhs: Vec<BigRational> = vert_of.iter().map(|&i| demand[i].clone()).collect();
    for frag in &model.frags {
        let (u, w) = frag.ends;
        if u == w {
            continue;
        }
        let c = frag.len.as_big().recip();
        for (x, y) in [(u, w), (w, u)] {
            if x == qi {
                continue;
            }
            let xi = unknown_of[x];
            a[xi][xi] += &c;
            if y != qi {
                a[xi][unknown_of[y]] -= &c;
            }
        }
    }
    let phi_reduced = solve_exact(a, &mut rhs);
    let mut phi = vec![BigRational::zero(); n];
    for (k, &i) in vert_of.iter().enumerate() {
        phi[i] = phi_reduced[k].clone();
    }

    // Slope of phi on each fragment; N = lcm of slope denominators makes
    // -N*phi a function with integer slopes whose divisor is exactly
    // N*demand.
    let mut scale = BigInt::one();
    for frag in &model.frags {
        let (u, w) = frag.ends;
        if u == w {
            continue;
        }
        let slope = (&phi[w] - &phi[u]) / frag.len.as_big();
        scale = scale.lcm(slope.denom());
    }
    let n_big = scale.abs();
    let n_scale: Coeff = Coeff::try_from(&n_big)
        .unwrap_or_else(|_| panic!("electrical flow scale {n_big} exceeds coefficient range"));
    assert!(n_scale >= 1, "electrical flow scale must be positive");

    let mut out = d.clone();
    for (i, dem) in demand.iter().enumerate() {
        if dem.is_zero() {
            continue;
        }
        let delta = dem * BigRational::from_integer(n_big.clone());
        assert!(delta.is_integer(), "scaled demand must be integral");
        let delta: Coeff = Coeff::try_from(delta.numer())
            .unwrap_or_else(|_| panic!("scaled demand exceeds coefficient range"));
        out.add_at(&model.verts[i], delta);
    }
    debug_assert_eq!(out.degree(), d.degree());
    debug_assert!(out.iter().all(|(p, c)| c >= 0 || p == q));
    log::debug!(
        "reduce: electrical phase cleared {} debts with multiplier {}, divisor now {}",
        bad.len(),
        n_scale,
        out.describe(g)
    );
    Ok(out)
}

/// Gaussian elimination over the rationals; `a` must be invertible, which
/// holds for the reduced Laplacian of a connected model.
fn solve_exact(mut a: Vec<Vec<BigRational>>, b: &mut [BigRational]) -> Vec<BigRational> {
    let m = b.len();
    for col in 0..m {
        let pivot_row = (col..m)
            .find(|&r| !a[r][col].is_zero())
            .expect("reduced Laplacian is invertible");
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col].clone();
        for r in 0..m {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &pivot;
            for c in col..m {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    (0..m).map(|i| &b[i] / &a[i][i]).collect()
}

/// One fragment of the working model: the piece of `edge` between offsets
/// `lo` and `hi`, running between working vertices `ends.0` (at `lo`) and
/// `ends.1` (at `hi`).
struct Frag {
    ends: (usize, usize),
    len: Rational,
    edge: EdgeId,
    lo: Rational,
    hi: Rational,
}

impl Frag {
    fn is_loop(&self) -> bool {
        self.ends.0 == self.ends.1
    }

    fn other_end(&self, v: usize) -> usize {
        if self.ends.0 == v {
            self.ends.1
        } else {
            self.ends.0
        }
    }
}

/// The input model refined so that a divisor's support and the base point
/// are vertices. All vertex identities are input-coordinate [`GraphPoint`]s.
struct WorkingModel {
    verts: Vec<GraphPoint>,
    index: BTreeMap<GraphPoint, usize>,
    frags: Vec<Frag>,
    /// Fragment ids incident to each vertex; a loop fragment appears twice.
    adj: Vec<Vec<usize>>,
}

struct BurnResult {
    /// Vertices the fire never reached, in index order.
    unburnt: Vec<usize>,
}

impl WorkingModel {
    fn build(g: &MetricGraph, d: &Divisor, q: &GraphPoint) -> WorkingModel {
        let mut marked: BTreeSet<GraphPoint> = d.support().cloned().collect();
        marked.insert(q.clone());
        let mut verts: Vec<GraphPoint> = g.vertex_ids().map(GraphPoint::Vertex).collect();
        let mut cuts: Vec<Vec<Rational>> = vec![Vec::new(); g.edge_count()];
        for p in marked {
            if let GraphPoint::OnEdge(e, off) = &p {
                cuts[e.index()].push(off.clone());
                verts.push(p);
            }
        }
        verts.sort();
        let index: BTreeMap<GraphPoint, usize> =
            verts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut frags = Vec::new();
        let mut adj = vec![Vec::new(); verts.len()];
        for e in g.edge_ids() {
            let edge = g.edge(e);
            cuts[e.index()].sort();
            let mut stops = vec![(Rational::zero(), index[&GraphPoint::Vertex(edge.ends().0)])];
            for off in &cuts[e.index()] {
                stops.push((off.clone(), index[&GraphPoint::OnEdge(e, off.clone())]));
            }
            stops.push((edge.length().clone(), index[&GraphPoint::Vertex(edge.ends().1)]));
            for pair in stops.windows(2) {
                let (lo, a) = &pair[0];
                let (hi, b) = &pair[1];
                let id = frags.len();
                frags.push(Frag {
                    ends: (*a, *b),
                    len: hi - lo,
                    edge: e,
                    lo: lo.clone(),
                    hi: hi.clone(),
                });
                adj[*a].push(id);
                adj[*b].push(id);
            }
        }
        WorkingModel {
            verts,
            index,
            frags,
            adj,
        }
    }

    fn index_of(&self, p: &GraphPoint) -> usize {
        self.index[p]
    }

    fn coeff_vec(&self, d: &Divisor) -> Vec<Coeff> {
        let mut out = vec![0; self.verts.len()];
        for (p, c) in d.iter() {
            out[self.index[p]] = c;
        }
        out
    }

    /// Dhar burning from `q`: fire spreads through any fragment with a burnt
    /// endpoint, and a vertex burns once more directions burn at it than it
    /// has chips. Unreached vertices form the maximal saturated region.
    fn burn(&self, coeffs: &[Coeff], q: usize) -> BurnResult {
        let mut burnt_v = vec![false; self.verts.len()];
        let mut burnt_f = vec![false; self.frags.len()];
        let mut burnt_dirs = vec![0 as Coeff; self.verts.len()];
        let mut queue = vec![q];
        burnt_v[q] = true;
        while let Some(v) = queue.pop() {
            for &fid in &self.adj[v] {
                if burnt_f[fid] {
                    continue;
                }
                burnt_f[fid] = true;
                let w = self.frags[fid].other_end(v);
                if burnt_v[w] {
                    continue;
                }
                burnt_dirs[w] += 1;
                if burnt_dirs[w] > coeffs[w] {
                    burnt_v[w] = true;
                    queue.push(w);
                }
            }
        }
        BurnResult {
            unburnt: (0..self.verts.len()).filter(|&v| !burnt_v[v]).collect(),
        }
    }

    /// Fires the unburnt region: every boundary vertex sends chips along
    /// each outgoing fragment; they land at the minimum outgoing fragment
    /// length, with the largest multiplicity that keeps every coefficient
    /// nonnegative.
    fn fire(&self, mut coeffs: Vec<Coeff>, unburnt: &[usize], g: &MetricGraph) -> Result<Divisor> {
        let in_u: BTreeSet<usize> = unburnt.iter().copied().collect();
        // Outgoing fragments, each recorded with its endpoint inside U.
        let mut outgoing: Vec<(usize, usize)> = Vec::new();
        let mut outdeg = vec![0 as Coeff; self.verts.len()];
        for (fid, frag) in self.frags.iter().enumerate() {
            if frag.is_loop() {
                continue;
            }
            let (a, b) = frag.ends;
            match (in_u.contains(&a), in_u.contains(&b)) {
                (true, false) => {
                    outgoing.push((fid, a));
                    outdeg[a] += 1;
                }
                (false, true) => {
                    outgoing.push((fid, b));
                    outdeg[b] += 1;
                }
                _ => {}
            }
        }
        let delta = outgoing
            .iter()
            .map(|&(fid, _)| self.frags[fid].len.clone())
            .reduce(Rational::min)
            .ok_or_else(|| Error::Internal("unburnt region has no outgoing fragments".into()))?;
        let x = unburnt
            .iter()
            .filter(|&&v| outdeg[v] > 0)
            .map(|&v| coeffs[v] / outdeg[v])
            .min()
            .ok_or_else(|| Error::Internal("unburnt region has no boundary".into()))?;
        if x < 1 {
            return Err(Error::Internal(format!(
                "firing multiplicity {x} below 1 contradicts the burning criterion"
            )));
        }
        for &v in unburnt {
            coeffs[v] -= x * outdeg[v];
        }
        let mut landed: BTreeMap<GraphPoint, Coeff> = BTreeMap::new();
        for &(fid, u_end) in &outgoing {
            let frag = &self.frags[fid];
            let off = if frag.ends.0 == u_end {
                &frag.lo + &delta
            } else {
                &frag.hi - &delta
            };
            let p = g.point_on_edge(frag.edge, off)?;
            *landed.entry(p).or_insert(0) += x;
        }
        let mut out = Divisor::zero();
        for (i, &c) in coeffs.iter().enumerate() {
            if c != 0 {
                out.add_at(&self.verts[i], c);
            }
        }
        for (p, c) in landed {
            out.add_at(&p, c);
        }
        Ok(out)
    }
}
