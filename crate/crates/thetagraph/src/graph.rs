//! Metric graphs, points on them, and model surgery.
//!
//! A [`MetricGraph`] is a connected multigraph with a positive rational
//! length on every edge; loops and parallel edges are allowed. It is a
//! *model* of the underlying metric space: subdividing an edge changes the
//! model but not the space. [`GraphPoint`] addresses any point of the space
//! in the coordinates of a fixed model, either as a vertex or as an interior
//! offset along an edge.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::divisor::Divisor;
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Index of a vertex in a fixed [`MetricGraph`], in input order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VertexId(pub(crate) usize);

impl VertexId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Index of an edge in a fixed [`MetricGraph`], in input order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct EdgeId(pub(crate) usize);

impl EdgeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One edge of a metric graph. Offsets along the edge are measured from
/// `ends().0`.
#[derive(Clone, Debug)]
pub struct Edge {
    name: String,
    ends: (VertexId, VertexId),
    length: Rational,
}

impl Edge {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ends(&self) -> (VertexId, VertexId) {
        self.ends
    }

    pub fn length(&self) -> &Rational {
        &self.length
    }

    pub fn is_loop(&self) -> bool {
        self.ends.0 == self.ends.1
    }
}

/// A point of the metric space, in the coordinates of a fixed model.
///
/// Edge-interior offsets are strictly between 0 and the edge length;
/// offsets 0 and `length` normalize to the vertex form on construction via
/// [`MetricGraph::point_on_edge`]. The derived order (vertices in input
/// order, then edge points by edge and offset) is used everywhere a
/// deterministic ordering of points is needed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GraphPoint {
    Vertex(VertexId),
    OnEdge(EdgeId, Rational),
}

impl GraphPoint {
    pub fn as_vertex(&self) -> Option<VertexId> {
        match self {
            GraphPoint::Vertex(v) => Some(*v),
            GraphPoint::OnEdge(..) => None,
        }
    }
}

/// A direction one can leave a point in: along `edge`, with the offset
/// either increasing or decreasing.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TangentDirection {
    pub at: GraphPoint,
    pub edge: EdgeId,
    pub increasing: bool,
}

/// A connected metric graph with rational edge lengths.
#[derive(Clone, Debug)]
pub struct MetricGraph {
    vertex_names: Vec<String>,
    vertex_index: HashMap<String, VertexId>,
    edges: Vec<Edge>,
    edge_index: HashMap<String, EdgeId>,
    /// Per vertex: every incident edge end, as (edge, true if this vertex is
    /// `ends.0`). A loop contributes two entries at its base vertex.
    incidence: Vec<Vec<(EdgeId, bool)>>,
}

impl MetricGraph {
    /// Builds and validates a graph from named vertices and edges given as
    /// `(edge name, tail name, head name, length)`.
    ///
    /// Rejects empty vertex lists, duplicate names, unknown endpoints,
    /// nonpositive lengths, and disconnected graphs.
    pub fn new(
        vertices: Vec<String>,
        edges: Vec<(String, String, String, Rational)>,
    ) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::Parse("graph has no vertices".into()));
        }
        let mut vertex_index = HashMap::new();
        for (i, name) in vertices.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Parse("empty vertex name".into()));
            }
            if vertex_index.insert(name.clone(), VertexId(i)).is_some() {
                return Err(Error::Parse(format!("duplicate vertex name {name:?}")));
            }
        }
        let mut edge_index = HashMap::new();
        let mut built = Vec::with_capacity(edges.len());
        let mut incidence = vec![Vec::new(); vertices.len()];
        for (i, (name, tail, head, length)) in edges.into_iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Parse("empty edge name".into()));
            }
            if edge_index.insert(name.clone(), EdgeId(i)).is_some() {
                return Err(Error::Parse(format!("duplicate edge name {name:?}")));
            }
            let t = *vertex_index
                .get(&tail)
                .ok_or_else(|| Error::Parse(format!("edge {name:?} references unknown vertex {tail:?}")))?;
            let h = *vertex_index
                .get(&head)
                .ok_or_else(|| Error::Parse(format!("edge {name:?} references unknown vertex {head:?}")))?;
            if !length.is_positive() {
                return Err(Error::Parse(format!(
                    "edge {name:?} has nonpositive length {length}"
                )));
            }
            incidence[t.0].push((EdgeId(i), true));
            incidence[h.0].push((EdgeId(i), false));
            built.push(Edge {
                name,
                ends: (t, h),
                length,
            });
        }
        let graph = MetricGraph {
            vertex_names: vertices,
            vertex_index,
            edges: built,
            edge_index,
            incidence,
        };
        if !graph.is_connected() {
            return Err(Error::Parse("graph is not connected".into()));
        }
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn vertex_id(&self, name: &str) -> Result<VertexId> {
        self.vertex_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown vertex {name:?}")))
    }

    pub fn edge_id(&self, name: &str) -> Result<EdgeId> {
        self.edge_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::Parse(format!("unknown edge {name:?}")))
    }

    /// Incident edge ends at `v` as `(edge, is_tail_end)`; loops appear twice.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, bool)] {
        &self.incidence[v.0]
    }

    /// The point at `offset` from the tail end of `e`, normalized to vertex
    /// form when the offset is 0 or the full length.
    pub fn point_on_edge(&self, e: EdgeId, offset: Rational) -> Result<GraphPoint> {
        let edge = self
            .edges
            .get(e.0)
            .ok_or_else(|| Error::PointNotOnGraph(format!("edge index {} out of range", e.0)))?;
        if offset.is_negative() || &offset > edge.length() {
            return Err(Error::PointNotOnGraph(format!(
                "offset {offset} outside edge {} of length {}",
                edge.name, edge.length
            )));
        }
        if offset.is_zero() {
            Ok(GraphPoint::Vertex(edge.ends.0))
        } else if &offset == edge.length() {
            Ok(GraphPoint::Vertex(edge.ends.1))
        } else {
            Ok(GraphPoint::OnEdge(e, offset))
        }
    }

    pub fn vertex_point(&self, name: &str) -> Result<GraphPoint> {
        Ok(GraphPoint::Vertex(self.vertex_id(name)?))
    }

    /// Checks that `p` is a valid point of this graph (indices in range,
    /// interior offset strictly inside its edge).
    pub fn validate_point(&self, p: &GraphPoint) -> Result<()> {
        match p {
            GraphPoint::Vertex(v) => {
                if v.0 < self.vertex_names.len() {
                    Ok(())
                } else {
                    Err(Error::PointNotOnGraph(format!(
                        "vertex index {} out of range",
                        v.0
                    )))
                }
            }
            GraphPoint::OnEdge(e, off) => {
                let edge = self.edges.get(e.0).ok_or_else(|| {
                    Error::PointNotOnGraph(format!("edge index {} out of range", e.0))
                })?;
                if off.is_positive() && off < edge.length() {
                    Ok(())
                } else {
                    Err(Error::PointNotOnGraph(format!(
                        "offset {off} not interior to edge {}",
                        edge.name
                    )))
                }
            }
        }
    }

    /// Human-readable form of a point: a vertex name or `edge@offset`.
    pub fn describe_point(&self, p: &GraphPoint) -> String {
        match p {
            GraphPoint::Vertex(v) => self.vertex_names[v.0].clone(),
            GraphPoint::OnEdge(e, off) => format!("{}@{}", self.edges[e.0].name, off),
        }
    }

    /// First-Betti-number genus `|E| - |V| + 1` of the connected graph.
    pub fn genus(&self) -> usize {
        self.edges.len() + 1 - self.vertex_names.len()
    }

    /// Number of tangent directions at `p`: the number of incident edge
    /// ends at a vertex (loops count twice), always 2 in an edge interior.
    pub fn valence(&self, p: &GraphPoint) -> Result<usize> {
        self.validate_point(p)?;
        Ok(match p {
            GraphPoint::Vertex(v) => self.incidence[v.0].len(),
            GraphPoint::OnEdge(..) => 2,
        })
    }

    /// All tangent directions at `p`, in edge order.
    pub fn tangent_directions(&self, p: &GraphPoint) -> Result<Vec<TangentDirection>> {
        self.validate_point(p)?;
        Ok(match p {
            GraphPoint::Vertex(v) => self.incidence[v.0]
                .iter()
                .map(|&(e, is_tail)| TangentDirection {
                    at: p.clone(),
                    edge: e,
                    increasing: is_tail,
                })
                .collect(),
            GraphPoint::OnEdge(e, _) => vec![
                TangentDirection {
                    at: p.clone(),
                    edge: *e,
                    increasing: true,
                },
                TangentDirection {
                    at: p.clone(),
                    edge: *e,
                    increasing: false,
                },
            ],
        })
    }

    /// The canonical divisor: coefficient `valence - 2` at every vertex.
    /// Valence-2 model vertices drop out; its degree is `2g - 2`.
    pub fn canonical_divisor(&self) -> Divisor {
        let mut entries = BTreeMap::new();
        for v in self.vertex_ids() {
            let coeff = self.incidence[v.0].len() as i128 - 2;
            if coeff != 0 {
                entries.insert(GraphPoint::Vertex(v), coeff);
            }
        }
        Divisor::from_map(entries)
    }

    fn is_connected(&self) -> bool {
        let n = self.vertex_names.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(e, _) in &self.incidence[v] {
                let (a, b) = self.edges[e.0].ends;
                for w in [a.0, b.0] {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        stack.push(w);
                    }
                }
            }
        }
        count == n
    }

    /// Edges whose interior disconnects the graph, in input order.
    /// Loops and members of parallel classes are never bridges.
    pub fn bridges(&self) -> Vec<EdgeId> {
        let n = self.vertex_names.len();
        let mut disc = vec![usize::MAX; n];
        let mut low = vec![usize::MAX; n];
        let mut timer = 0usize;
        let mut out = Vec::new();
        // Iterative DFS; each frame remembers the edge used to enter so the
        // one parent edge instance is skipped while parallel copies still
        // count as back edges.
        let mut stack: Vec<(usize, Option<EdgeId>, usize)> = Vec::new();
        for root in 0..n {
            if disc[root] != usize::MAX {
                continue;
            }
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            stack.push((root, None, 0));
            while let Some(&mut (v, entry, ref mut idx)) = stack.last_mut() {
                if *idx < self.incidence[v].len() {
                    let (e, _) = self.incidence[v][*idx];
                    *idx += 1;
                    if self.edges[e.0].is_loop() || Some(e) == entry {
                        continue;
                    }
                    let (a, b) = self.edges[e.0].ends;
                    let w = if a.0 == v { b.0 } else { a.0 };
                    if disc[w] == usize::MAX {
                        disc[w] = timer;
                        low[w] = timer;
                        timer += 1;
                        stack.push((w, Some(e), 0));
                    } else {
                        low[v] = low[v].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(parent, _, _)) = stack.last() {
                        let entry_edge = entry.expect("non-root frame has an entry edge");
                        low[parent] = low[parent].min(low[v]);
                        if low[v] > disc[parent] {
                            out.push(entry_edge);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Contracts every bridge, merging its endpoints. Genus is preserved.
    /// A tree contracts to a single vertex with no edges.
    pub fn contract_bridges(&self) -> Contraction {
        let bridge_set: BTreeSet<EdgeId> = self.bridges().into_iter().collect();
        let n = self.vertex_names.len();
        let mut rep: Vec<usize> = (0..n).collect();
        fn find(rep: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while rep[r] != r {
                r = rep[r];
            }
            let mut c = x;
            while rep[c] != r {
                let next = rep[c];
                rep[c] = r;
                c = next;
            }
            r
        }
        for e in &bridge_set {
            let (a, b) = self.edges[e.0].ends;
            let (ra, rb) = (find(&mut rep, a.0), find(&mut rep, b.0));
            // Root classes at the smaller index so names stay deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            rep[hi] = lo;
        }
        let mut class_of = vec![usize::MAX; n];
        let mut names = Vec::new();
        let mut vertex_map = vec![VertexId(0); n];
        for v in 0..n {
            let r = find(&mut rep, v);
            if class_of[r] == usize::MAX {
                class_of[r] = names.len();
                names.push(self.vertex_names[r].clone());
            }
            vertex_map[v] = VertexId(class_of[r]);
        }
        let mut edge_map = vec![None; self.edges.len()];
        let mut bridge_target = vec![None; self.edges.len()];
        let mut kept = Vec::new();
        for e in self.edge_ids() {
            let edge = &self.edges[e.0];
            if bridge_set.contains(&e) {
                bridge_target[e.0] = Some(vertex_map[edge.ends.0 .0]);
                continue;
            }
            edge_map[e.0] = Some(EdgeId(kept.len()));
            kept.push((
                edge.name.clone(),
                names[vertex_map[edge.ends.0 .0].0].clone(),
                names[vertex_map[edge.ends.1 .0].0].clone(),
                edge.length.clone(),
            ));
        }
        let graph = MetricGraph::new(names, kept)
            .expect("bridge contraction of a valid graph stays valid");
        Contraction {
            graph,
            vertex_map,
            edge_map,
            bridge_target,
        }
    }

    /// Refines the model by turning the given edge-interior points into
    /// vertices. Vertex points are ignored. The metric space, its genus, and
    /// all divisor theory are unchanged; the returned map translates points
    /// between the two models.
    pub fn subdivide(&self, points: &[GraphPoint]) -> Result<Subdivision> {
        let mut cuts: Vec<BTreeSet<Rational>> = vec![BTreeSet::new(); self.edges.len()];
        for p in points {
            self.validate_point(p)?;
            if let GraphPoint::OnEdge(e, off) = p {
                cuts[e.0].insert(off.clone());
            }
        }
        let mut names = self.vertex_names.clone();
        let mut cut_vertices: Vec<Vec<(Rational, VertexId)>> = Vec::with_capacity(self.edges.len());
        for e in self.edge_ids() {
            let mut at = Vec::new();
            for off in &cuts[e.0] {
                let v = VertexId(names.len());
                names.push(format!("{}@{}", self.edges[e.0].name, off));
                at.push((off.clone(), v));
            }
            cut_vertices.push(at);
        }
        let mut edges = Vec::new();
        let mut fragment_ids: Vec<Vec<(Rational, EdgeId)>> = Vec::with_capacity(self.edges.len());
        let mut origin_of_edge = Vec::new();
        for e in self.edge_ids() {
            let edge = &self.edges[e.0];
            let mut frags = Vec::new();
            if cut_vertices[e.0].is_empty() {
                frags.push((Rational::zero(), EdgeId(edges.len())));
                origin_of_edge.push((e, Rational::zero()));
                edges.push((
                    edge.name.clone(),
                    names[edge.ends.0 .0].clone(),
                    names[edge.ends.1 .0].clone(),
                    edge.length.clone(),
                ));
            } else {
                let mut prev_off = Rational::zero();
                let mut prev_name = names[edge.ends.0 .0].clone();
                let stops = cut_vertices[e.0]
                    .iter()
                    .map(|(off, v)| (off.clone(), names[v.0].clone()))
                    .chain(std::iter::once((
                        edge.length.clone(),
                        names[edge.ends.1 .0].clone(),
                    )));
                for (i, (off, name)) in stops.enumerate() {
                    frags.push((prev_off.clone(), EdgeId(edges.len())));
                    origin_of_edge.push((e, prev_off.clone()));
                    edges.push((
                        format!("{}:{}", edge.name, i),
                        prev_name,
                        name.clone(),
                        &off - &prev_off,
                    ));
                    prev_off = off;
                    prev_name = name;
                }
            }
            fragment_ids.push(frags);
        }
        let origin_of_vertex: Vec<GraphPoint> = self
            .vertex_ids()
            .map(GraphPoint::Vertex)
            .chain(self.edge_ids().flat_map(|e| {
                cut_vertices[e.0]
                    .iter()
                    .map(move |(off, _)| GraphPoint::OnEdge(e, off.clone()))
                    .collect::<Vec<_>>()
            }))
            .collect();
        let refined = MetricGraph::new(names, edges)
            .expect("subdivision of a valid graph stays valid");
        Ok(Subdivision {
            refined,
            cut_vertices,
            fragment_ids,
            origin_of_vertex,
            origin_of_edge,
        })
    }
}

/// Result of [`MetricGraph::contract_bridges`]: the contracted graph plus
/// the point translation collapsing each bridge to its merged vertex.
pub struct Contraction {
    pub graph: MetricGraph,
    vertex_map: Vec<VertexId>,
    edge_map: Vec<Option<EdgeId>>,
    bridge_target: Vec<Option<VertexId>>,
}

impl Contraction {
    /// Image of an original point in the contracted graph. Points inside a
    /// contracted bridge land on the merged endpoint vertex.
    pub fn map_point(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex_map[v.0]),
            GraphPoint::OnEdge(e, off) => match self.edge_map[e.0] {
                Some(new_e) => GraphPoint::OnEdge(new_e, off.clone()),
                None => GraphPoint::Vertex(
                    self.bridge_target[e.0].expect("unmapped edge is a bridge"),
                ),
            },
        }
    }
}

/// Result of [`MetricGraph::subdivide`]: the refined model plus exact point
/// translation in both directions.
#[derive(Clone, Debug)]
pub struct Subdivision {
    pub refined: MetricGraph,
    /// Per original edge: interior cut offsets with their new vertex ids.
    cut_vertices: Vec<Vec<(Rational, VertexId)>>,
    /// Per original edge: fragment start offsets with refined edge ids.
    fragment_ids: Vec<Vec<(Rational, EdgeId)>>,
    /// Refined vertex id -> original point.
    origin_of_vertex: Vec<GraphPoint>,
    /// Refined edge id -> (original edge, start offset of the fragment).
    origin_of_edge: Vec<(EdgeId, Rational)>,
}

impl Subdivision {
    /// The refined edge forming segment `k` (in offset order) of original
    /// edge `e`; an uncut edge is its own segment 0.
    pub fn fragment(&self, e: EdgeId, k: usize) -> EdgeId {
        self.fragment_ids[e.0][k].1
    }

    /// Expresses an original-model point in refined-model coordinates.
    pub fn to_refined(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            // Original vertices keep their indices in the refined model.
            GraphPoint::Vertex(v) => GraphPoint::Vertex(*v),
            GraphPoint::OnEdge(e, off) => {
                if let Some((_, v)) = self.cut_vertices[e.0].iter().find(|(o, _)| o == off) {
                    return GraphPoint::Vertex(*v);
                }
                let frags = &self.fragment_ids[e.0];
                let pos = frags.partition_point(|(start, _)| start < off);
                let (start, frag) = &frags[pos - 1];
                GraphPoint::OnEdge(*frag, off - start)
            }
        }
    }

    /// Expresses a refined-model point in original-model coordinates.
    pub fn to_original(&self, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => self.origin_of_vertex[v.0].clone(),
            GraphPoint::OnEdge(e, off) => {
                let (orig, start) = &self.origin_of_edge[e.0];
                GraphPoint::OnEdge(*orig, start + off)
            }
        }
    }
}

/// The essential model: every valence-2 vertex suppressed by merging its two
/// incident edges. Isometries of the metric space act on this model by
/// graph automorphisms, which is what the involution search relies on.
pub(crate) struct EssentialModel {
    pub graph: MetricGraph,
    /// Per essential edge: the chain of original edges it traverses.
    chains: Vec<Vec<ChainLink>>,
    /// Essential vertex -> original vertex.
    vertex_to_orig: Vec<VertexId>,
    /// Original edge -> (essential edge, index of its link in the chain).
    link_of_edge: Vec<(EdgeId, usize)>,
    /// Original vertex -> essential-model point.
    dest_of_vertex: Vec<GraphPoint>,
}

#[derive(Clone)]
struct ChainLink {
    orig: EdgeId,
    /// Walk direction: false means tail-to-head along the original edge.
    reversed: bool,
    /// Offset within the essential edge where this link starts.
    start: Rational,
}

impl EssentialModel {
    pub fn build(g: &MetricGraph) -> EssentialModel {
        let keep: Vec<bool> = g
            .vertex_ids()
            .map(|v| g.incident(v).len() != 2)
            .collect();
        // A graph whose every vertex has valence 2 is a circle; anchor it at
        // the first vertex so at least one vertex survives.
        let keep = if keep.iter().any(|&k| k) {
            keep
        } else {
            let mut k = keep;
            k[0] = true;
            k
        };
        let mut vertex_to_orig = Vec::new();
        let mut dest_index = vec![usize::MAX; g.vertex_count()];
        let mut names = Vec::new();
        for v in g.vertex_ids() {
            if keep[v.0] {
                dest_index[v.0] = vertex_to_orig.len();
                vertex_to_orig.push(v);
                names.push(g.vertex_name(v).to_string());
            }
        }

        // Walk each maximal chain of suppressed vertices once, starting from
        // each unused edge end at a kept vertex.
        let mut used = vec![[false, false]; g.edge_count()];
        let mut chains: Vec<Vec<ChainLink>> = Vec::new();
        let mut edges = Vec::new();
        let mut link_of_edge = vec![(EdgeId(usize::MAX), usize::MAX); g.edge_count()];
        let mut dest_of_vertex: Vec<Option<GraphPoint>> = g
            .vertex_ids()
            .map(|v| {
                keep[v.0].then(|| GraphPoint::Vertex(VertexId(dest_index[v.0])))
            })
            .collect();
        for start in g.vertex_ids().filter(|v| keep[v.0]) {
            for &(first_edge, is_tail) in g.incident(start) {
                if used[first_edge.0][usize::from(!is_tail)] {
                    continue;
                }
                let mut links = Vec::new();
                let mut total = Rational::zero();
                let mut edge = first_edge;
                let mut forward = is_tail;
                loop {
                    used[edge.0] = [true, true];
                    link_of_edge[edge.0] = (EdgeId(chains.len()), links.len());
                    links.push(ChainLink {
                        orig: edge,
                        reversed: !forward,
                        start: total.clone(),
                    });
                    total += g.edge(edge).length().clone();
                    let (t, h) = g.edge(edge).ends();
                    let next = if forward { h } else { t };
                    if keep[next.0] {
                        // Chain complete: essential edge from `start` to `next`.
                        let name = if links.len() == 1 {
                            g.edge(links[0].orig).name().to_string()
                        } else {
                            links
                                .iter()
                                .map(|l| g.edge(l.orig).name())
                                .collect::<Vec<_>>()
                                .join("+")
                        };
                        edges.push((
                            name,
                            names[dest_index[start.0]].clone(),
                            names[dest_index[next.0]].clone(),
                            total.clone(),
                        ));
                        chains.push(links);
                        break;
                    }
                    // `next` is suppressed; record where it lands and keep
                    // walking out its other edge end.
                    dest_of_vertex[next.0] =
                        Some(GraphPoint::OnEdge(EdgeId(chains.len()), total.clone()));
                    let (e2, tail2) = g
                        .incident(next)
                        .iter()
                        .copied()
                        .find(|&(e2, tail2)| !(e2 == edge && tail2 != forward))
                        .expect("valence-2 vertex has a second edge end");
                    edge = e2;
                    forward = tail2;
                }
            }
        }
        let graph = MetricGraph::new(names, edges)
            .expect("essential model of a valid graph stays valid");
        EssentialModel {
            graph,
            chains,
            vertex_to_orig,
            link_of_edge,
            dest_of_vertex: dest_of_vertex
                .into_iter()
                .map(|d| d.expect("every vertex lies on some chain"))
                .collect(),
        }
    }

    pub fn vertex_to_original(&self, v: VertexId) -> VertexId {
        self.vertex_to_orig[v.0]
    }

    /// Expresses an essential-model point in original coordinates.
    pub fn to_original(&self, g: &MetricGraph, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => GraphPoint::Vertex(self.vertex_to_orig[v.0]),
            GraphPoint::OnEdge(e, off) => {
                let chain = &self.chains[e.0];
                let pos = chain.partition_point(|l| &l.start <= off);
                let link = &chain[pos - 1];
                let local = off - &link.start;
                let orig_off = if link.reversed {
                    g.edge(link.orig).length() - &local
                } else {
                    local
                };
                g.point_on_edge(link.orig, orig_off)
                    .expect("chain offsets stay within their original edge")
            }
        }
    }

    /// Expresses an original-model point in essential coordinates.
    pub fn to_essential(&self, g: &MetricGraph, p: &GraphPoint) -> GraphPoint {
        match p {
            GraphPoint::Vertex(v) => self.dest_of_vertex[v.0].clone(),
            GraphPoint::OnEdge(e, off) => {
                let (ess_edge, idx) = self.link_of_edge[e.0];
                let link = &self.chains[ess_edge.0][idx];
                let local = if link.reversed {
                    g.edge(*e).length() - off
                } else {
                    off.clone()
                };
                self.graph
                    .point_on_edge(ess_edge, &link.start + &local)
                    .expect("link offsets stay within the essential edge")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::{banana, circle, k4, segment, two_circles_with_bridge};

    #[test]
    fn genus_of_standard_graphs() {
        assert_eq!(banana(3, &[2, 2, 2]).genus(), 2);
        assert_eq!(segment().genus(), 0);
        assert_eq!(k4().genus(), 3);
        assert_eq!(circle().genus(), 1);
    }

    #[test]
    fn valence_at_vertices_and_interior_points() {
        let g = banana(3, &[2, 2, 2]);
        let u = g.vertex_point("u").unwrap();
        assert_eq!(g.valence(&u).unwrap(), 3);
        let mid = g
            .point_on_edge(g.edge_id("e1").unwrap(), Rational::one())
            .unwrap();
        assert_eq!(g.valence(&mid).unwrap(), 2);
        let loop_graph = circle();
        let base = loop_graph.vertex_point("x").unwrap();
        assert_eq!(loop_graph.valence(&base).unwrap(), 2);
        assert_eq!(loop_graph.tangent_directions(&base).unwrap().len(), 2);
    }

    #[test]
    fn endpoint_offsets_normalize_to_vertices() {
        let g = banana(3, &[2, 2, 2]);
        let e1 = g.edge_id("e1").unwrap();
        assert_eq!(
            g.point_on_edge(e1, Rational::zero()).unwrap(),
            g.vertex_point("u").unwrap()
        );
        assert_eq!(
            g.point_on_edge(e1, Rational::from_int(2)).unwrap(),
            g.vertex_point("v").unwrap()
        );
        assert!(g.point_on_edge(e1, Rational::from_int(3)).is_err());
    }

    #[test]
    fn canonical_divisor_of_standard_graphs() {
        let g = banana(3, &[2, 2, 2]);
        let k = g.canonical_divisor();
        assert_eq!(k.degree(), 2);
        assert_eq!(k.coeff(&g.vertex_point("u").unwrap()), 1);
        assert_eq!(k.coeff(&g.vertex_point("v").unwrap()), 1);

        let k4_graph = k4();
        let kk = k4_graph.canonical_divisor();
        assert_eq!(kk.degree(), 4);
        for name in ["a", "b", "c", "d"] {
            assert_eq!(kk.coeff(&k4_graph.vertex_point(name).unwrap()), 1);
        }

        assert!(circle().canonical_divisor().is_zero());
        let seg = segment();
        assert_eq!(seg.canonical_divisor().degree(), -2);
    }

    #[test]
    fn rejects_malformed_graphs() {
        assert!(MetricGraph::new(vec![], vec![]).is_err());
        let dup = MetricGraph::new(
            vec!["a".into(), "a".into()],
            vec![("e".into(), "a".into(), "a".into(), Rational::one())],
        );
        assert!(dup.is_err());
        let zero_len = MetricGraph::new(
            vec!["a".into(), "b".into()],
            vec![("e".into(), "a".into(), "b".into(), Rational::zero())],
        );
        assert!(zero_len.is_err());
        let disconnected = MetricGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![("e".into(), "a".into(), "b".into(), Rational::one())],
        );
        assert!(disconnected.is_err());
    }

    #[test]
    fn subdivision_preserves_genus_and_maps_points() {
        let g = banana(3, &[2, 2, 2]);
        let e1 = g.edge_id("e1").unwrap();
        let m1 = g.point_on_edge(e1, Rational::one()).unwrap();
        let quarter = g.point_on_edge(e1, Rational::new(1, 2)).unwrap();
        let sub = g.subdivide(&[m1.clone(), quarter.clone()]).unwrap();
        assert_eq!(sub.refined.genus(), g.genus());
        assert_eq!(sub.refined.vertex_count(), 4);
        assert_eq!(sub.refined.edge_count(), 5);

        let m1_ref = sub.to_refined(&m1);
        assert!(matches!(m1_ref, GraphPoint::Vertex(_)));
        assert_eq!(sub.to_original(&m1_ref), m1);

        let other = g
            .point_on_edge(e1, Rational::new(3, 2))
            .unwrap();
        let other_ref = sub.to_refined(&other);
        assert!(matches!(other_ref, GraphPoint::OnEdge(..)));
        assert_eq!(sub.to_original(&other_ref), other);

        let u = g.vertex_point("u").unwrap();
        assert_eq!(sub.to_original(&sub.to_refined(&u)), u);
    }

    #[test]
    fn bridges_of_standard_graphs() {
        assert!(banana(3, &[2, 2, 2]).bridges().is_empty());
        assert!(k4().bridges().is_empty());
        let g = two_circles_with_bridge();
        let b = g.bridges();
        assert_eq!(b.len(), 1);
        assert_eq!(g.edge(b[0]).name(), "mid");
        assert!(circle().bridges().is_empty());
        let seg = segment();
        assert_eq!(seg.bridges().len(), 1);
    }

    #[test]
    fn contracting_bridges_merges_endpoints() {
        let g = two_circles_with_bridge();
        let c = g.contract_bridges();
        assert_eq!(c.graph.genus(), g.genus());
        assert_eq!(c.graph.vertex_count(), 1);
        assert_eq!(c.graph.edge_count(), 2);
        assert!(c.graph.bridges().is_empty());
        // Idempotent: contracting again changes nothing.
        let again = c.graph.contract_bridges();
        assert_eq!(again.graph.vertex_count(), 1);
        assert_eq!(again.graph.edge_count(), 2);
    }

    #[test]
    fn tree_contracts_to_a_point() {
        let seg = segment();
        let c = seg.contract_bridges();
        assert_eq!(c.graph.vertex_count(), 1);
        assert_eq!(c.graph.edge_count(), 0);
        assert_eq!(c.graph.genus(), 0);
    }

    #[test]
    fn contraction_maps_bridge_points_to_merged_vertex() {
        let g = two_circles_with_bridge();
        let mid_edge = g.edge_id("mid").unwrap();
        let inside = g.point_on_edge(mid_edge, Rational::new(1, 2)).unwrap();
        let c = g.contract_bridges();
        let image = c.map_point(&inside);
        assert_eq!(image, c.map_point(&g.vertex_point("a").unwrap()));
        assert_eq!(image, c.map_point(&g.vertex_point("b").unwrap()));
    }

    #[test]
    fn essential_model_suppresses_valence_two_vertices() {
        let g = banana(3, &[2, 2, 2]);
        let e1 = g.edge_id("e1").unwrap();
        let m1 = g.point_on_edge(e1, Rational::one()).unwrap();
        let sub = g.subdivide(&[m1]).unwrap();
        let em = EssentialModel::build(&sub.refined);
        assert_eq!(em.graph.vertex_count(), 2);
        assert_eq!(em.graph.edge_count(), 3);
        assert_eq!(em.graph.genus(), 2);
        // The suppressed midpoint round-trips through the coordinate maps.
        let mid_refined = sub.to_refined(&g.point_on_edge(e1, Rational::one()).unwrap());
        let in_essential = em.to_essential(&sub.refined, &mid_refined);
        assert_eq!(em.to_original(&sub.refined, &in_essential), mid_refined);
    }
}
