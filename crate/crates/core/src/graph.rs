//! Road-network representation.
//!
//! The primal graph models intersections (vertices) and road segments
//! (directed edges). Search, cost modelling and planning all run on the
//! dual graph: every primal edge becomes a *link*, and a dual arc
//! `(a, b)` exists when the head intersection of `a` is the tail of `b`,
//! i.e. when a driver can continue from segment `a` onto segment `b`.
//! Turn context lives on the dual arcs as a maneuver code, so intersection
//! cost can be priced per upstream/downstream pair instead of per vertex.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;

/// Identifier of a primal vertex (intersection). Dense in `[0, n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Identifier of a link (primal edge / dual vertex). Dense in `[0, n)`,
/// used to index every per-link array (costs, features, memory).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LinkId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl LinkId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "l{}", self.0)
    }
}

/// Search direction over the dual adjacency.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Turn classification for a dual arc, from the signed angle between the
/// incoming and outgoing segment directions: `|θ| < 30°` straight,
/// `30° ≤ |θ| < 150°` left/right by sign, otherwise U-turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Maneuver {
    Straight,
    Left,
    Right,
    UTurn,
}

impl Maneuver {
    pub fn from_turn_angle_deg(theta: f64) -> Maneuver {
        let a = theta.abs();
        if a < 30.0 {
            Maneuver::Straight
        } else if a < 150.0 {
            if theta > 0.0 {
                Maneuver::Left
            } else {
                Maneuver::Right
            }
        } else {
            Maneuver::UTurn
        }
    }

    /// Stable categorical code, used as an embedding index.
    pub fn code(self) -> u8 {
        match self {
            Maneuver::Straight => 0,
            Maneuver::Left => 1,
            Maneuver::Right => 2,
            Maneuver::UTurn => 3,
        }
    }

    pub const VOCAB: usize = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("edge {edge} references unknown node {node}")]
    UnknownNode { edge: u32, node: u32 },
    #[error("edge {edge} has non-positive length {length}")]
    NonPositiveLength { edge: u32, length: f64 },
    #[error("node ids must be dense in [0, {expected}), found id {found}")]
    NonDenseNodeIds { expected: usize, found: u32 },
    #[error("edge ids must be dense in [0, {expected}), found id {found}")]
    NonDenseEdgeIds { expected: usize, found: u32 },
    #[error("link {0} out of range (graph has {1} links)")]
    LinkOutOfRange(u32, usize),
    #[error("route is empty")]
    EmptyRoute,
    #[error("links {0} and {1} are not adjacent in the dual graph")]
    NotAdjacent(u32, u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Intersection with planar position (meters).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimalNode {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

/// Directed road segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrimalEdge {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub length_m: f64,
    pub road_class: u8,
    pub fftime_s: f64,
    pub toll: bool,
}

/// Validated, immutable primal road graph.
#[derive(Debug, Clone)]
pub struct PrimalGraph {
    nodes: Vec<PrimalNode>,
    edges: Vec<PrimalEdge>,
}

impl PrimalGraph {
    /// Validates endpoints and lengths and freezes the graph. Node and edge
    /// ids must be dense; records may arrive in any order.
    pub fn build(
        mut nodes: Vec<PrimalNode>,
        mut edges: Vec<PrimalEdge>,
    ) -> Result<PrimalGraph, GraphError> {
        nodes.sort_by_key(|n| n.id);
        for (i, n) in nodes.iter().enumerate() {
            if n.id as usize != i {
                return Err(GraphError::NonDenseNodeIds {
                    expected: nodes.len(),
                    found: n.id,
                });
            }
        }
        edges.sort_by_key(|e| e.id);
        for (i, e) in edges.iter().enumerate() {
            if e.id as usize != i {
                return Err(GraphError::NonDenseEdgeIds {
                    expected: edges.len(),
                    found: e.id,
                });
            }
            if e.from as usize >= nodes.len() {
                return Err(GraphError::UnknownNode {
                    edge: e.id,
                    node: e.from,
                });
            }
            if e.to as usize >= nodes.len() {
                return Err(GraphError::UnknownNode {
                    edge: e.id,
                    node: e.to,
                });
            }
            if !(e.length_m > 0.0) {
                return Err(GraphError::NonPositiveLength {
                    edge: e.id,
                    length: e.length_m,
                });
            }
        }
        Ok(PrimalGraph { nodes, edges })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[PrimalNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[PrimalEdge] {
        &self.edges
    }

    /// Loads a JSON-lines file: one record per node `{id, x, y}` followed by
    /// one per edge `{id, from, to, length_m, road_class, fftime_s, toll}`.
    /// Unknown keys are rejected with the offending line number.
    pub fn load_jsonl(path: &Path) -> Result<PrimalGraph, GraphError> {
        let file = std::fs::File::open(path)?;
        let reader = std::io::BufReader::new(file);
        let mut nodes = Vec::new();
        let mut edges = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: serde_json::Value =
                serde_json::from_str(&line).map_err(|e| GraphError::Parse {
                    line: lineno + 1,
                    msg: e.to_string(),
                })?;
            let is_edge = value.get("from").is_some();
            if is_edge {
                let e: PrimalEdge =
                    serde_json::from_value(value).map_err(|e| GraphError::Parse {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                edges.push(e);
            } else {
                let n: PrimalNode =
                    serde_json::from_value(value).map_err(|e| GraphError::Parse {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                nodes.push(n);
            }
        }
        PrimalGraph::build(nodes, edges)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<(), GraphError> {
        use std::io::Write;
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for n in &self.nodes {
            serde_json::to_writer(&mut out, n).map_err(|e| GraphError::Parse {
                line: 0,
                msg: e.to_string(),
            })?;
            writeln!(out)?;
        }
        for e in &self.edges {
            serde_json::to_writer(&mut out, e).map_err(|e| GraphError::Parse {
                line: 0,
                msg: e.to_string(),
            })?;
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Per-link record in the dual graph. `tail`/`head` are the primal
/// intersections the underlying segment connects.
///
/// Graphs rebuilt from bare adjacency (dataset samples) carry synthesized
/// intersection ids and default segment attributes; consumers of such
/// graphs read link attributes from feature channels instead.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualLink {
    pub tail: NodeId,
    pub head: NodeId,
    pub length_m: f64,
    pub road_class: u8,
    pub fftime_s: f64,
    pub toll: bool,
}

/// Outgoing (or incoming) dual arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DualArc {
    pub to: LinkId,
    pub maneuver: Maneuver,
}

/// Immutable link-level graph. Construction is single-threaded; afterwards
/// the structure is read-only and safe to share across threads.
#[derive(Debug, Clone)]
pub struct DualGraph {
    links: Vec<DualLink>,
    fwd_index: Vec<u32>,
    fwd_arcs: Vec<DualArc>,
    bwd_index: Vec<u32>,
    bwd_arcs: Vec<DualArc>,
    num_nodes: usize,
}

/// Conversion options for [`DualGraph::from_primal`].
#[derive(Debug, Clone, Copy)]
pub struct DualOptions {
    /// Keep dual arcs classified as U-turns. Off by default: most real
    /// intersections forbid them.
    pub allow_u_turn: bool,
}

impl Default for DualOptions {
    fn default() -> Self {
        DualOptions { allow_u_turn: false }
    }
}

impl DualGraph {
    /// Swaps edges and vertices: one link per primal edge, one dual arc per
    /// permitted (incoming, outgoing) pair at each intersection. An empty
    /// primal graph yields an empty dual graph.
    pub fn from_primal(primal: &PrimalGraph, opts: DualOptions) -> DualGraph {
        let n = primal.num_edges();
        let links: Vec<DualLink> = primal
            .edges()
            .iter()
            .map(|e| DualLink {
                tail: NodeId(e.from),
                head: NodeId(e.to),
                length_m: e.length_m,
                road_class: e.road_class,
                fftime_s: e.fftime_s,
                toll: e.toll,
            })
            .collect();

        // incoming / outgoing edge lists per node, in edge-id order
        let mut incoming: Vec<Vec<u32>> = vec![Vec::new(); primal.num_nodes()];
        let mut outgoing: Vec<Vec<u32>> = vec![Vec::new(); primal.num_nodes()];
        for e in primal.edges() {
            incoming[e.to as usize].push(e.id);
            outgoing[e.from as usize].push(e.id);
        }

        let pos = |id: NodeId| {
            let nd = &primal.nodes()[id.idx()];
            (nd.x, nd.y)
        };
        let mut pairs: Vec<(LinkId, LinkId, Maneuver)> = Vec::new();
        for node in 0..primal.num_nodes() {
            for &a in &incoming[node] {
                for &b in &outgoing[node] {
                    let la = &links[a as usize];
                    let lb = &links[b as usize];
                    let (ax, ay) = pos(la.tail);
                    let (nx, ny) = pos(la.head);
                    let (bx, by) = pos(lb.head);
                    let d1 = (nx - ax, ny - ay);
                    let d2 = (bx - nx, by - ny);
                    let cross = d1.0 * d2.1 - d1.1 * d2.0;
                    let dot = d1.0 * d2.0 + d1.1 * d2.1;
                    let theta = if cross == 0.0 && dot == 0.0 {
                        0.0
                    } else {
                        cross.atan2(dot).to_degrees()
                    };
                    let maneuver = Maneuver::from_turn_angle_deg(theta);
                    if maneuver == Maneuver::UTurn && !opts.allow_u_turn {
                        continue;
                    }
                    pairs.push((LinkId(a), LinkId(b), maneuver));
                }
            }
        }
        Self::assemble(links, pairs, primal.num_nodes(), n)
    }

    /// Rebuilds a dual graph from bare link lengths and adjacency pairs,
    /// as stored in dataset samples. Intersection ids are synthesized by
    /// unifying endpoint slots: arc `(a, b)` forces `head(a) = tail(b)`.
    pub fn from_adjacency(
        lengths: &[f64],
        adjacency: &[(LinkId, LinkId)],
    ) -> Result<DualGraph, GraphError> {
        let n = lengths.len();
        for &(a, b) in adjacency {
            for l in [a, b] {
                if l.idx() >= n {
                    return Err(GraphError::LinkOutOfRange(l.0, n));
                }
            }
        }
        // union-find over 2n endpoint slots: slot 2i = tail(i), 2i+1 = head(i)
        let mut parent: Vec<u32> = (0..2 * n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for &(a, b) in adjacency {
            let ra = find(&mut parent, 2 * a.0 + 1);
            let rb = find(&mut parent, 2 * b.0);
            if ra != rb {
                let (keep, drop) = (ra.min(rb), ra.max(rb));
                parent[drop as usize] = keep;
            }
        }
        let mut node_of_root: HashMap<u32, u32> = HashMap::new();
        let mut links = Vec::with_capacity(n);
        for (i, &len) in lengths.iter().enumerate() {
            if !(len > 0.0) {
                return Err(GraphError::NonPositiveLength {
                    edge: i as u32,
                    length: len,
                });
            }
            let rt = find(&mut parent, 2 * i as u32);
            let next = node_of_root.len() as u32;
            let tail = *node_of_root.entry(rt).or_insert(next);
            let rh = find(&mut parent, 2 * i as u32 + 1);
            let next = node_of_root.len() as u32;
            let head = *node_of_root.entry(rh).or_insert(next);
            links.push(DualLink {
                tail: NodeId(tail),
                head: NodeId(head),
                length_m: len,
                road_class: 0,
                fftime_s: len / 10.0,
                toll: false,
            });
        }
        let num_nodes = node_of_root.len();
        let pairs = adjacency
            .iter()
            .map(|&(a, b)| (a, b, Maneuver::Straight))
            .collect();
        Ok(Self::assemble(links, pairs, num_nodes, n))
    }

    fn assemble(
        links: Vec<DualLink>,
        mut pairs: Vec<(LinkId, LinkId, Maneuver)>,
        num_nodes: usize,
        n: usize,
    ) -> DualGraph {
        pairs.sort_by_key(|&(a, b, _)| (a, b));
        pairs.dedup_by_key(|&mut (a, b, _)| (a, b));
        let mut fwd_index = vec![0u32; n + 1];
        for &(a, _, _) in &pairs {
            fwd_index[a.idx() + 1] += 1;
        }
        for i in 0..n {
            fwd_index[i + 1] += fwd_index[i];
        }
        let fwd_arcs: Vec<DualArc> = pairs
            .iter()
            .map(|&(_, b, m)| DualArc { to: b, maneuver: m })
            .collect();

        let mut by_target = pairs.clone();
        by_target.sort_by_key(|&(a, b, _)| (b, a));
        let mut bwd_index = vec![0u32; n + 1];
        for &(_, b, _) in &by_target {
            bwd_index[b.idx() + 1] += 1;
        }
        for i in 0..n {
            bwd_index[i + 1] += bwd_index[i];
        }
        let bwd_arcs: Vec<DualArc> = by_target
            .iter()
            .map(|&(a, _, m)| DualArc { to: a, maneuver: m })
            .collect();

        DualGraph {
            links,
            fwd_index,
            fwd_arcs,
            bwd_index,
            bwd_arcs,
            num_nodes,
        }
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_dual_arcs(&self) -> usize {
        self.fwd_arcs.len()
    }

    pub fn link(&self, id: LinkId) -> &DualLink {
        &self.links[id.idx()]
    }

    pub fn links(&self) -> &[DualLink] {
        &self.links
    }

    pub fn check_link(&self, id: LinkId) -> Result<(), GraphError> {
        if id.idx() >= self.links.len() {
            Err(GraphError::LinkOutOfRange(id.0, self.links.len()))
        } else {
            Ok(())
        }
    }

    /// Successors (forward) or predecessors (backward) of a link, in
    /// ascending link-id order.
    pub fn neighbors(&self, link: LinkId, dir: Direction) -> Result<&[DualArc], GraphError> {
        self.check_link(link)?;
        Ok(self.arcs(link, dir))
    }

    /// Unchecked variant for hot loops; `link` must be in range.
    #[inline]
    pub fn arcs(&self, link: LinkId, dir: Direction) -> &[DualArc] {
        let (index, arcs) = match dir {
            Direction::Forward => (&self.fwd_index, &self.fwd_arcs),
            Direction::Backward => (&self.bwd_index, &self.bwd_arcs),
        };
        let lo = index[link.idx()] as usize;
        let hi = index[link.idx() + 1] as usize;
        &arcs[lo..hi]
    }

    pub fn all_adjacency_pairs(&self) -> Vec<(LinkId, LinkId)> {
        let mut out = Vec::with_capacity(self.fwd_arcs.len());
        for a in 0..self.links.len() {
            for arc in self.arcs(LinkId(a as u32), Direction::Forward) {
                out.push((LinkId(a as u32), arc.to));
            }
        }
        out
    }

    pub fn is_adjacent(&self, a: LinkId, b: LinkId) -> bool {
        self.arcs(a, Direction::Forward)
            .binary_search_by_key(&b, |arc| arc.to)
            .is_ok()
    }

    /// Most common incoming maneuver of a link (ties resolved toward the
    /// smaller code, sources default to straight). Used as the link's
    /// categorical turn-context channel in feature schemas.
    pub fn modal_incoming_maneuver(&self, link: LinkId) -> Maneuver {
        let mut counts = [0usize; Maneuver::VOCAB];
        for arc in self.arcs(link, Direction::Backward) {
            counts[arc.maneuver.code() as usize] += 1;
        }
        let mut best = Maneuver::Straight;
        let mut best_count = 0usize;
        for (code, &c) in counts.iter().enumerate() {
            if c > best_count {
                best_count = c;
                best = match code {
                    0 => Maneuver::Straight,
                    1 => Maneuver::Left,
                    2 => Maneuver::Right,
                    _ => Maneuver::UTurn,
                };
            }
        }
        best
    }

    pub fn total_length(&self, links: &[LinkId]) -> f64 {
        links.iter().map(|l| self.links[l.idx()].length_m).sum()
    }

    /// Induced subgraph over `members` (deduplicated, sorted): link records
    /// are copied, arcs are kept when both endpoints are members, and local
    /// ids follow the sorted order. Returns the graph and the local→global
    /// id map.
    pub fn induced(&self, members: &[LinkId]) -> Result<(DualGraph, Vec<LinkId>), GraphError> {
        let mut globals: Vec<LinkId> = members.to_vec();
        globals.sort();
        globals.dedup();
        let mut local_of = HashMap::with_capacity(globals.len());
        for (i, g) in globals.iter().enumerate() {
            self.check_link(*g)?;
            local_of.insert(*g, i as u32);
        }
        let links: Vec<DualLink> = globals.iter().map(|g| self.links[g.idx()].clone()).collect();
        let mut pairs = Vec::new();
        for (i, g) in globals.iter().enumerate() {
            for arc in self.arcs(*g, Direction::Forward) {
                if let Some(&j) = local_of.get(&arc.to) {
                    pairs.push((LinkId(i as u32), LinkId(j), arc.maneuver));
                }
            }
        }
        let graph = Self::assemble(links, pairs, self.num_nodes, globals.len());
        Ok((graph, globals))
    }
}

/// A path in the dual graph from an origin link to a destination link,
/// both inclusive. Equality and hashing consider the link sequence only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Route {
    links: Vec<LinkId>,
    length_m: f64,
    /// Six route attributes (travel time, distance, toll cost, familiar-road
    /// proportion, traffic-light count, rough-road length) when computed.
    pub attributes: Option<[f64; 6]>,
}

impl PartialEq for Route {
    fn eq(&self, other: &Self) -> bool {
        self.links == other.links
    }
}
impl Eq for Route {}

impl std::hash::Hash for Route {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.links.hash(state);
    }
}

impl Route {
    /// Validates consecutive-adjacency against the graph and caches the
    /// total length.
    pub fn new(links: Vec<LinkId>, graph: &DualGraph) -> Result<Route, GraphError> {
        if links.is_empty() {
            return Err(GraphError::EmptyRoute);
        }
        for l in &links {
            graph.check_link(*l)?;
        }
        for w in links.windows(2) {
            if !graph.is_adjacent(w[0], w[1]) {
                return Err(GraphError::NotAdjacent(w[0].0, w[1].0));
            }
        }
        let length_m = graph.total_length(&links);
        Ok(Route {
            links,
            length_m,
            attributes: None,
        })
    }

    /// Builds without adjacency validation, for callers that reconstruct the
    /// sequence from a search tree and already know it is a path.
    pub fn from_search(links: Vec<LinkId>, graph: &DualGraph) -> Route {
        debug_assert!(!links.is_empty());
        let length_m = graph.total_length(&links);
        Route {
            links,
            length_m,
            attributes: None,
        }
    }

    pub fn links(&self) -> &[LinkId] {
        &self.links
    }

    pub fn length_m(&self) -> f64 {
        self.length_m
    }

    pub fn origin(&self) -> LinkId {
        self.links[0]
    }

    pub fn destination(&self) -> LinkId {
        *self.links.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, link: LinkId) -> bool {
        self.links.contains(&link)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: u32, x: f64, y: f64) -> PrimalNode {
        PrimalNode { id, x, y }
    }

    fn edge(id: u32, from: u32, to: u32) -> PrimalEdge {
        PrimalEdge {
            id,
            from,
            to,
            length_m: 100.0,
            road_class: 0,
            fftime_s: 10.0,
            toll: false,
        }
    }

    #[test]
    fn minimal_graph_builds() {
        let g = PrimalGraph::build(
            vec![node(0, 0.0, 0.0), node(1, 100.0, 0.0)],
            vec![edge(0, 0, 1)],
        )
        .unwrap();
        assert_eq!(g.num_edges(), 1);
        assert_eq!(g.edges()[0].length_m, 100.0);
    }

    #[test]
    fn unknown_node_rejected() {
        let err = PrimalGraph::build(vec![node(0, 0.0, 0.0)], vec![edge(0, 0, 99)]).unwrap_err();
        assert!(err.to_string().contains("unknown node"));
    }

    #[test]
    fn non_positive_length_rejected() {
        let mut e = edge(0, 0, 1);
        e.length_m = 0.0;
        let err =
            PrimalGraph::build(vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0)], vec![e]).unwrap_err();
        assert!(matches!(err, GraphError::NonPositiveLength { .. }));
    }

    #[test]
    fn grid_degrees_match_input() {
        // 4-node square, 8 directed edges (both directions per side)
        let nodes = vec![
            node(0, 0.0, 0.0),
            node(1, 1.0, 0.0),
            node(2, 1.0, 1.0),
            node(3, 0.0, 1.0),
        ];
        let mut edges = Vec::new();
        for (i, (a, b)) in [(0, 1), (1, 2), (2, 3), (3, 0)].iter().enumerate() {
            edges.push(edge(2 * i as u32, *a, *b));
            edges.push(edge(2 * i as u32 + 1, *b, *a));
        }
        let g = PrimalGraph::build(nodes, edges).unwrap();
        assert_eq!(g.num_edges(), 8);
        // independent recount of per-node degree
        let mut outdeg = [0usize; 4];
        let mut indeg = [0usize; 4];
        for e in g.edges() {
            outdeg[e.from as usize] += 1;
            indeg[e.to as usize] += 1;
        }
        assert_eq!(outdeg, [2, 2, 2, 2]);
        assert_eq!(indeg, [2, 2, 2, 2]);
    }

    #[test]
    fn chain_dual_has_one_arc() {
        let g = PrimalGraph::build(
            vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0), node(2, 2.0, 0.0)],
            vec![edge(0, 0, 1), edge(1, 1, 2)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        assert_eq!(d.num_links(), 2);
        assert_eq!(d.num_dual_arcs(), 1);
        assert_eq!(d.arcs(LinkId(0), Direction::Forward)[0].to, LinkId(1));
        assert_eq!(
            d.arcs(LinkId(0), Direction::Forward)[0].maneuver,
            Maneuver::Straight
        );
    }

    #[test]
    fn maneuvers_split_per_outgoing_edge() {
        // incoming edge heading east; one outgoing straight (east), one left (north)
        let g = PrimalGraph::build(
            vec![
                node(0, 0.0, 0.0),
                node(1, 1.0, 0.0),
                node(2, 2.0, 0.0),
                node(3, 1.0, 1.0),
            ],
            vec![edge(0, 0, 1), edge(1, 1, 2), edge(2, 1, 3)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        let arcs = d.arcs(LinkId(0), Direction::Forward);
        assert_eq!(arcs.len(), 2);
        assert_eq!(
            arcs[0],
            DualArc {
                to: LinkId(1),
                maneuver: Maneuver::Straight
            }
        );
        assert_eq!(
            arcs[1],
            DualArc {
                to: LinkId(2),
                maneuver: Maneuver::Left
            }
        );
    }

    #[test]
    fn u_turns_excluded_by_default() {
        let g = PrimalGraph::build(
            vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0)],
            vec![edge(0, 0, 1), edge(1, 1, 0)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        assert_eq!(d.num_dual_arcs(), 0);
        let d2 = DualGraph::from_primal(&g, DualOptions { allow_u_turn: true });
        assert_eq!(d2.num_dual_arcs(), 2);
        assert_eq!(
            d2.arcs(LinkId(0), Direction::Forward)[0].maneuver,
            Maneuver::UTurn
        );
    }

    #[test]
    fn neighbors_validates_ids() {
        let g = PrimalGraph::build(
            vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0)],
            vec![edge(0, 0, 1)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        assert!(d
            .neighbors(LinkId(0), Direction::Forward)
            .unwrap()
            .is_empty());
        assert!(d.neighbors(LinkId(9), Direction::Forward).is_err());
    }

    #[test]
    fn route_validates_adjacency() {
        let g = PrimalGraph::build(
            vec![node(0, 0.0, 0.0), node(1, 1.0, 0.0), node(2, 2.0, 0.0)],
            vec![edge(0, 0, 1), edge(1, 1, 2)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        let r = Route::new(vec![LinkId(0), LinkId(1)], &d).unwrap();
        assert_eq!(r.length_m(), 200.0);
        assert!(Route::new(vec![LinkId(1), LinkId(0)], &d).is_err());
        assert!(Route::new(vec![], &d).is_err());
    }

    #[test]
    fn from_adjacency_round_trips_topology() {
        let g = PrimalGraph::build(
            vec![
                node(0, 0.0, 0.0),
                node(1, 1.0, 0.0),
                node(2, 2.0, 0.0),
                node(3, 1.0, 1.0),
            ],
            vec![edge(0, 0, 1), edge(1, 1, 2), edge(2, 1, 3), edge(3, 3, 2)],
        )
        .unwrap();
        let d = DualGraph::from_primal(&g, DualOptions::default());
        let lengths: Vec<f64> = d.links().iter().map(|l| l.length_m).collect();
        let rebuilt = DualGraph::from_adjacency(&lengths, &d.all_adjacency_pairs()).unwrap();
        assert_eq!(rebuilt.num_links(), d.num_links());
        assert_eq!(rebuilt.all_adjacency_pairs(), d.all_adjacency_pairs());
        // unified endpoints: head of l0 must equal tails of l1 and l2
        let h0 = rebuilt.link(LinkId(0)).head;
        assert_eq!(rebuilt.link(LinkId(1)).tail, h0);
        assert_eq!(rebuilt.link(LinkId(2)).tail, h0);
    }
}
