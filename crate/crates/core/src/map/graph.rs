//! Non-directional lane graph: lane segments are edges, junctions are vertices.

use std::collections::{BTreeMap, HashMap};
use std::hash::{DefaultHasher, Hash, Hasher};

use super::{ElementId, MapScene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct LaneGraph {
    pub vertex_count: usize,
    /// Edge of each lane segment as (start vertex, end vertex).
    pub incidence: BTreeMap<ElementId, (VertexId, VertexId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum End {
    Start,
    End,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins so labels do not depend on union order
        if ra < rb {
            self.parent[rb] = ra;
        } else if rb < ra {
            self.parent[ra] = rb;
        }
    }
}

/// Build the lane graph. Endpoints joined by a successor or predecessor link
/// collapse into one vertex. Pedestrian crossings are not part of the graph.
/// Links to ids that are not lane segments are ignored.
pub fn build_lane_graph(scene: &MapScene) -> LaneGraph {
    let ids: Vec<ElementId> = scene.lane_segments.keys().copied().collect();
    let index: HashMap<(ElementId, End), usize> = ids
        .iter()
        .flat_map(|&id| [(id, End::Start), (id, End::End)])
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();

    let mut uf = UnionFind::new(index.len());
    for lane in scene.lane_segments.values() {
        for s in &lane.successors {
            if let Some(&j) = index.get(&(*s, End::Start)) {
                uf.union(index[&(lane.id, End::End)], j);
            }
        }
        for p in &lane.predecessors {
            if let Some(&j) = index.get(&(*p, End::End)) {
                uf.union(index[&(lane.id, End::Start)], j);
            }
        }
    }

    // number vertices by first appearance in id order
    let mut label: HashMap<usize, VertexId> = HashMap::new();
    let mut incidence = BTreeMap::new();
    for &id in &ids {
        let mut vertex = |end| {
            let root = uf.find(index[&(id, end)]);
            let next = VertexId(label.len());
            *label.entry(root).or_insert(next)
        };
        let a = vertex(End::Start);
        let b = vertex(End::End);
        incidence.insert(id, (a, b));
    }
    LaneGraph {
        vertex_count: label.len(),
        incidence,
    }
}

impl LaneGraph {
    pub fn edge_count(&self) -> usize {
        self.incidence.len()
    }

    /// Number of segment endpoints incident to each vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertex_count];
        for &(a, b) in self.incidence.values() {
            deg[a.0] += 1;
            deg[b.0] += 1;
        }
        deg
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.degrees().get(v.0).copied().unwrap_or(0)
    }

    /// Lane segments incident to `v`.
    pub fn incident_edges(&self, v: VertexId) -> Vec<ElementId> {
        self.incidence
            .iter()
            .filter(|(_, &(a, b))| a == v || b == v)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Label-free summary used to decide whether two graphs have the same shape.
    pub fn signature(&self) -> TopologySignature {
        let n = self.vertex_count;
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(a, b) in self.incidence.values() {
            adj[a.0].push(b.0);
            adj[b.0].push(a.0);
        }
        let mut colour: Vec<u64> = adj.iter().map(|nb| nb.len() as u64).collect();
        for _ in 0..WL_ROUNDS {
            colour = (0..n)
                .map(|v| {
                    let mut nb: Vec<u64> = adj[v].iter().map(|&u| colour[u]).collect();
                    nb.sort_unstable();
                    let mut h = DefaultHasher::new();
                    (colour[v], nb).hash(&mut h);
                    h.finish()
                })
                .collect();
        }
        colour.sort_unstable();
        let mut degrees = self.degrees();
        degrees.sort_unstable();
        TopologySignature {
            vertices: n,
            edges: self.edge_count(),
            degrees,
            colours: colour,
        }
    }
}

const WL_ROUNDS: usize = 4;

/// Unlabelled graph invariant: counts, degree sequence and a colour-refinement
/// histogram. Equal signatures are taken to mean an unchanged topology.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopologySignature {
    pub vertices: usize,
    pub edges: usize,
    pub degrees: Vec<usize>,
    colours: Vec<u64>,
}
