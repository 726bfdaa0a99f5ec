//! Pose graph data model, cost evaluation, balance detection and the
//! zero-cost spanning-tree construction.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::{rotation, wrap_angle, Pose2D};

/// Default tolerance of [`is_balanced`], in meters and radians.
pub const DEFAULT_BALANCE_TOL: f64 = 1e-6;

/// Relative pose measurement `(Δij, θij)` on the directed edge `tail → head`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeMeasurement {
    pub tail: usize,
    pub head: usize,
    pub delta: Vector2<f64>,
    angle: f64,
}

impl RelativeMeasurement {
    pub fn new(tail: usize, head: usize, dx: f64, dy: f64, angle: f64) -> Self {
        Self {
            tail,
            head,
            delta: Vector2::new(dx, dy),
            angle: wrap_angle(angle),
        }
    }

    pub fn from_pose(tail: usize, head: usize, pose: &Pose2D) -> Self {
        Self::new(tail, head, pose.x(), pose.y(), pose.angle())
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    /// The measurement as the SE(2) element `T_tail⁻¹ T_head`.
    pub fn as_pose(&self) -> Pose2D {
        Pose2D::from_parts(self.delta, self.angle)
    }

    /// `Rij = R(θij)`.
    pub fn rotation(&self) -> Matrix2<f64> {
        rotation(self.angle)
    }

    /// `Dij = [Δx −Δy; Δy Δx]`, so that `Dij rᵢ = Rᵢ Δij`.
    pub fn delta_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.delta.x, -self.delta.y, self.delta.y, self.delta.x)
    }

    pub fn other_end(&self, node: usize) -> usize {
        if self.tail == node {
            self.head
        } else {
            self.tail
        }
    }
}

/// A connected directed pose graph. Edge order is the row order of every
/// incidence-style matrix built from the graph.
///
/// Instances can only be obtained through [`PoseGraph::new`], which runs the
/// index and connectivity checks, so every `PoseGraph` is valid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoseGraph {
    node_count: usize,
    edges: Vec<RelativeMeasurement>,
}

impl PoseGraph {
    /// Validates and builds a graph: node indices must lie in `[0, n)`, no
    /// self-loops, at least two nodes, and the undirected graph must be
    /// connected.
    pub fn new(node_count: usize, edges: Vec<RelativeMeasurement>) -> Result<Self> {
        validate_graph(node_count, &edges)?;
        Ok(Self { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[RelativeMeasurement] {
        &self.edges
    }

    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.node_count
    }

    /// Adjacency lists of `(neighbor, edge index)`, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        adjacency(self.node_count, &self.edges)
    }

    /// Incident edge indices per node, in edge order.
    pub fn incident_edges(&self, node: usize) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.tail == node || e.head == node)
            .map(|(k, _)| k)
            .collect()
    }
}

fn adjacency(node_count: usize, edges: &[RelativeMeasurement]) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); node_count];
    for (k, e) in edges.iter().enumerate() {
        adj[e.tail].push((e.head, k));
        adj[e.head].push((e.tail, k));
    }
    adj
}

/// Checks index ranges and connectivity (BFS). On failure the
/// `DisconnectedGraph` error lists every component.
pub fn validate_graph(node_count: usize, edges: &[RelativeMeasurement]) -> Result<()> {
    if node_count < 2 {
        return Err(Error::TooFewNodes {
            got: node_count,
            min: 2,
        });
    }
    for (k, e) in edges.iter().enumerate() {
        for index in [e.tail, e.head] {
            if index >= node_count {
                return Err(Error::IndexOutOfRange { index, node_count });
            }
        }
        if e.tail == e.head {
            return Err(Error::SelfLoop {
                edge: k,
                node: e.tail,
            });
        }
    }
    let adj = adjacency(node_count, edges);
    let mut component = vec![usize::MAX; node_count];
    let mut components = Vec::new();
    for start in 0..node_count {
        if component[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        component[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if component[v] == usize::MAX {
                    component[v] = id;
                    members.push(v);
                    queue.push_back(v);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    if components.len() > 1 {
        return Err(Error::DisconnectedGraph { components });
    }
    Ok(())
}

/// One pose per node, indexed like the graph's nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseAssignment(pub Vec<Pose2D>);

impl PoseAssignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn poses(&self) -> &[Pose2D] {
        &self.0
    }

    /// Left-multiplies every pose by `transform` (a global rigid motion).
    pub fn transformed(&self, transform: &Pose2D) -> Self {
        Self(self.0.iter().map(|p| transform.compose(p)).collect())
    }

    /// Re-expresses the poses in the frame of node 0, so that node 0 sits at
    /// the origin with zero angle.
    pub fn anchored_at_first(&self) -> Self {
        match self.0.first() {
            Some(first) => self.transformed(&first.inverse()),
            None => self.clone(),
        }
    }
}

/// Sum over edges of `‖(pⱼ − pᵢ) − Dij rᵢ‖² + ‖rⱼ − Rij rᵢ‖²`.
pub fn evaluate_cost(graph: &PoseGraph, assignment: &PoseAssignment) -> Result<f64> {
    if assignment.len() != graph.node_count() {
        return Err(Error::LengthMismatch {
            expected: graph.node_count(),
            got: assignment.len(),
        });
    }
    let poses = assignment.poses();
    let cost = graph
        .edges()
        .iter()
        .map(|e| {
            let (pi, pj) = (&poses[e.tail], &poses[e.head]);
            let ri = pi.rotation_vector();
            let translation = (pj.position - pi.position) - e.delta_matrix() * ri;
            let rot = pj.rotation_vector() - e.rotation() * ri;
            translation.norm_squared() + rot.norm_squared()
        })
        .sum();
    Ok(cost)
}

/// BFS spanning tree rooted at node 0. Neighbors are explored in edge order.
#[derive(Debug, Clone)]
pub struct SpanningTree {
    /// BFS visiting order, starting with the root.
    pub order: Vec<usize>,
    /// Edge index connecting each node to its parent (`None` for the root).
    pub parent_edge: Vec<Option<usize>>,
    /// Edges not in the tree.
    pub chords: Vec<usize>,
}

pub fn bfs_spanning_tree(graph: &PoseGraph) -> SpanningTree {
    let n = graph.node_count();
    let adj = graph.adjacency();
    let mut visited = vec![false; n];
    let mut parent_edge = vec![None; n];
    let mut in_tree = vec![false; graph.edge_count()];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([0usize]);
    visited[0] = true;
    while let Some(u) = queue.pop_front() {
        order.push(u);
        for &(v, k) in &adj[u] {
            if !visited[v] {
                visited[v] = true;
                parent_edge[v] = Some(k);
                in_tree[k] = true;
                queue.push_back(v);
            }
        }
    }
    let chords = (0..graph.edge_count()).filter(|&k| !in_tree[k]).collect();
    SpanningTree {
        order,
        parent_edge,
        chords,
    }
}

fn propagate(graph: &PoseGraph, tree: &SpanningTree) -> Vec<Pose2D> {
    let mut poses = vec![Pose2D::identity(); graph.node_count()];
    for &v in tree.order.iter().skip(1) {
        let k = tree.parent_edge[v].expect("non-root node has a parent edge");
        let e = &graph.edges()[k];
        poses[v] = if e.head == v {
            poses[e.tail].compose(&e.as_pose())
        } else {
            poses[e.head].compose(&e.as_pose().inverse())
        };
    }
    poses
}

/// Chains the measurements along a BFS spanning tree from node 0, which is
/// placed at the origin. Attains zero cost on trees and balanced graphs.
pub fn spanning_tree_solution(graph: &PoseGraph) -> PoseAssignment {
    let tree = bfs_spanning_tree(graph);
    PoseAssignment(propagate(graph, &tree))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Balance {
    pub balanced: bool,
    /// Largest deviation from the identity over all fundamental cycles.
    pub residual: f64,
}

/// Composes the measurements around every fundamental cycle of the BFS tree
/// and checks that each composition is within `tol` of the identity.
///
/// The cycle of chord `(a, b)` is traversed starting at `a`: the chord itself,
/// then back to `a` through the tree.
pub fn is_balanced(graph: &PoseGraph, tol: f64) -> Balance {
    let tree = bfs_spanning_tree(graph);
    let poses = propagate(graph, &tree);
    let residual = tree
        .chords
        .iter()
        .map(|&k| {
            let e = &graph.edges()[k];
            let back = poses[e.head].inverse().compose(&poses[e.tail]);
            e.as_pose().compose(&back).deviation_from_identity()
        })
        .fold(0.0, f64::max);
    Balance {
        balanced: residual <= tol,
        residual,
    }
}
