//! The discrete primal problem: minimize sum_e h(theta_e) L_e over
//! multi-material flows on a geometric candidate graph with prescribed
//! boundary. The LP's equality duals are the node potentials, so every solve
//! carries its own optimality certificate.

use serde::{Deserialize, Serialize};

use crate::chains::{Atom0, PointChain0, PolyChain1, Segment};
use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm_inf, scale, sub};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::norm::PolyhedralNorm;

/// Nodes with positions and undirected edges with a reference orientation
/// (tail, head) and Euclidean lengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct GeometricGraph {
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    lengths: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct GraphData {
    nodes: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphData> for GeometricGraph {
    type Error = Error;
    fn try_from(d: GraphData) -> Result<Self> {
        GeometricGraph::new(d.nodes, d.edges)
    }
}

impl From<GeometricGraph> for GraphData {
    fn from(g: GeometricGraph) -> Self {
        GraphData {
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl GeometricGraph {
    pub fn new(nodes: Vec<Vec<f64>>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Input("graph needs at least one node".into()));
        }
        let n = nodes[0].len();
        if n == 0 || nodes.iter().any(|p| p.len() != n) {
            return Err(Error::Input(
                "node positions have inconsistent dimension".into(),
            ));
        }
        let mut lengths = Vec::with_capacity(edges.len());
        for (i, &(a, b)) in edges.iter().enumerate() {
            if a >= nodes.len() || b >= nodes.len() {
                return Err(Error::Input(format!("edge {i} references a missing node")));
            }
            if a == b {
                return Err(Error::Input(format!("edge {i} is a self-loop")));
            }
            let len = dist(&nodes[a], &nodes[b]);
            if len <= 1e-12 {
                return Err(Error::Input(format!("edge {i} has zero length")));
            }
            lengths.push(len);
        }
        Ok(GeometricGraph {
            nodes,
            edges,
            lengths,
        })
    }

    pub fn n(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn node_at(&self, x: &[f64], tol: f64) -> Option<usize> {
        self.nodes.iter().position(|p| dist(p, x) <= tol)
    }

    /// Unit orientation of edge e, tail -> head.
    pub fn orientation(&self, e: usize) -> Vec<f64> {
        let (a, b) = self.edges[e];
        scale(&sub(&self.nodes[b], &self.nodes[a]), 1.0 / self.lengths[e])
    }

    /// Connected component label per node.
    pub fn components(&self) -> Vec<usize> {
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for &(a, b) in &self.edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        let mut label = vec![usize::MAX; self.nodes.len()];
        let mut next = 0;
        for start in 0..self.nodes.len() {
            if label[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            label[start] = next;
            while let Some(v) = stack.pop() {
                for &other in &adjacency[v] {
                    if label[other] == usize::MAX {
                        label[other] = next;
                        stack.push(other);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowProblem {
    pub graph: GeometricGraph,
    pub boundary: PointChain0,
    pub h: PolyhedralNorm,
}

/// Boundary atoms must coincide with distinct graph nodes; this is the
/// matching tolerance.
pub const ATOM_NODE_TOL: f64 = 1e-9;
const ADMISSIBILITY_TOL: f64 = 1e-8;

impl FlowProblem {
    pub fn new(graph: GeometricGraph, boundary: PointChain0, h: PolyhedralNorm) -> Result<Self> {
        if let Some(m) = boundary.m() {
            if m != h.m() {
                return Err(Error::Input(
                    "boundary weights and norm have different material dimension".into(),
                ));
            }
        }
        if !boundary.is_admissible_boundary(ADMISSIBILITY_TOL) {
            return Err(Error::Input(format!(
                "boundary is not admissible: total weight {:?}",
                boundary.total_weight()
            )));
        }
        let mut seen = Vec::new();
        for (i, a) in boundary.atoms.iter().enumerate() {
            let Some(v) = graph.node_at(&a.x, ATOM_NODE_TOL) else {
                return Err(Error::Input(format!(
                    "boundary atom {i} at {:?} does not coincide with a graph node",
                    a.x
                )));
            };
            if seen.contains(&v) {
                return Err(Error::Input(format!(
                    "two boundary atoms map to the same node {v}"
                )));
            }
            seen.push(v);
        }
        Ok(FlowProblem { graph, boundary, h })
    }

    /// Boundary weight per node (zero off the support).
    pub fn node_weights(&self) -> Vec<Vec<f64>> {
        let m = self.h.m();
        let mut w = vec![vec![0.0; m]; self.graph.nodes().len()];
        for a in &self.boundary.atoms {
            let v = self
                .graph
                .node_at(&a.x, ATOM_NODE_TOL)
                .expect("validated at construction");
            w[v] = a.theta.clone();
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FlowStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub status: FlowStatus,
    /// Multiplicity theta_e per edge, in the reference orientation.
    pub theta: Vec<Vec<f64>>,
    pub cost: f64,
    /// Node potentials (LP equality duals), anchored to zero on one node per
    /// connected component.
    pub potentials: Vec<Vec<f64>>,
    /// Edges with |theta| above the support threshold.
    pub support: Vec<usize>,
    /// An unreachable boundary atom when infeasible.
    pub unreachable_atom: Option<usize>,
}

/// Support pruning threshold, absolute per material.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Assemble the primal LP: variables (theta_e, t_e); objective sum L_e t_e;
/// epigraph rows t_e >= g_k . theta_e per dual vertex; incidence equalities
/// per node and material.
pub fn assemble_flow_lp(p: &FlowProblem) -> Result<LinearProgram> {
    let m = p.h.m();
    let ne = p.graph.edges().len();
    let nv = p.graph.nodes().len();
    if ne == 0 {
        return Err(Error::Input("candidate graph has no edges".into()));
    }
    let block = m + 1;
    let nvars = ne * block;
    let mut objective = vec![0.0; nvars];
    for (e, len) in p.graph.lengths().iter().enumerate() {
        objective[e * block + m] = *len;
    }
    let weights = p.node_weights();
    let mut eq = Vec::with_capacity(nv * m);
    let mut eq_rhs = Vec::with_capacity(nv * m);
    for v in 0..nv {
        for c in 0..m {
            let mut row = vec![0.0; nvars];
            for (e, &(a, b)) in p.graph.edges().iter().enumerate() {
                if b == v {
                    row[e * block + c] += 1.0;
                }
                if a == v {
                    row[e * block + c] -= 1.0;
                }
            }
            eq.push(row);
            eq_rhs.push(weights[v][c]);
        }
    }
    let gs = p.h.dual_vertices();
    let mut ineq = Vec::with_capacity(ne * gs.len());
    let ineq_rhs = vec![0.0; ne * gs.len()];
    for e in 0..ne {
        for g in gs {
            let mut row = vec![0.0; nvars];
            row[e * block..e * block + m].copy_from_slice(g);
            row[e * block + m] = -1.0;
            ineq.push(row);
        }
    }
    LinearProgram::new(objective, eq, eq_rhs, ineq, ineq_rhs)
}

/// Solve the flow problem; potentials come from the LP equality duals.
pub fn solve_flow(p: &FlowProblem) -> Result<FlowSolution> {
    let m = p.h.m();
    let nv = p.graph.nodes().len();
    let lp = assemble_flow_lp(p)?;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Ok(FlowSolution {
                status: FlowStatus::Infeasible,
                theta: Vec::new(),
                cost: 0.0,
                potentials: Vec::new(),
                support: Vec::new(),
                unreachable_atom: unreachable_atom(p),
            })
        }
        LpStatus::Unbounded => {
            return Err(Error::Numerical(
                "flow LP unbounded; norm data must be degenerate".into(),
            ))
        }
    }
    let block = m + 1;
    let theta: Vec<Vec<f64>> = (0..p.graph.edges().len())
        .map(|e| sol.x[e * block..e * block + m].to_vec())
        .collect();
    let mut potentials: Vec<Vec<f64>> = (0..nv)
        .map(|v| sol.y_eq[v * m..(v + 1) * m].to_vec())
        .collect();
    // Anchor: subtract the first node's potential per component.
    let comp = p.graph.components();
    let n_comp = comp.iter().copied().max().unwrap_or(0) + 1;
    for c in 0..n_comp {
        let root = comp.iter().position(|&l| l == c).expect("component label");
        let anchor = potentials[root].clone();
        for (v, phi) in potentials.iter_mut().enumerate() {
            if comp[v] == c {
                *phi = sub(phi, &anchor);
            }
        }
    }
    let support: Vec<usize> = theta
        .iter()
        .enumerate()
        .filter(|(_, t)| norm_inf(t) > SUPPORT_TOL)
        .map(|(e, _)| e)
        .collect();
    Ok(FlowSolution {
        status: FlowStatus::Optimal,
        theta,
        cost: sol.objective,
        potentials,
        support,
        unreachable_atom: None,
    })
}

/// When the LP is infeasible, name a boundary atom whose component's
/// boundary weight cannot cancel.
fn unreachable_atom(p: &FlowProblem) -> Option<usize> {
    let comp = p.graph.components();
    let m = p.h.m();
    let n_comp = comp.iter().copied().max().unwrap_or(0) + 1;
    let mut totals = vec![vec![0.0; m]; n_comp];
    let mut atom_of_comp = vec![None; n_comp];
    for (i, a) in p.boundary.atoms.iter().enumerate() {
        let v = p.graph.node_at(&a.x, ATOM_NODE_TOL)?;
        let c = comp[v];
        totals[c] = crate::linalg::add(&totals[c], &a.theta);
        atom_of_comp[c].get_or_insert(i);
    }
    for (c, t) in totals.iter().enumerate() {
        if norm_inf(t) > ADMISSIBILITY_TOL {
            return atom_of_comp[c];
        }
    }
    p.boundary.atoms.first().map(|_| 0)
}

/// Node-wise signed sums of edge multiplicities under reference
/// orientations: the boundary of the flow.
pub fn divergence(graph: &GeometricGraph, theta: &[Vec<f64>]) -> Result<PointChain0> {
    if theta.len() != graph.edges().len() {
        return Err(Error::Input("one multiplicity per edge required".into()));
    }
    let Some(m) = theta.first().map(|t| t.len()) else {
        return Ok(PointChain0::empty());
    };
    let mut weights = vec![vec![0.0; m]; graph.nodes().len()];
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        if theta[e].len() != m {
            return Err(Error::Input("multiplicities have mixed dimensions".into()));
        }
        for c in 0..m {
            weights[b][c] += theta[e][c];
            weights[a][c] -= theta[e][c];
        }
    }
    PointChain0::new(
        weights
            .into_iter()
            .enumerate()
            .map(|(v, theta)| Atom0 {
                x: graph.nodes()[v].clone(),
                theta,
            })
            .collect(),
    )
}

/// Nonzero edges of a solution as a free polyhedral chain; components below
/// the support threshold are pruned.
pub fn flow_to_polychain(graph: &GeometricGraph, theta: &[Vec<f64>]) -> Result<PolyChain1> {
    if theta.len() != graph.edges().len() {
        return Err(Error::Input("one multiplicity per edge required".into()));
    }
    let mut segments = Vec::new();
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        let pruned: Vec<f64> = theta[e]
            .iter()
            .map(|t| if t.abs() > SUPPORT_TOL { *t } else { 0.0 })
            .collect();
        if norm_inf(&pruned) > 0.0 {
            segments.push(Segment {
                a: graph.nodes()[a].clone(),
                b: graph.nodes()[b].clone(),
                theta: pruned,
            });
        }
    }
    PolyChain1::new(segments)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubadditivityReport {
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_sum: f64,
    /// cost(a + b) <= cost(a) + cost(b) + 1e-7
    pub subadditive: bool,
}

/// Solve the problem for two boundaries and their sum on the same graph and
/// check the merging discount.
pub fn subadditivity_probe(
    graph: &GeometricGraph,
    h: &PolyhedralNorm,
    f0_a: &PointChain0,
    f0_b: &PointChain0,
) -> Result<SubadditivityReport> {
    let solve = |f0: PointChain0| -> Result<f64> {
        let p = FlowProblem::new(graph.clone(), f0, h.clone())?;
        let s = solve_flow(&p)?;
        if s.status != FlowStatus::Optimal {
            return Err(Error::Infeasible("subadditivity probe subproblem".into()));
        }
        Ok(s.cost)
    };
    let cost_a = solve(f0_a.clone())?;
    let cost_b = solve(f0_b.clone())?;
    let cost_sum = solve(f0_a.add(f0_b)?)?;
    Ok(SubadditivityReport {
        cost_a,
        cost_b,
        cost_sum,
        subadditive: cost_sum <= cost_a + cost_b + 1e-7,
    })
}

/// Per-edge CSV table (id, endpoints, theta components, h(theta), length,
/// tightness residual) for plotting.
pub fn edge_table_csv(p: &FlowProblem, sol: &FlowSolution) -> Result<String> {
    use std::fmt::Write as _;
    let m = p.h.m();
    let mut s = String::new();
    s.push_str("edge,tail,head");
    for c in 0..m {
        let _ = write!(s, ",theta{c}");
    }
    s.push_str(",h_theta,length,tightness_residual\n");
    for (e, &(a, b)) in p.graph.edges().iter().enumerate() {
        let theta = &sol.theta[e];
        let h_theta = p.h.eval(theta)?;
        let len = p.graph.lengths()[e];
        let dphi = sub(&sol.potentials[b], &sol.potentials[a]);
        let residual = dot(theta, &dphi) - h_theta * len;
        let _ = write!(s, "{e},{a},{b}");
        for t in theta {
            let _ = write!(s, ",{t}");
        }
        let _ = writeln!(s, ",{h_theta},{len},{residual}");
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::PolyhedralNorm;

    fn hex() -> PolyhedralNorm {
        PolyhedralNorm::hexagonal()
    }

    fn single_edge_problem(theta: [f64; 2]) -> FlowProblem {
        let graph =
            GeometricGraph::new(vec![vec![0.0, 0.0], vec![3.0, 0.0]], vec![(0, 1)]).unwrap();
        let boundary = PointChain0::new(vec![
            Atom0 {
                x: vec![3.0, 0.0],
                theta: theta.to_vec(),
            },
            Atom0 {
                x: vec![0.0, 0.0],
                theta: theta.iter().map(|t| -t).collect(),
            },
        ])
        .unwrap();
        FlowProblem::new(graph, boundary, hex()).unwrap()
    }

    #[test]
    fn single_edge_cost() {
        let p = single_edge_problem([1.0, 1.0]);
        let sol = solve_flow(&p).unwrap();
        assert_eq!(sol.status, FlowStatus::Optimal);
        // h(1,1) = 1 times length 3
        assert!((sol.cost - 3.0).abs() < 1e-9);
        assert!((sol.theta[0][0] - 1.0).abs() < 1e-9);
        // strong duality: phi . F0 = cost
        let dual: f64 = p
            .node_weights()
            .iter()
            .zip(&sol.potentials)
            .map(|(w, phi)| dot(w, phi))
            .sum();
        assert!((dual - sol.cost).abs() < 1e-7 * (1.0 + sol.cost));
    }

    #[test]
    fn epigraph_row_count() {
        let p = single_edge_problem([1.0, 0.0]);
        let lp = assemble_flow_lp(&p).unwrap();
        // 6 dual vertices -> 6 epigraph rows for the single edge
        assert_eq!(lp.ineq.len(), 6);
        assert_eq!(lp.eq.len(), 2 * 2);
    }

    #[test]
    fn divergence_matches_boundary() {
        let p = single_edge_problem([2.0, -1.0]);
        let sol = solve_flow(&p).unwrap();
        let div = divergence(&p.graph, &sol.theta).unwrap();
        for a in &p.boundary.atoms {
            let d = div.weight_at(&a.x).unwrap();
            for (x, y) in d.iter().zip(&a.theta) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn disconnected_boundary_reported() {
        let graph = GeometricGraph::new(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![5.0, 5.0],
                vec![6.0, 5.0],
            ],
            vec![(0, 1), (2, 3)],
        )
        .unwrap();
        let boundary = PointChain0::new(vec![
            Atom0 {
                x: vec![0.0, 0.0],
                theta: vec![-1.0, 0.0],
            },
            Atom0 {
                x: vec![6.0, 5.0],
                theta: vec![1.0, 0.0],
            },
        ])
        .unwrap();
        let p = FlowProblem::new(graph, boundary, hex()).unwrap();
        let sol = solve_flow(&p).unwrap();
        assert_eq!(sol.status, FlowStatus::Infeasible);
        assert!(sol.unreachable_atom.is_some());
    }

    #[test]
    fn merging_discount() {
        // theta = (1,0) and (0,1) between shared endpoints: carrying them
        // together costs h(1,1) = 1, same as each alone.
        let graph =
            GeometricGraph::new(vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![(0, 1)]).unwrap();
        let f0 = |theta: [f64; 2]| {
            PointChain0::new(vec![
                Atom0 {
                    x: vec![1.0, 0.0],
                    theta: theta.to_vec(),
                },
                Atom0 {
                    x: vec![0.0, 0.0],
                    theta: theta.iter().map(|t| -t).collect(),
                },
            ])
            .unwrap()
        };
        let report =
            subadditivity_probe(&graph, &hex(), &f0([1.0, 0.0]), &f0([0.0, 1.0])).unwrap();
        assert!(report.subadditive);
        assert!((report.cost_a - 1.0).abs() < 1e-9);
        assert!((report.cost_b - 1.0).abs() < 1e-9);
        assert!((report.cost_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn pruning_ignores_noise() {
        let graph = GeometricGraph::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]],
            vec![(0, 1), (1, 2), (0, 2)],
        )
        .unwrap();
        let theta = vec![vec![1.0, 0.5], vec![1e-12, -1e-12], vec![0.0, 0.0]];
        let chain = flow_to_polychain(&graph, &theta).unwrap();
        assert_eq!(chain.segments.len(), 1);
    }
}
