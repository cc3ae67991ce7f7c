//! Calibration construction and verification: optimality certificates as
//! primal-dual extremality, for graph potentials and for piecewise-constant
//! matrix fields on polytopal regions, plus the momentum balance, the
//! landscape function, and the generic junction-degree estimate.

use serde::{Deserialize, Serialize};

use crate::chains::{PointChain0, PolyChain1, ATOM_MERGE_TOL};
use crate::error::{Error, Result};
use crate::flow::{divergence, FlowProblem, FlowSolution, GeometricGraph};
use crate::linalg::{add, dist, dot, norm1, norm2, norm_inf, scale, sub, Mat};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::norm::{GeneratedNorm, PolyhedralNorm};

const DUAL_FEAS_TOL: f64 = 1e-7;
const VALUE_TOL: f64 = 1e-7;
const CONTINUITY_TOL: f64 = 1e-9;
const FIELD_MEMBERSHIP_TOL: f64 = 1e-9;

/// One R^m value per graph node (units of cost).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub values: Vec<Vec<f64>>,
}

impl Potential {
    pub fn new(values: Vec<Vec<f64>>) -> Result<Self> {
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(Error::Input("potential entries must be finite".into()));
        }
        Ok(Potential { values })
    }

    pub fn from_linear(graph: &GeometricGraph, matrix: &Mat) -> Result<Self> {
        Potential::new(graph.nodes().iter().map(|x| matrix.apply(x)).collect())
    }
}

/// Per-edge dual slack L_e - h_*(phi_head - phi_tail); feasible iff the
/// minimum is >= -tol.
pub fn check_potential(
    graph: &GeometricGraph,
    phi: &Potential,
    h: &PolyhedralNorm,
) -> Result<Vec<f64>> {
    if phi.values.len() != graph.nodes().len() {
        return Err(Error::Input("potential must cover every node".into()));
    }
    let mut slacks = Vec::with_capacity(graph.edges().len());
    for (e, &(a, b)) in graph.edges().iter().enumerate() {
        let dphi = sub(&phi.values[b], &phi.values[a]);
        slacks.push(graph.lengths()[e] - h.eval_dual(&dphi)?);
    }
    Ok(slacks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedOptimal,
    Infeasible,
    GapPositive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub feasible: bool,
    pub continuity_residual: f64,
    pub primal_value: f64,
    pub dual_value: f64,
    pub gap: f64,
    /// Per-edge residual theta . dphi - h(theta) L on the carrying edges.
    pub tightness: Vec<f64>,
    pub verdict: Verdict,
    pub issues: Vec<String>,
}

impl CalibrationReport {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::CertifiedOptimal
    }

    /// CSV of per-edge slack and tightness for plotting.
    pub fn tightness_csv(&self) -> String {
        let mut s = String::from("edge,tightness_residual\n");
        for (e, t) in self.tightness.iter().enumerate() {
            s.push_str(&format!("{e},{t}\n"));
        }
        s
    }
}

/// Verify the primal-dual pair (flow, potential) on a graph: feasibility of
/// both sides plus equality of the functional values.
pub fn verify_calibration_graph(
    problem: &FlowProblem,
    theta: &[Vec<f64>],
    phi: &Potential,
) -> Result<CalibrationReport> {
    let graph = &problem.graph;
    let h = &problem.h;
    let mut issues = Vec::new();

    // Primal feasibility: the flow's divergence must be the boundary.
    let div = divergence(graph, theta)?;
    let mut boundary_ok = true;
    let scale_w = 1.0
        + theta
            .iter()
            .map(|t| norm_inf(t))
            .fold(0.0, f64::max);
    for (v, w) in problem.node_weights().iter().enumerate() {
        let got = div
            .weight_at(&graph.nodes()[v])
            .map(|t| t.to_vec())
            .unwrap_or_else(|| vec![0.0; h.m()]);
        if norm_inf(&sub(&got, w)) > 1e-8 * scale_w {
            boundary_ok = false;
            issues.push(format!("boundary mismatch at node {v}"));
        }
    }

    // Dual feasibility.
    let slacks = check_potential(graph, phi, h)?;
    let min_slack = slacks.iter().copied().fold(f64::INFINITY, f64::min);
    let dual_feasible = min_slack >= -DUAL_FEAS_TOL;
    if !dual_feasible {
        issues.push(format!("potential violates an edge constraint by {min_slack:.3e}"));
    }

    // Values.
    let mut primal_value = 0.0;
    for (e, t) in theta.iter().enumerate() {
        primal_value += h.eval(t)? * graph.lengths()[e];
    }
    let dual_value: f64 = problem
        .node_weights()
        .iter()
        .zip(&phi.values)
        .map(|(w, p)| dot(w, p))
        .sum();
    let gap = (primal_value - dual_value).abs();

    let mut tightness = Vec::with_capacity(theta.len());
    for (e, t) in theta.iter().enumerate() {
        let (a, b) = graph.edges()[e];
        let dphi = sub(&phi.values[b], &phi.values[a]);
        tightness.push(dot(t, &dphi) - h.eval(t)? * graph.lengths()[e]);
    }

    let feasible = boundary_ok && dual_feasible;
    let verdict = if !feasible {
        Verdict::Infeasible
    } else if gap <= VALUE_TOL * (1.0 + primal_value.abs()) {
        Verdict::CertifiedOptimal
    } else {
        Verdict::GapPositive
    };
    Ok(CalibrationReport {
        feasible,
        continuity_residual: 0.0,
        primal_value,
        dual_value,
        gap,
        tightness,
        verdict,
        issues,
    })
}

/// Convenience: verify a solver result against its own potentials.
pub fn verify_solution(problem: &FlowProblem, sol: &FlowSolution) -> Result<CalibrationReport> {
    verify_calibration_graph(
        problem,
        &sol.theta,
        &Potential {
            values: sol.potentials.clone(),
        },
    )
}

/// A closed halfspace {x : normal . x <= offset}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// A convex polytopal region carrying one constant matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub halfspaces: Vec<Halfspace>,
    pub matrix: Mat,
}

/// A region-wise constant matrix field Phi on a working box, a candidate
/// weak Jacobian of a piecewise affine potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseCalibration {
    pub regions: Vec<Region>,
    pub box_min: Vec<f64>,
    pub box_max: Vec<f64>,
}

struct FacetInfo {
    r1: usize,
    r2: usize,
    point: Vec<f64>,
    tangents: Vec<Vec<f64>>,
}

impl PiecewiseCalibration {
    pub fn single(matrix: Mat, box_min: Vec<f64>, box_max: Vec<f64>) -> Self {
        PiecewiseCalibration {
            regions: vec![Region {
                halfspaces: Vec::new(),
                matrix,
            }],
            box_min,
            box_max,
        }
    }

    fn n(&self) -> usize {
        self.box_min.len()
    }

    fn in_region(&self, r: usize, x: &[f64], tol: f64) -> bool {
        self.regions[r]
            .halfspaces
            .iter()
            .all(|hs| dot(&hs.normal, x) <= hs.offset + tol)
            && self.in_box(x, tol)
    }

    fn in_box(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.box_min.iter().zip(&self.box_max))
            .all(|(xi, (lo, hi))| *xi >= lo - tol && *xi <= hi + tol)
    }

    fn strictly_in_region(&self, r: usize, x: &[f64], margin: f64) -> bool {
        self.regions[r]
            .halfspaces
            .iter()
            .all(|hs| dot(&hs.normal, x) < hs.offset - margin * norm2(&hs.normal))
    }

    fn region_of(&self, x: &[f64], tol: f64) -> Option<usize> {
        (0..self.regions.len()).find(|&r| self.in_region(r, x, tol))
    }

    /// Relative-interior point of the shared facet of regions r1, r2 on the
    /// plane of halfspace `hs1` of r1, found by a small max-slack LP. `None`
    /// when the regions do not actually share an (n-1)-face there.
    fn facet_point(&self, r1: usize, r2: usize, hs1: &Halfspace) -> Option<Vec<f64>> {
        let n = self.n();
        // Variables: x (n entries), s. Maximize s.
        let mut objective = vec![0.0; n + 1];
        objective[n] = -1.0;
        let plane_scale = norm2(&hs1.normal);
        let mut eq = vec![{
            let mut row = hs1.normal.clone();
            row.push(0.0);
            row
        }];
        let eq_rhs = vec![hs1.offset];
        let _ = &mut eq;
        let mut ineq = Vec::new();
        let mut ineq_rhs = Vec::new();
        for (r, hs) in self.regions[r1]
            .halfspaces
            .iter()
            .map(|h| (r1, h))
            .chain(self.regions[r2].halfspaces.iter().map(|h| (r2, h)))
        {
            let _ = r;
            // skip the two halfspaces defining the shared plane itself
            let par = parallel_opposite(&hs.normal, hs.offset, &hs1.normal, hs1.offset);
            let same = dist(&hs.normal, &hs1.normal) <= 1e-12 * (1.0 + plane_scale)
                && (hs.offset - hs1.offset).abs() <= 1e-12 * (1.0 + hs1.offset.abs());
            if par || same {
                continue;
            }
            let mut row = hs.normal.clone();
            row.push(norm2(&hs.normal).max(1e-12));
            ineq.push(row);
            ineq_rhs.push(hs.offset);
        }
        let mut bounds: Vec<(Option<f64>, Option<f64>)> = self
            .box_min
            .iter()
            .zip(&self.box_max)
            .map(|(lo, hi)| (Some(*lo), Some(*hi)))
            .collect();
        bounds.push((None, Some(1.0)));
        let lp = LinearProgram::with_bounds(objective, eq, eq_rhs, ineq, ineq_rhs, bounds).ok()?;
        let sol = solve_lp(&lp).ok()?;
        if sol.status != LpStatus::Optimal {
            return None;
        }
        let s = sol.x[n];
        if s > 1e-7 {
            Some(sol.x[..n].to_vec())
        } else {
            None
        }
    }

    fn facets(&self) -> Vec<FacetInfo> {
        let mut out = Vec::new();
        for r1 in 0..self.regions.len() {
            for r2 in r1 + 1..self.regions.len() {
                for hs1 in &self.regions[r1].halfspaces {
                    let shares_plane = self.regions[r2].halfspaces.iter().any(|hs2| {
                        parallel_opposite(&hs1.normal, hs1.offset, &hs2.normal, hs2.offset)
                    });
                    if !shares_plane {
                        continue;
                    }
                    if let Some(point) = self.facet_point(r1, r2, hs1) {
                        out.push(FacetInfo {
                            r1,
                            r2,
                            point,
                            tangents: tangent_basis(&hs1.normal),
                        });
                        break;
                    }
                }
            }
        }
        out
    }

    /// Reconstruct the continuous piecewise affine potential phi_r(x) =
    /// Phi_r x + c_r with c = 0 on the root region; errors carry the
    /// violating facet cycle.
    fn reconstruct_constants(&self, facets: &[FacetInfo]) -> Result<Vec<Vec<f64>>> {
        let m = self.regions[0].matrix.rows();
        let nr = self.regions.len();
        let origin = vec![0.0; self.n()];
        let root = self.region_of(&origin, CONTINUITY_TOL).unwrap_or(0);
        let mut constants: Vec<Option<Vec<f64>>> = vec![None; nr];
        constants[root] = Some(vec![0.0; m]);
        let mut queue = vec![root];
        while let Some(r) = queue.pop() {
            let c_r = constants[r].clone().expect("queued regions have constants");
            for f in facets {
                let (a, b) = (f.r1, f.r2);
                let other = if a == r {
                    b
                } else if b == r {
                    a
                } else {
                    continue;
                };
                // phi continuity at the facet point: c_other = c_r + (Phi_r - Phi_other) x*
                let jump = self.regions[r]
                    .matrix
                    .sub(&self.regions[other].matrix)
                    .apply(&f.point);
                let c_other = add(&c_r, &jump);
                match &constants[other] {
                    None => {
                        constants[other] = Some(c_other);
                        queue.push(other);
                    }
                    Some(existing) => {
                        let residual = norm_inf(&sub(existing, &c_other));
                        if residual > CONTINUITY_TOL {
                            return Err(Error::Invariant(format!(
                                "not a gradient field: constants disagree by {residual:.3e} \
                                 across the facet between regions {r} and {other}"
                            )));
                        }
                    }
                }
            }
        }
        if let Some(missing) = constants.iter().position(|c| c.is_none()) {
            return Err(Error::Invariant(format!(
                "region adjacency is disconnected; region {missing} unreachable from root {root}"
            )));
        }
        Ok(constants.into_iter().map(|c| c.unwrap()).collect())
    }

    /// Coverage of the working box by sampling plus facet bookkeeping:
    /// every sample lies in some region, none strictly inside two.
    fn check_coverage(&self, issues: &mut Vec<String>) {
        let n = self.n();
        if n != 2 {
            // sampling check implemented for the planar case; higher
            // dimensions rely on the declared region list
            return;
        }
        let steps = 24;
        for i in 0..=steps {
            for j in 0..=steps {
                let x = vec![
                    self.box_min[0] + (self.box_max[0] - self.box_min[0]) * i as f64 / steps as f64,
                    self.box_min[1] + (self.box_max[1] - self.box_min[1]) * j as f64 / steps as f64,
                ];
                let covering = (0..self.regions.len())
                    .filter(|&r| self.in_region(r, &x, 1e-9))
                    .count();
                if covering == 0 {
                    issues.push(format!("box point {x:?} is not covered by any region"));
                    return;
                }
                let strict = (0..self.regions.len())
                    .filter(|&r| self.strictly_in_region(r, &x, 1e-9))
                    .count();
                if strict > 1 {
                    issues.push(format!("regions overlap near {x:?}"));
                    return;
                }
            }
        }
    }

    /// Evaluate the reconstructed potential at x.
    fn eval_phi(&self, constants: &[Vec<f64>], x: &[f64]) -> Result<Vec<f64>> {
        let r = self
            .region_of(x, 1e-9)
            .ok_or_else(|| Error::Input(format!("point {x:?} not covered by the field")))?;
        Ok(add(&self.regions[r].matrix.apply(x), &constants[r]))
    }
}

fn parallel_opposite(n1: &[f64], b1: f64, n2: &[f64], b2: f64) -> bool {
    let (l1, l2) = (norm2(n1), norm2(n2));
    if l1 <= 1e-12 || l2 <= 1e-12 {
        return false;
    }
    let u1 = scale(n1, 1.0 / l1);
    let u2 = scale(n2, 1.0 / l2);
    dist(&u1, &scale(&u2, -1.0)) <= 1e-9 && (b1 / l1 + b2 / l2).abs() <= 1e-9
}

/// Orthonormal basis of the hyperplane orthogonal to `normal`.
fn tangent_basis(normal: &[f64]) -> Vec<Vec<f64>> {
    let n = normal.len();
    let unit = scale(normal, 1.0 / norm2(normal));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for axis in 0..n {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        // remove the normal component and previous tangents
        let mut w = sub(&v, &scale(&unit, dot(&unit, &v)));
        for t in &basis {
            w = sub(&w, &scale(t, dot(t, &w)));
        }
        let len = norm2(&w);
        if len > 1e-9 {
            basis.push(scale(&w, 1.0 / len));
        }
        if basis.len() == n - 1 {
            break;
        }
    }
    basis
}

/// Verify a piecewise-constant field as a calibration for the chain F with
/// boundary F0: feasibility of each region matrix, tangential continuity
/// across shared facets, potential reconstruction with cycle consistency,
/// and equality of primal and dual values.
pub fn verify_calibration_field(
    field: &PiecewiseCalibration,
    flow: &PolyChain1,
    f0: &PointChain0,
    g: &GeneratedNorm,
) -> Result<CalibrationReport> {
    if field.regions.is_empty() {
        return Err(Error::Input("field has no regions".into()));
    }
    let h = g.h();
    let mut issues = Vec::new();

    for s in &flow.segments {
        if !field.in_box(&s.a, 1e-9) || !field.in_box(&s.b, 1e-9) {
            return Err(Error::Input("flow leaves the working box".into()));
        }
    }
    for a in &f0.atoms {
        if !field.in_box(&a.x, 1e-9) {
            return Err(Error::Input("boundary atom outside the working box".into()));
        }
    }

    // (a) membership of every region matrix in dH(0)
    let mut membership_ok = true;
    for (r, region) in field.regions.iter().enumerate() {
        if !g.in_subdifferential(&region.matrix, FIELD_MEMBERSHIP_TOL)? {
            membership_ok = false;
            issues.push(format!(
                "region {r}: H_*(Phi) = {:.12} exceeds 1",
                g.dual_norm(&region.matrix)?
            ));
        }
    }

    // (b) weak-Jacobian compatibility: tangential continuity across facets
    let facets = field.facets();
    let mut continuity_residual: f64 = 0.0;
    for f in &facets {
        let jump = field.regions[f.r1].matrix.sub(&field.regions[f.r2].matrix);
        for t in &f.tangents {
            continuity_residual = continuity_residual.max(norm2(&jump.apply(t)));
        }
    }
    let continuous = continuity_residual <= CONTINUITY_TOL;
    if !continuous {
        issues.push(format!(
            "tangential jump {continuity_residual:.3e} across a shared facet"
        ));
    }

    // (c) reconstruct phi region by region
    let constants = match field.reconstruct_constants(&facets) {
        Ok(c) => c,
        Err(e) => {
            issues.push(e.to_string());
            return Ok(CalibrationReport {
                feasible: false,
                continuity_residual,
                primal_value: flow.mass(h)?,
                dual_value: f64::NAN,
                gap: f64::INFINITY,
                tightness: Vec::new(),
                verdict: Verdict::Infeasible,
                issues,
            });
        }
    };

    field.check_coverage(&mut issues);
    let coverage_ok = issues.iter().all(|s| !s.contains("covered") && !s.contains("overlap"));

    // (d) primal and dual values
    let primal_value = flow.mass(h)?;
    let mut dual_value = 0.0;
    for a in &f0.atoms {
        dual_value += dot(&field.eval_phi(&constants, &a.x)?, &a.theta);
    }
    let gap = (primal_value - dual_value).abs();

    let mut tightness = Vec::with_capacity(flow.segments.len());
    for s in &flow.segments {
        let phi_b = field.eval_phi(&constants, &s.b)?;
        let phi_a = field.eval_phi(&constants, &s.a)?;
        tightness.push(dot(&s.theta, &sub(&phi_b, &phi_a)) - h.eval(&s.theta)? * s.length());
    }

    let feasible = membership_ok && continuous && coverage_ok;
    let verdict = if !feasible {
        Verdict::Infeasible
    } else if gap <= VALUE_TOL * (1.0 + primal_value.abs()) {
        Verdict::CertifiedOptimal
    } else {
        Verdict::GapPositive
    };
    Ok(CalibrationReport {
        feasible,
        continuity_residual,
        primal_value,
        dual_value,
        gap,
        tightness,
        verdict,
        issues,
    })
}

/// Momentum residual sum_out h(theta) e - sum_in h(theta) e over the
/// segments incident to x. Zero at interior junctions of calibrated
/// networks; boundary nodes report their single-arm imbalance.
pub fn momentum_residual(flow: &PolyChain1, x: &[f64], h: &PolyhedralNorm) -> Result<Vec<f64>> {
    let n = x.len();
    let mut residual = vec![0.0; n];
    let mut incident = false;
    for s in &flow.segments {
        let e = s.orientation();
        let w = h.eval(&s.theta)?;
        if dist(&s.a, x) <= ATOM_MERGE_TOL.max(1e-9) {
            incident = true;
            residual = add(&residual, &scale(&e, w));
        } else if dist(&s.b, x) <= ATOM_MERGE_TOL.max(1e-9) {
            incident = true;
            residual = sub(&residual, &scale(&e, w));
        }
    }
    if !incident {
        return Err(Error::Input(format!("{x:?} is not a vertex of the chain")));
    }
    Ok(residual)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Landscape {
    pub vertices: Vec<Vec<f64>>,
    pub z: Vec<f64>,
}

/// The landscape function on an acyclic connected support: Z of the root is
/// zero and each step adds ||theta||_1^{-1} theta . (phi(v) - phi(prev)),
/// with theta taken in the walk direction.
pub fn landscape<F>(flow: &PolyChain1, root: &[f64], phi: F) -> Result<Landscape>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let vertices = flow.vertices();
    let find = |x: &[f64]| vertices.iter().position(|v| dist(v, x) <= 1e-9);
    let root_idx = find(root)
        .ok_or_else(|| Error::Input(format!("root {root:?} is not a vertex of the chain")))?;

    // adjacency: (neighbor, segment, walk sign)
    let mut adjacency: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); vertices.len()];
    for (e, s) in flow.segments.iter().enumerate() {
        let ia = find(&s.a).expect("segment endpoints are vertices");
        let ib = find(&s.b).expect("segment endpoints are vertices");
        adjacency[ia].push((ib, e, 1.0));
        adjacency[ib].push((ia, e, -1.0));
    }

    // connectivity and acyclicity by DFS from the root
    let mut parent: Vec<Option<usize>> = vec![None; vertices.len()];
    let mut seen = vec![false; vertices.len()];
    let mut order = Vec::new();
    let mut stack = vec![(root_idx, usize::MAX)];
    seen[root_idx] = true;
    while let Some((v, via)) = stack.pop() {
        order.push(v);
        for &(w, e, _) in &adjacency[v] {
            if e == via {
                continue;
            }
            if seen[w] {
                // back edge: walk the tree paths up to a common ancestor
                let cycle = extract_cycle(&parent, v, w);
                return Err(Error::CyclicSupport { cycle });
            }
            seen[w] = true;
            parent[w] = Some(v);
            stack.push((w, e));
        }
    }
    if let Some(unreached) = seen.iter().position(|s| !s) {
        return Err(Error::Disconnected {
            components: vec![root_idx, unreached],
        });
    }

    // accumulate Z along the unique tree paths
    let mut z = vec![0.0; vertices.len()];
    let phi_at: Vec<Vec<f64>> = vertices.iter().map(|v| phi(v)).collect();
    for &v in &order {
        let Some(p) = parent[v] else { continue };
        let (_, e, sign) = *adjacency[p]
            .iter()
            .find(|(w, _, _)| *w == v)
            .expect("tree edge exists");
        let theta_walk = scale(&flow.segments[e].theta, sign);
        let l1 = norm1(&theta_walk);
        if l1 <= 0.0 {
            return Err(Error::Invariant("zero multiplicity on a support edge".into()));
        }
        z[v] = z[p] + dot(&theta_walk, &sub(&phi_at[v], &phi_at[p])) / l1;
    }
    Ok(Landscape { vertices, z })
}

fn extract_cycle(parent: &[Option<usize>], v: usize, w: usize) -> Vec<usize> {
    let path_to_root = |mut x: usize| {
        let mut p = vec![x];
        while let Some(q) = parent[x] {
            p.push(q);
            x = q;
        }
        p
    };
    let pv = path_to_root(v);
    let pw = path_to_root(w);
    // drop the shared tail
    let mut i = pv.len();
    let mut j = pw.len();
    while i > 1 && j > 1 && pv[i - 2] == pw[j - 2] {
        i -= 1;
        j -= 1;
    }
    let mut cycle: Vec<usize> = pv[..i].to_vec();
    cycle.extend(pw[..j - 1].iter().rev());
    cycle
}

/// floor(m (m + 1) / (2m - 2)), the generic degree of a junction for m >= 2.
pub fn generic_junction_degree(m: u64) -> Result<u64> {
    if m < 2 {
        return Err(Error::Input("junction degree estimate needs m >= 2".into()));
    }
    Ok(m * (m + 1) / (2 * m - 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chains::Segment;

    fn hex() -> PolyhedralNorm {
        PolyhedralNorm::hexagonal()
    }

    #[test]
    fn junction_degree_values() {
        assert_eq!(generic_junction_degree(2).unwrap(), 3);
        assert_eq!(generic_junction_degree(3).unwrap(), 3);
        assert_eq!(generic_junction_degree(4).unwrap(), 3);
        assert!(generic_junction_degree(1).is_err());
    }

    #[test]
    fn zero_potential_slacks_are_lengths() {
        let graph = GeometricGraph::new(
            vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![2.0, 1.0]],
            vec![(0, 1), (1, 2)],
        )
        .unwrap();
        let phi = Potential::new(vec![vec![0.0, 0.0]; 3]).unwrap();
        let slacks = check_potential(&graph, &phi, &hex()).unwrap();
        assert_eq!(slacks, vec![2.0, 1.0]);
    }

    #[test]
    fn doubled_potential_infeasible_on_tight_edge() {
        // phi(x) = Phi_bar x is tight along e1 for theta^1; doubling breaks it.
        let s3 = 3.0f64.sqrt();
        let phibar = Mat::from_rows(&[vec![0.5, 0.5 * s3], vec![0.5, -0.5 * s3]]).unwrap();
        let graph =
            GeometricGraph::new(vec![vec![-1.0, 0.0], vec![1.0, 0.0]], vec![(0, 1)]).unwrap();
        let phi1 = Potential::from_linear(&graph, &phibar).unwrap();
        let slacks = check_potential(&graph, &phi1, &hex()).unwrap();
        assert!(slacks[0].abs() < 1e-12, "tight edge expected, slack {slacks:?}");
        let phi2 = Potential::from_linear(&graph, &phibar.scaled(2.0)).unwrap();
        let slacks = check_potential(&graph, &phi2, &hex()).unwrap();
        assert!(slacks[0] < -1e-9);
    }

    #[test]
    fn landscape_single_edge() {
        // single edge theta = (1,1), length 2, calibrated phi: increment
        // h(theta)/||theta||_1 * L = (1/2) * 2 = 1.
        let flow = PolyChain1::new(vec![Segment {
            a: vec![-1.0, 0.0],
            b: vec![1.0, 0.0],
            theta: vec![1.0, 1.0],
        }])
        .unwrap();
        let s3 = 3.0f64.sqrt();
        let phibar = Mat::from_rows(&[vec![0.5, 0.5 * s3], vec![0.5, -0.5 * s3]]).unwrap();
        let l = landscape(&flow, &[-1.0, 0.0], |x| phibar.apply(x)).unwrap();
        let other = l
            .vertices
            .iter()
            .position(|v| dist(v, &[1.0, 0.0]) < 1e-12)
            .unwrap();
        assert!((l.z[other] - 1.0).abs() < 1e-12);
        let root = l
            .vertices
            .iter()
            .position(|v| dist(v, &[-1.0, 0.0]) < 1e-12)
            .unwrap();
        assert_eq!(l.z[root], 0.0);
    }

    #[test]
    fn landscape_rejects_cycles() {
        let square = PolyChain1::new(vec![
            Segment {
                a: vec![0.0, 0.0],
                b: vec![1.0, 0.0],
                theta: vec![1.0, 0.0],
            },
            Segment {
                a: vec![1.0, 0.0],
                b: vec![1.0, 1.0],
                theta: vec![1.0, 0.0],
            },
            Segment {
                a: vec![1.0, 1.0],
                b: vec![0.0, 1.0],
                theta: vec![1.0, 0.0],
            },
            Segment {
                a: vec![0.0, 1.0],
                b: vec![0.0, 0.0],
                theta: vec![1.0, 0.0],
            },
        ])
        .unwrap();
        match landscape(&square, &[0.0, 0.0], |_| vec![0.0, 0.0]) {
            Err(Error::CyclicSupport { cycle }) => assert!(cycle.len() >= 3),
            other => panic!("expected cycle error, got {other:?}"),
        }
    }

    #[test]
    fn landscape_rejects_disconnected() {
        let two = PolyChain1::new(vec![
            Segment {
                a: vec![0.0, 0.0],
                b: vec![1.0, 0.0],
                theta: vec![1.0, 0.0],
            },
            Segment {
                a: vec![5.0, 5.0],
                b: vec![6.0, 5.0],
                theta: vec![1.0, 0.0],
            },
        ])
        .unwrap();
        match landscape(&two, &[0.0, 0.0], |_| vec![0.0, 0.0]) {
            Err(Error::Disconnected { components }) => assert_eq!(components.len(), 2),
            other => panic!("expected disconnected error, got {other:?}"),
        }
    }

    #[test]
    fn identity_field_certifies_single_segment() {
        // Euclidean-style norm pinned at +-e1: a straight unit flow is
        // certified by the identity field.
        let dirs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let mut primal = Vec::new();
        for d in &dirs {
            primal.push(d.clone());
            primal.push(scale(d, -1.0));
        }
        let h = PolyhedralNorm::from_primal_vertices(2, primal).unwrap();
        let g = GeneratedNorm::with_default_directions(h, 2).unwrap();
        let flow = PolyChain1::new(vec![Segment {
            a: vec![0.0, 0.0],
            b: vec![1.0, 0.0],
            theta: vec![1.0, 0.0],
        }])
        .unwrap();
        let f0 = flow.boundary();
        let field =
            PiecewiseCalibration::single(Mat::identity(2), vec![-2.0, -2.0], vec![2.0, 2.0]);
        let report = verify_calibration_field(&field, &flow, &f0, &g).unwrap();
        assert!(report.certified(), "{report:?}");
        assert!((report.primal_value - 1.0).abs() < 1e-12);
        assert!((report.dual_value - 1.0).abs() < 1e-12);
    }
}
