//! Material cost norms h on R^m and the generated matrix norm H on R^{m x n}.
//!
//! h is stored in support-function form: the vertex set of its subdifferential
//! at zero, so h(theta) = max_k g_k . theta. The vertices of the primal unit
//! ball {h <= 1} are enumerated once at construction and cached; they drive
//! the dual norm h_*, the operator norm H_*, and membership tests for the
//! subdifferential of H at zero.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist, dot, norm2, scale, sub, Mat};
use crate::lp::{LinearProgram, LpStatus};
use crate::polytope::{span_rank, unit_polytope_vertices};

/// Default membership tolerance for dual-ball and subdifferential tests.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
/// Default certified-gap target for interval evaluation of H.
pub const H_GAP_TOL: f64 = 1e-6;
/// Iteration cap for the projected ascent lower bound.
pub const ASCENT_CAP: usize = 10_000;

const VERTEX_MERGE_TOL: f64 = 1e-12;

/// A norm on R^m given by the finite vertex set of its dual unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyhedralNormData", into = "PolyhedralNormData")]
pub struct PolyhedralNorm {
    m: usize,
    dual_vertices: Vec<Vec<f64>>,
    primal_vertices: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct PolyhedralNormData {
    m: usize,
    dual_vertices: Vec<Vec<f64>>,
}

impl TryFrom<PolyhedralNormData> for PolyhedralNorm {
    type Error = Error;
    fn try_from(d: PolyhedralNormData) -> Result<Self> {
        PolyhedralNorm::new(d.m, d.dual_vertices)
    }
}

impl From<PolyhedralNorm> for PolyhedralNormData {
    fn from(n: PolyhedralNorm) -> Self {
        PolyhedralNormData {
            m: n.m,
            dual_vertices: n.dual_vertices,
        }
    }
}

impl PolyhedralNorm {
    /// Build from the vertices g_k of the dual unit ball.
    ///
    /// The list must be symmetric under negation, duplicate-free, and span
    /// R^m; the vertices of the primal ball {theta : g_k . theta <= 1} are
    /// enumerated eagerly so later evaluations stay pure.
    pub fn new(m: usize, dual_vertices: Vec<Vec<f64>>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Input("material dimension must be positive".into()));
        }
        for g in &dual_vertices {
            check_dim("dual vertex", m, g.len())?;
        }
        for (i, g) in dual_vertices.iter().enumerate() {
            let neg = scale(g, -1.0);
            if !dual_vertices.iter().any(|x| dist(x, &neg) <= VERTEX_MERGE_TOL) {
                return Err(Error::Invariant(format!(
                    "dual vertex set is not symmetric: missing -g for vertex {i}"
                )));
            }
            if dual_vertices[i + 1..]
                .iter()
                .any(|x| dist(x, g) <= VERTEX_MERGE_TOL)
            {
                return Err(Error::Invariant(format!(
                    "duplicate dual vertex at index {i}"
                )));
            }
        }
        if span_rank(&dual_vertices, m) < m {
            return Err(Error::Invariant(
                "dual vertices do not span R^m; h would be degenerate".into(),
            ));
        }
        let primal_vertices = unit_polytope_vertices(m, &dual_vertices)?;
        Ok(PolyhedralNorm {
            m,
            dual_vertices,
            primal_vertices,
        })
    }

    /// Build from the vertices of the primal unit ball {h <= 1}: the dual
    /// vertices are obtained by vertex enumeration of the polar polytope.
    pub fn from_primal_vertices(m: usize, primal: Vec<Vec<f64>>) -> Result<Self> {
        for v in &primal {
            check_dim("primal vertex", m, v.len())?;
        }
        if span_rank(&primal, m) < m {
            return Err(Error::Invariant(
                "primal vertices do not span R^m; polar would be unbounded".into(),
            ));
        }
        let dual_vertices = unit_polytope_vertices(m, &primal)?;
        PolyhedralNorm::new(m, dual_vertices)
    }

    /// The hexagonal norm max{|t1|, |t2|, |t1 - t2|} on R^2.
    pub fn hexagonal() -> Self {
        PolyhedralNorm::new(
            2,
            vec![
                vec![1.0, 0.0],
                vec![-1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, -1.0],
                vec![1.0, -1.0],
                vec![-1.0, 1.0],
            ],
        )
        .expect("hexagonal norm data is valid")
    }

    /// The l1 norm on R^m; its dual ball is the sign-vector cube.
    pub fn l1(m: usize) -> Result<Self> {
        if m == 0 || m > 4 {
            return Err(Error::Input("l1 norm supported for 1 <= m <= 4".into()));
        }
        let mut dual = Vec::new();
        for mask in 0..(1usize << m) {
            dual.push((0..m).map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }).collect());
        }
        PolyhedralNorm::new(m, dual)
    }

    /// Symmetric vertex sampling of the Euclidean norm. Supported for m = 2
    /// (uniform circle angles) and m = 3 (antipodal Fibonacci covering); the
    /// sampled norm underestimates |.| by at most 1 - cos(pi/samples).
    pub fn euclidean(m: usize, samples: usize) -> Result<Self> {
        match m {
            2 => {
                if samples < 4 || samples % 2 != 0 {
                    return Err(Error::Input(
                        "euclidean sampling needs an even count >= 4".into(),
                    ));
                }
                let dual = (0..samples)
                    .map(|i| {
                        let a = 2.0 * std::f64::consts::PI * i as f64 / samples as f64;
                        vec![a.cos(), a.sin()]
                    })
                    .collect();
                PolyhedralNorm::new(2, dual)
            }
            3 => {
                if samples < 6 || samples % 2 != 0 {
                    return Err(Error::Input(
                        "euclidean sampling needs an even count >= 6".into(),
                    ));
                }
                let mut dual = Vec::with_capacity(samples);
                for p in fibonacci_hemisphere(samples / 2) {
                    dual.push(scale(&p, -1.0));
                    dual.push(p);
                }
                PolyhedralNorm::new(3, dual)
            }
            _ => Err(Error::Input(
                "euclidean sampling supported for m in {2, 3}".into(),
            )),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dual_vertices(&self) -> &[Vec<f64>] {
        &self.dual_vertices
    }

    pub fn primal_vertices(&self) -> &[Vec<f64>] {
        &self.primal_vertices
    }

    /// h(theta) = max_k g_k . theta.
    pub fn eval(&self, theta: &[f64]) -> Result<f64> {
        check_dim("theta", self.m, theta.len())?;
        Ok(self
            .dual_vertices
            .iter()
            .map(|g| dot(g, theta))
            .fold(0.0, f64::max))
    }

    /// h_*(y) = max over primal unit-ball vertices v of y . v.
    pub fn eval_dual(&self, y: &[f64]) -> Result<f64> {
        check_dim("y", self.m, y.len())?;
        Ok(self
            .primal_vertices
            .iter()
            .map(|v| dot(v, y))
            .fold(0.0, f64::max))
    }

    /// Membership in the dual unit ball: h_*(g) <= 1 + tol.
    pub fn in_dual_ball(&self, g: &[f64], tol: f64) -> Result<bool> {
        Ok(self.eval_dual(g)? <= 1.0 + tol)
    }
}

fn fibonacci_hemisphere(count: usize) -> Vec<Vec<f64>> {
    let golden = (1.0 + 5.0f64.sqrt()) / 2.0;
    (0..count)
        .map(|i| {
            // z in (0, 1]: strictly upper hemisphere keeps the set antipode-free.
            let z = (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let phi = 2.0 * std::f64::consts::PI * (i as f64 / golden).fract();
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// Outcome of the two-sided evaluation of H(M).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HInterval {
    pub lower: f64,
    pub upper: f64,
    /// Feasible dual certificate N with M : N = lower.
    pub certificate: Mat,
    /// Active rank-one decomposition (theta_i, e_i) with sum theta_i (x) e_i = M.
    pub decomposition: Vec<(Vec<f64>, Vec<f64>)>,
    /// False when the gap target was not met within the refinement cap.
    pub converged: bool,
}

impl HInterval {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Result of the projected-ascent lower bound for H(M).
#[derive(Debug, Clone)]
pub struct HLowerBound {
    pub value: f64,
    pub certificate: Mat,
    pub converged: bool,
}

/// The norm H on R^{m x n} generated by h, evaluated through its two
/// variational characterizations over a finite direction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratedNormData", into = "GeneratedNormData")]
pub struct GeneratedNorm {
    h: PolyhedralNorm,
    n: usize,
    directions: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize, Clone)]
struct GeneratedNormData {
    h: PolyhedralNorm,
    n: usize,
    directions: Vec<Vec<f64>>,
}

impl TryFrom<GeneratedNormData> for GeneratedNorm {
    type Error = Error;
    fn try_from(d: GeneratedNormData) -> Result<Self> {
        GeneratedNorm::new(d.h, d.n, d.directions)
    }
}

impl From<GeneratedNorm> for GeneratedNormData {
    fn from(g: GeneratedNorm) -> Self {
        GeneratedNormData {
            h: g.h,
            n: g.n,
            directions: g.directions,
        }
    }
}

impl GeneratedNorm {
    pub fn new(h: PolyhedralNorm, n: usize, directions: Vec<Vec<f64>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("spatial dimension must be positive".into()));
        }
        for e in &directions {
            check_dim("direction", n, e.len())?;
            if (norm2(e) - 1.0).abs() > VERTEX_MERGE_TOL {
                return Err(Error::Invariant("directions must be unit vectors".into()));
            }
        }
        for e in &directions {
            let neg = scale(e, -1.0);
            if !directions.iter().any(|x| dist(x, &neg) <= VERTEX_MERGE_TOL) {
                return Err(Error::Invariant(
                    "direction set must be symmetric under negation".into(),
                ));
            }
        }
        Ok(GeneratedNorm { h, n, directions })
    }

    /// Default direction sets: 32 uniform angles for n = 2, a 62-point
    /// antipodally symmetric covering for n = 3.
    pub fn with_default_directions(h: PolyhedralNorm, n: usize) -> Result<Self> {
        let directions = match n {
            2 => circle_directions(32),
            3 => {
                let mut d = Vec::new();
                for p in fibonacci_hemisphere(31) {
                    d.push(scale(&p, -1.0));
                    d.push(p);
                }
                d
            }
            _ => {
                return Err(Error::Input(
                    "default direction sets exist for n in {2, 3}".into(),
                ))
            }
        };
        GeneratedNorm::new(h, n, directions)
    }

    pub fn h(&self) -> &PolyhedralNorm {
        &self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.h.m()
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    fn check_flux(&self, m: &Mat) -> Result<()> {
        check_dim("flux rows", self.h.m(), m.rows())?;
        check_dim("flux cols", self.n, m.cols())
    }

    /// H_*(M) = max_j |M^T v_j|_2 over primal unit-ball vertices of h.
    /// Exact for polyhedral h by the operator-norm identity.
    pub fn dual_norm(&self, m: &Mat) -> Result<f64> {
        self.check_flux(m)?;
        Ok(self
            .h
            .primal_vertices
            .iter()
            .map(|v| norm2(&m.t_apply(v)))
            .fold(0.0, f64::max))
    }

    /// Membership in the subdifferential of H at zero: H_*(M) <= 1 + tol.
    pub fn in_subdifferential(&self, m: &Mat, tol: f64) -> Result<bool> {
        Ok(self.dual_norm(m)? <= 1.0 + tol)
    }

    /// Upper bound on H(M): the finite-direction restriction of the
    /// homogenization formula H(M) = inf sum_i h(theta_i) over
    /// M = sum_i theta_i (x) e_i, solved as an LP in epigraph form.
    pub fn upper_bound(&self, m: &Mat) -> Result<(f64, Vec<(Vec<f64>, Vec<f64>)>)> {
        self.upper_bound_with(m, &self.directions).map(|r| (r.0, r.1))
    }

    fn upper_bound_with(
        &self,
        m: &Mat,
        directions: &[Vec<f64>],
    ) -> Result<(f64, Vec<(Vec<f64>, Vec<f64>)>, Mat)> {
        self.check_flux(m)?;
        if directions.is_empty() {
            return Err(Error::Input("direction set is empty".into()));
        }
        if span_rank(directions, self.n) < self.n {
            return Err(Error::Input(
                "direction set does not span R^n; decomposition LP is infeasible".into(),
            ));
        }
        let (mm, nn) = (self.h.m(), self.n);
        let nd = directions.len();
        let gs = self.h.dual_vertices();
        // Variables: per direction i a block [theta_i (mm entries), t_i].
        let block = mm + 1;
        let nvars = nd * block;
        let mut objective = vec![0.0; nvars];
        for i in 0..nd {
            objective[i * block + mm] = 1.0;
        }
        // Equalities: sum_i theta_i (x) e_i = M, one row per matrix entry.
        let mut eq_rows = Vec::with_capacity(mm * nn);
        let mut eq_rhs = Vec::with_capacity(mm * nn);
        for r in 0..mm {
            for c in 0..nn {
                let mut row = vec![0.0; nvars];
                for (i, e) in directions.iter().enumerate() {
                    row[i * block + r] = e[c];
                }
                eq_rows.push(row);
                eq_rhs.push(m[(r, c)]);
            }
        }
        // Inequalities: g_k . theta_i - t_i <= 0.
        let mut ineq_rows = Vec::with_capacity(nd * gs.len());
        let ineq_rhs = vec![0.0; nd * gs.len()];
        for i in 0..nd {
            for g in gs {
                let mut row = vec![0.0; nvars];
                row[i * block..i * block + mm].copy_from_slice(g);
                row[i * block + mm] = -1.0;
                ineq_rows.push(row);
            }
        }
        let lp = LinearProgram::new(objective, eq_rows, eq_rhs, ineq_rows, ineq_rhs)?;
        let sol = crate::lp::solve_lp(&lp)?;
        if sol.status != LpStatus::Optimal {
            return Err(Error::Numerical(format!(
                "H upper-bound LP returned {:?}",
                sol.status
            )));
        }
        let mut decomposition = Vec::new();
        for (i, e) in directions.iter().enumerate() {
            let theta = sol.x[i * block..i * block + mm].to_vec();
            if theta.iter().any(|t| t.abs() > 1e-10) {
                decomposition.push((theta, e.clone()));
            }
        }
        // Equality duals reassemble to a candidate certificate N.
        let mut dual = Mat::zeros(mm, nn);
        for r in 0..mm {
            for c in 0..nn {
                dual[(r, c)] = sol.y_eq[r * nn + c];
            }
        }
        Ok((sol.objective, decomposition, dual))
    }

    /// Lower bound on H(M) = sup {M : N | N in dH(0)} by projected
    /// subgradient ascent with Dykstra projection onto {H_* <= 1}.
    pub fn lower_bound(&self, m: &Mat, warm_start: Option<&Mat>) -> Result<HLowerBound> {
        self.lower_bound_toward(m, warm_start, None)
    }

    /// Same ascent; when an upper bound on H(M) is available, Polyak-style
    /// steps (target - value)/|M|^2 close the gap far faster than the
    /// default diminishing schedule.
    fn lower_bound_toward(
        &self,
        m: &Mat,
        warm_start: Option<&Mat>,
        target: Option<f64>,
    ) -> Result<HLowerBound> {
        self.check_flux(m)?;
        let mnorm = m.frob_norm();
        if mnorm == 0.0 {
            return Ok(HLowerBound {
                value: 0.0,
                certificate: Mat::zeros(self.h.m(), self.n),
                converged: true,
            });
        }
        let mut current = match warm_start {
            Some(w) => {
                self.check_flux(w)?;
                w.clone()
            }
            None => m.scaled(1.0 / mnorm),
        };
        self.project_dual_ball(&mut current);
        let mut best = current.clone();
        let mut best_val = m.frob_dot(&best);
        let step0 = 1.0 / mnorm.max(1e-12);
        let mut converged = false;
        let mut stall = 0usize;
        for it in 0..ASCENT_CAP {
            let step = match target {
                Some(t) if t > best_val => {
                    ((t - m.frob_dot(&current)) / (mnorm * mnorm)).max(1e-16)
                }
                _ => step0 / ((it + 1) as f64).sqrt(),
            };
            current = current.add(&m.scaled(step));
            self.project_dual_ball(&mut current);
            let val = m.frob_dot(&current);
            if val > best_val + 1e-13 * (1.0 + best_val.abs()) {
                best_val = val;
                best = current.clone();
                stall = 0;
            } else {
                stall += 1;
                if stall >= 64 {
                    converged = true;
                    break;
                }
            }
        }
        Ok(HLowerBound {
            value: best_val,
            certificate: best,
            converged,
        })
    }

    /// Dykstra's alternating projection onto the intersection of
    /// {N : |N^T v_j| <= 1} over primal vertices v_j.
    fn project_dual_ball(&self, n: &mut Mat) {
        let verts = &self.h.primal_vertices;
        let mut corrections: Vec<Mat> = vec![Mat::zeros(n.rows(), n.cols()); verts.len()];
        for _sweep in 0..200 {
            let mut violation: f64 = 0.0;
            for (j, v) in verts.iter().enumerate() {
                let candidate = n.add(&corrections[j]);
                let u = candidate.t_apply(v);
                let len = norm2(&u);
                if len > 1.0 {
                    let target = scale(&u, 1.0 / len);
                    let vv = dot(v, v);
                    let projected = candidate.add(&Mat::outer(v, &sub(&target, &u)).scaled(1.0 / vv));
                    corrections[j] = candidate.sub(&projected);
                    *n = projected;
                } else {
                    corrections[j] = Mat::zeros(n.rows(), n.cols());
                    *n = candidate;
                }
                violation = violation.max(len - 1.0);
            }
            if violation <= 1e-13 {
                break;
            }
        }
        // Final safety rescale so the certificate is strictly feasible.
        let hstar = self
            .h
            .primal_vertices
            .iter()
            .map(|v| norm2(&n.t_apply(v)))
            .fold(0.0, f64::max);
        if hstar > 1.0 {
            *n = n.scaled(1.0 / hstar);
        }
    }

    /// Certified interval for H(M): LP upper bound and ascent lower bound,
    /// refining the direction set by bisecting angular gaps until the gap
    /// target is met or the refinement cap is reached.
    pub fn evaluate(&self, m: &Mat, gap_tol: f64) -> Result<HInterval> {
        self.evaluate_from(m, gap_tol, None)
    }

    /// Same as [`evaluate`](Self::evaluate) with a warm-start certificate for
    /// the lower bound.
    pub fn evaluate_from(&self, m: &Mat, gap_tol: f64, warm: Option<&Mat>) -> Result<HInterval> {
        if gap_tol <= 0.0 {
            return Err(Error::Input("gap_tol must be positive".into()));
        }
        self.check_flux(m)?;
        if m.frob_norm() == 0.0 {
            return Ok(HInterval {
                lower: 0.0,
                upper: 0.0,
                certificate: Mat::zeros(self.h.m(), self.n),
                decomposition: Vec::new(),
                converged: true,
            });
        }
        let mut directions = self.directions.clone();
        let mut best: Option<HInterval> = None;
        for _round in 0..16 {
            let (upper, decomposition, lp_dual) = self.upper_bound_with(m, &directions)?;
            // The LP dual is feasible for the sampled directions only; rescale
            // by the exact operator norm to certify, then polish by ascent.
            let hstar = self.dual_norm(&lp_dual)?;
            let mut cand = if hstar > 1.0 {
                lp_dual.scaled(1.0 / hstar)
            } else {
                lp_dual
            };
            let mut cand_val = m.frob_dot(&cand);
            if let Some((theta, e)) = rank_one_factor(m) {
                // rank-one flux: g* (x) e for the maximizing dual vertex is
                // feasible and exactly tight
                if let Some(g_star) = self
                    .h
                    .dual_vertices()
                    .iter()
                    .max_by(|a, b| dot(a, &theta).total_cmp(&dot(b, &theta)))
                {
                    let exact = Mat::outer(g_star, &e);
                    let v = m.frob_dot(&exact);
                    if v > cand_val {
                        cand = exact;
                        cand_val = v;
                    }
                }
            }
            if let Some(w) = warm {
                let wv = m.frob_dot(w);
                if self.in_subdifferential(w, MEMBERSHIP_TOL)? && wv > cand_val {
                    cand = w.clone();
                    cand_val = wv;
                }
            }
            let ascent = if upper - cand_val <= gap_tol {
                HLowerBound {
                    value: cand_val,
                    certificate: cand.clone(),
                    converged: true,
                }
            } else {
                self.lower_bound_toward(m, Some(&cand), Some(upper))?
            };
            let lower = ascent.value.max(cand_val);
            let certificate = if ascent.value >= cand_val {
                ascent.certificate
            } else {
                cand
            };
            let interval = HInterval {
                lower,
                upper,
                certificate,
                decomposition,
                converged: true,
            };
            if interval.gap() <= gap_tol {
                return Ok(interval);
            }
            match &best {
                Some(b) if b.gap() <= interval.gap() => {}
                _ => best = Some(interval),
            }
            if !self.refine(&mut directions) {
                break;
            }
        }
        let mut out = best.expect("at least one round ran");
        out.converged = false;
        Ok(out)
    }

    /// Insert midpoints between angularly adjacent directions (n = 2) or
    /// between nearby direction pairs (n = 3). Returns false at the cap.
    fn refine(&self, directions: &mut Vec<Vec<f64>>) -> bool {
        const DIRECTION_CAP: usize = 4096;
        if directions.len() >= DIRECTION_CAP {
            return false;
        }
        match self.n {
            2 => {
                let mut angles: Vec<f64> = directions.iter().map(|e| e[1].atan2(e[0])).collect();
                angles.sort_by(f64::total_cmp);
                let mut new_angles = Vec::new();
                for i in 0..angles.len() {
                    let a = angles[i];
                    let b = if i + 1 < angles.len() {
                        angles[i + 1]
                    } else {
                        angles[0] + 2.0 * std::f64::consts::PI
                    };
                    new_angles.push(a);
                    if b - a > 1e-9 {
                        new_angles.push(0.5 * (a + b));
                    }
                }
                *directions = new_angles
                    .into_iter()
                    .map(|a| vec![a.cos(), a.sin()])
                    .collect();
                true
            }
            3 => {
                // Insert normalized midpoints of the closest pairs.
                let mut added = Vec::new();
                let k = directions.len();
                for i in 0..k {
                    let mut best_j = None;
                    let mut best_d = f64::INFINITY;
                    for j in 0..k {
                        if i == j {
                            continue;
                        }
                        let d = dist(&directions[i], &directions[j]);
                        if d < best_d && d > 1e-9 {
                            best_d = d;
                            best_j = Some(j);
                        }
                    }
                    if let Some(j) = best_j {
                        let mid = add_unit(&directions[i], &directions[j]);
                        if let Some(mid) = mid {
                            if !directions.iter().chain(added.iter()).any(|x| dist(x, &mid) < 1e-9)
                            {
                                let neg = scale(&mid, -1.0);
                                added.push(mid);
                                added.push(neg);
                            }
                        }
                    }
                }
                if added.is_empty() {
                    return false;
                }
                directions.extend(added);
                true
            }
            _ => false,
        }
    }
}

/// Factor M = theta (x) e with unit e when M has numerical rank one
/// (power iteration on M^T M).
fn rank_one_factor(m: &Mat) -> Option<(Vec<f64>, Vec<f64>)> {
    let scale_m = m.frob_norm();
    if scale_m == 0.0 {
        return None;
    }
    let n = m.cols();
    let mut e = vec![1.0 / (n as f64).sqrt(); n];
    for _ in 0..50 {
        let w = m.t_apply(&m.apply(&e));
        let len = norm2(&w);
        if len < 1e-14 * scale_m * scale_m {
            return None;
        }
        e = scale(&w, 1.0 / len);
    }
    let theta = m.apply(&e);
    let residual = m.sub(&Mat::outer(&theta, &e)).frob_norm();
    if residual <= 1e-10 * scale_m {
        Some((theta, e))
    } else {
        None
    }
}

fn add_unit(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let s = crate::linalg::add(a, b);
    let len = norm2(&s);
    if len < 1e-9 {
        None
    } else {
        Some(scale(&s, 1.0 / len))
    }
}

/// Uniformly spaced unit directions on the circle (count must be even so the
/// set is symmetric).
pub fn circle_directions(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            vec![a.cos(), a.sin()]
        })
        .collect()
}

/// Resolve a named built-in norm: "linf-hex", "l1", "euclidean".
pub fn named_norm(name: &str, m: usize, samples: Option<usize>) -> Result<PolyhedralNorm> {
    match name {
        "linf-hex" => {
            if m != 2 {
                return Err(Error::Input("linf-hex is a norm on R^2".into()));
            }
            Ok(PolyhedralNorm::hexagonal())
        }
        "l1" => PolyhedralNorm::l1(m),
        "euclidean" => PolyhedralNorm::euclidean(m, samples.unwrap_or(64)),
        other => Err(Error::Input(format!("unknown norm name: {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt3() -> f64 {
        3.0f64.sqrt()
    }

    /// The matrix from the hexagonal homogenization display.
    pub(crate) fn m_bar() -> Mat {
        let s = 1.0 / (2.0 * 2.0f64.sqrt());
        Mat::from_rows(&[
            vec![s * (1.0 + sqrt3()), s * (1.0 - sqrt3())],
            vec![s * (1.0 - sqrt3()), s * (1.0 + sqrt3())],
        ])
        .unwrap()
    }

    #[test]
    fn hex_eval() {
        let h = PolyhedralNorm::hexagonal();
        assert_eq!(h.eval(&[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(h.eval(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(h.eval(&[-1.0, 1.0]).unwrap(), 2.0);
        assert!(h.eval(&[1.0]).is_err());
    }

    #[test]
    fn hex_primal_vertices() {
        // Oracle: vertex enumeration of {g_k . theta <= 1}; the primal ball
        // of the hexagonal norm has vertices +-(1,1), +-(1,0), +-(0,1).
        let h = PolyhedralNorm::hexagonal();
        let vs = h.primal_vertices();
        assert_eq!(vs.len(), 6);
        for e in [
            [1.0, 1.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, -1.0],
            [-1.0, 0.0],
            [0.0, -1.0],
        ] {
            assert!(vs.iter().any(|v| dist(v, &e) < 1e-12));
        }
    }

    #[test]
    fn hex_eval_dual() {
        let h = PolyhedralNorm::hexagonal();
        // Frozen from the vertex-enumeration oracle: max_v (1,1) . v = 2
        // (attained at the primal vertex (1,1)).
        assert_eq!(h.eval_dual(&[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(h.eval_dual(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(h.eval_dual(&[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(h.eval_dual(&[1.5, 0.0]).unwrap(), 1.5);
    }

    #[test]
    fn hex_dual_ball_membership() {
        let h = PolyhedralNorm::hexagonal();
        assert!(h.in_dual_ball(&[1.0, 0.0], 1e-9).unwrap());
        assert!(!h.in_dual_ball(&[1.5, 0.0], 1e-9).unwrap());
        assert!(h.in_dual_ball(&[0.0, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn euclidean_self_duality() {
        let h = PolyhedralNorm::euclidean(2, 64).unwrap();
        let y = [0.3, -0.7];
        let exact = norm2(&y);
        let sampled = h.eval_dual(&y).unwrap();
        // Polar of the sampled polygon circumscribes the disc by 1/cos(pi/64).
        assert!(sampled >= exact - 1e-12);
        assert!(sampled <= exact / (std::f64::consts::PI / 64.0).cos() + 1e-12);
    }

    #[test]
    fn asymmetric_rejected() {
        assert!(PolyhedralNorm::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn hstar_of_mbar_is_one() {
        let g = GeneratedNorm::with_default_directions(PolyhedralNorm::hexagonal(), 2).unwrap();
        let hstar = g.dual_norm(&m_bar()).unwrap();
        assert!((hstar - 1.0).abs() < 1e-12, "H_*(Mbar) = {hstar}");
        assert!(g.in_subdifferential(&m_bar(), 1e-9).unwrap());
        assert!(!g.in_subdifferential(&Mat::identity(2), 1e-9).unwrap());
        assert!(g.in_subdifferential(&Mat::zeros(2, 2), 1e-9).unwrap());
    }

    #[test]
    fn dual_norm_rank_one() {
        let g = GeneratedNorm::with_default_directions(PolyhedralNorm::hexagonal(), 2).unwrap();
        let a = [0.4, -1.3];
        let b = [2.0, 0.5];
        let m = Mat::outer(&a, &b);
        let lhs = g.dual_norm(&m).unwrap();
        let rhs = g.h().eval_dual(&a).unwrap() * norm2(&b);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    /// The three homogenization directions for the identity flux.
    pub(crate) fn homogenization_directions() -> Vec<Vec<f64>> {
        let s = 1.0 / (2.0 * 2.0f64.sqrt());
        vec![
            vec![s * (1.0 + sqrt3()), s * (1.0 - sqrt3())],
            vec![s * (1.0 - sqrt3()), s * (1.0 + sqrt3())],
            vec![1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()],
        ]
    }

    fn hex_with_homogenization_directions() -> GeneratedNorm {
        let mut dirs = circle_directions(32);
        for e in homogenization_directions() {
            let neg = scale(&e, -1.0);
            dirs.push(e);
            dirs.push(neg);
        }
        GeneratedNorm::new(PolyhedralNorm::hexagonal(), 2, dirs).unwrap()
    }

    #[test]
    fn identity_upper_bound_hits_homogenization_value() {
        let g = hex_with_homogenization_directions();
        let target = (1.0 + sqrt3()) / 2.0f64.sqrt();
        let (upper, decomposition) = g.upper_bound(&Mat::identity(2)).unwrap();
        assert!((upper - target).abs() < 1e-8, "upper = {upper}, want {target}");
        // the decomposition reassembles the identity
        let mut sum = Mat::zeros(2, 2);
        for (theta, e) in &decomposition {
            sum = sum.add(&Mat::outer(theta, e));
        }
        assert!(sum.sub(&Mat::identity(2)).frob_norm() < 1e-8);
    }

    #[test]
    fn identity_lower_bound_certified_by_mbar() {
        let g = hex_with_homogenization_directions();
        let target = (1.0 + sqrt3()) / 2.0f64.sqrt();
        let lb = g.lower_bound(&Mat::identity(2), Some(&m_bar())).unwrap();
        assert!(lb.value >= target - 1e-10, "lower = {}", lb.value);
        assert!(g.in_subdifferential(&lb.certificate, 1e-9).unwrap());
    }

    #[test]
    fn identity_interval_certified() {
        let g = hex_with_homogenization_directions();
        let target = (1.0 + sqrt3()) / 2.0f64.sqrt();
        let iv = g.evaluate_from(&Mat::identity(2), 1e-6, Some(&m_bar())).unwrap();
        assert!(iv.converged);
        assert!(iv.gap() <= 1e-6);
        assert!(iv.lower <= target + 1e-9 && target <= iv.upper + 1e-9);
    }

    #[test]
    fn rank_one_interval_tight() {
        let g = GeneratedNorm::with_default_directions(PolyhedralNorm::hexagonal(), 2).unwrap();
        // direction from the default set
        let e = g.directions()[3].clone();
        let theta = vec![0.7, -1.1];
        let m = Mat::outer(&theta, &e);
        let iv = g.evaluate(&m, 1e-8).unwrap();
        let hval = g.h().eval(&theta).unwrap();
        assert!(iv.converged, "gap = {}", iv.gap());
        assert!((iv.upper - hval).abs() < 1e-8);
        assert!((iv.lower - hval).abs() < 1e-8);
    }

    #[test]
    fn zero_flux_interval() {
        let g = GeneratedNorm::with_default_directions(PolyhedralNorm::hexagonal(), 2).unwrap();
        let iv = g.evaluate(&Mat::zeros(2, 2), 1e-6).unwrap();
        assert_eq!(iv.lower, 0.0);
        assert_eq!(iv.upper, 0.0);
    }

    #[test]
    fn upper_bound_requires_spanning_directions() {
        let h = PolyhedralNorm::hexagonal();
        let g = GeneratedNorm::new(
            h,
            2,
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        assert!(g.upper_bound(&Mat::identity(2)).is_err());
    }
}
