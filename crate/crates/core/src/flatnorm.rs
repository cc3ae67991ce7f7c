//! Grid flat h-norms via an exact LP over the cubical complex, lattice
//! microstructures realizing diffuse fluxes as segment families, and the
//! mass/pairing relaxation study.

use serde::{Deserialize, Serialize};

use crate::chains::{gauss_legendre, PolyChain1, Segment, TestForm1};
use crate::error::{Error, Result};
use crate::grid::{Face, Grid, GridChain};
use crate::linalg::{dot, norm2, scale, Mat};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::norm::PolyhedralNorm;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatNormResult {
    pub value: f64,
    /// Remainder chain F1 = P - boundary(F2).
    pub remainder: GridChain,
    /// Filling chain F2 on the (k+1)-faces.
    pub filling: GridChain,
    pub remainder_mass: f64,
    pub filling_mass: f64,
}

fn enumerate_faces(grid: &Grid, k: usize) -> Vec<Face> {
    let n = grid.n();
    let mut out = Vec::new();
    fn walk(grid: &Grid, axis: usize, base: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if axis == grid.n() {
            out.push(base.clone());
            return;
        }
        for i in 0..=grid.dims[axis] as i64 {
            base[axis] = i;
            walk(grid, axis + 1, base, out);
        }
    }
    let mut vertices = Vec::new();
    walk(grid, 0, &mut vec![0i64; n], &mut vertices);
    match k {
        0 => {
            for v in vertices {
                out.push(Face::vertex(v));
            }
        }
        1 => {
            for v in vertices {
                for a in 0..n {
                    if v[a] < grid.dims[a] as i64 {
                        out.push(Face::edge(v.clone(), a as u8));
                    }
                }
            }
        }
        2 => {
            for v in vertices {
                for a in 0..n {
                    for b in a + 1..n {
                        if v[a] < grid.dims[a] as i64 && v[b] < grid.dims[b] as i64 {
                            out.push(Face::square(v.clone(), a as u8, b as u8));
                        }
                    }
                }
            }
        }
        _ => {}
    }
    out
}

/// Signed incidence of the k-faces in the boundary of a (k+1)-face.
fn boundary_faces(face: &Face) -> Vec<(Face, f64)> {
    match face.axes.as_slice() {
        [a] => {
            let mut head = face.base.clone();
            head[*a as usize] += 1;
            vec![
                (Face::vertex(head), 1.0),
                (Face::vertex(face.base.clone()), -1.0),
            ]
        }
        [a, b] => {
            let (a, b) = (*a, *b);
            let mut shift_a = face.base.clone();
            shift_a[a as usize] += 1;
            let mut shift_b = face.base.clone();
            shift_b[b as usize] += 1;
            vec![
                (Face::edge(face.base.clone(), a), 1.0),
                (Face::edge(shift_a, b), 1.0),
                (Face::edge(shift_b, a), -1.0),
                (Face::edge(face.base.clone(), b), -1.0),
            ]
        }
        _ => Vec::new(),
    }
}

/// Exact flat h-norm of a grid k-chain (k in {0, 1}): minimize the h-mass of
/// P - boundary(Q) plus the h-mass of Q over fillings Q on the (k+1)-faces.
///
/// The LP is assembled in its row-light dual form (one column per face and
/// dual vertex); the optimal filling is read off the equality duals, so the
/// reported decomposition satisfies P = F1 + boundary(F2) exactly.
pub fn grid_flat_norm(p: &GridChain, h: &PolyhedralNorm) -> Result<FlatNormResult> {
    if p.k > 1 {
        return Err(Error::Input("flat norm implemented for k in {0, 1}".into()));
    }
    if p.m != h.m() {
        return Err(Error::Input(
            "chain and norm have different material dimension".into(),
        ));
    }
    let empty_low = GridChain::new(p.grid.clone(), p.k, p.m)?;
    let empty_high = GridChain::new(p.grid.clone(), p.k + 1, p.m)?;
    if p.is_empty() {
        return Ok(FlatNormResult {
            value: 0.0,
            remainder: empty_low,
            filling: empty_high,
            remainder_mass: 0.0,
            filling_mass: 0.0,
        });
    }

    let low_faces = enumerate_faces(&p.grid, p.k);
    let high_faces = enumerate_faces(&p.grid, p.k + 1);
    if high_faces.is_empty() {
        // no fillings available: the flat norm is the mass itself
        let mass = p.mass(h)?;
        return Ok(FlatNormResult {
            value: mass,
            remainder: p.clone(),
            filling: empty_high,
            remainder_mass: mass,
            filling_mass: 0.0,
        });
    }
    let low_index: std::collections::BTreeMap<&Face, usize> =
        low_faces.iter().enumerate().map(|(i, f)| (f, i)).collect();

    let m = p.m;
    let gs = h.dual_vertices();
    let kk = gs.len();
    let nl = low_faces.len();
    let nh = high_faces.len();
    let w_low = p.grid.delta.powi(p.k as i32);
    let w_high = p.grid.delta.powi(p.k as i32 + 1);

    // Columns: lambda_{f,g} per low face and dual vertex, then mu_{F,g}.
    // Rows: sum_g lambda_{f,g} = w_low per low face; sum_g mu_{F,g} = w_high
    // per high face; then m linking rows per high face tying the incident
    // lambdas to the filling epigraph.
    let ncols = kk * (nl + nh);
    let nrows = nl + nh + m * nh;
    let col_lambda = |f: usize, g: usize| f * kk + g;
    let col_mu = |ff: usize, g: usize| kk * nl + ff * kk + g;
    let row_low = |f: usize| f;
    let row_high = |ff: usize| nl + ff;
    let row_link = |ff: usize, c: usize| nl + nh + ff * m + c;

    let mut objective = vec![0.0; ncols];
    for (fi, face) in low_faces.iter().enumerate() {
        if let Some(theta) = p.faces.get(face) {
            for (gi, g) in gs.iter().enumerate() {
                objective[col_lambda(fi, gi)] = -dot(g, theta);
            }
        }
    }
    let mut eq = vec![vec![0.0; ncols]; nrows];
    let mut eq_rhs = vec![0.0; nrows];
    for fi in 0..nl {
        for gi in 0..kk {
            eq[row_low(fi)][col_lambda(fi, gi)] = 1.0;
        }
        eq_rhs[row_low(fi)] = w_low;
    }
    for ffi in 0..nh {
        for gi in 0..kk {
            eq[row_high(ffi)][col_mu(ffi, gi)] = 1.0;
        }
        eq_rhs[row_high(ffi)] = w_high;
    }
    for (ffi, face) in high_faces.iter().enumerate() {
        for (low, sign) in boundary_faces(face) {
            let fi = *low_index.get(&low).expect("boundary face inside box");
            for (gi, g) in gs.iter().enumerate() {
                for (c, gc) in g.iter().enumerate() {
                    eq[row_link(ffi, c)][col_lambda(fi, gi)] += sign * gc;
                }
            }
        }
        for (gi, g) in gs.iter().enumerate() {
            for (c, gc) in g.iter().enumerate() {
                eq[row_link(ffi, c)][col_mu(ffi, gi)] -= gc;
            }
        }
    }
    let bounds = vec![(Some(0.0), None); ncols];
    let lp = LinearProgram::with_bounds(objective, eq, eq_rhs, Vec::new(), Vec::new(), bounds)?;
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Numerical(format!(
            "flat-norm LP returned {:?}",
            sol.status
        )));
    }
    let value = -sol.objective;

    // The filling coefficients are (minus) the duals of the linking rows.
    let mut filling = empty_high;
    for (ffi, face) in high_faces.iter().enumerate() {
        let pruned: Vec<f64> = (0..m)
            .map(|c| {
                let v = -sol.y_eq[row_link(ffi, c)];
                if v.abs() > 1e-11 {
                    v
                } else {
                    0.0
                }
            })
            .collect();
        if pruned.iter().any(|v| *v != 0.0) {
            filling.accumulate(face.clone(), &pruned)?;
        }
    }
    let remainder = p.sub(&filling.boundary()?)?;
    let remainder_mass = remainder.mass(h)?;
    let filling_mass = filling.mass(h)?;
    let recomputed = remainder_mass + filling_mass;
    if (recomputed - value).abs() > 1e-9 * (1.0 + value.abs()) {
        return Err(Error::Numerical(format!(
            "flat-norm decomposition mass {recomputed:.12} disagrees with LP value {value:.12}"
        )));
    }
    Ok(FlatNormResult {
        value: recomputed,
        remainder,
        filling,
        remainder_mass,
        filling_mass,
    })
}

/// Flat distance between two chains on the same complex.
pub fn flat_distance(p: &GridChain, q: &GridChain, h: &PolyhedralNorm) -> Result<f64> {
    Ok(grid_flat_norm(&p.sub(q)?, h)?.value)
}

/// Planar microstructure: for each (theta_i, e_i) a family of parallel
/// segments in direction e_i with spacing 1/k, each carrying theta_i / k,
/// clipped to the box. Family anchors are adjusted along the normal so the
/// clipped lengths sum exactly to area/spacing, making the chain's h-mass
/// exactly sum_i h(theta_i) * area.
pub fn microstructure_chain(
    decomposition: &[(Vec<f64>, Vec<f64>)],
    k: usize,
    box_min: &[f64],
    box_max: &[f64],
) -> Result<PolyChain1> {
    if box_min.len() != 2 || box_max.len() != 2 {
        return Err(Error::Input(
            "microstructure construction is planar (n = 2)".into(),
        ));
    }
    if k == 0 {
        return Err(Error::Input("refinement must be positive".into()));
    }
    if box_min.iter().zip(box_max).any(|(lo, hi)| hi <= lo) {
        return Err(Error::Input("degenerate box".into()));
    }
    let s = 1.0 / k as f64;
    let area = (box_max[0] - box_min[0]) * (box_max[1] - box_min[1]);
    let mut segments = Vec::new();
    for (theta, e) in decomposition {
        if e.len() != 2 {
            return Err(Error::Input("directions must be planar".into()));
        }
        let len = norm2(e);
        if len < 1e-12 {
            return Err(Error::Input("zero direction in decomposition".into()));
        }
        if (len - 1.0).abs() > 1e-9 {
            return Err(Error::Input("directions must be unit vectors".into()));
        }
        let normal = vec![-e[1], e[0]];
        let offsets: Vec<f64> = corners(box_min, box_max)
            .iter()
            .map(|c| dot(&normal, c))
            .collect();
        let t_min = offsets.iter().copied().fold(f64::INFINITY, f64::min);
        let t_max = offsets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let family_len = |c: f64| -> f64 {
            let mut total = 0.0;
            let mut j = 0usize;
            loop {
                let t = t_min + c + j as f64 * s;
                if t >= t_max - 1e-13 {
                    break;
                }
                if let Some((a, b)) = clip_line(&normal, t, e, box_min, box_max) {
                    total += crate::linalg::dist(&a, &b);
                }
                j += 1;
            }
            total
        };
        let target = area / s;
        let anchor = solve_anchor(&family_len, s, target)?;
        let mut j = 0usize;
        loop {
            let t = t_min + anchor + j as f64 * s;
            if t >= t_max - 1e-13 {
                break;
            }
            if let Some((a, b)) = clip_line(&normal, t, e, box_min, box_max) {
                if crate::linalg::dist(&a, &b) > 1e-12 {
                    segments.push(Segment {
                        a,
                        b,
                        theta: scale(theta, s),
                    });
                }
            }
            j += 1;
        }
    }
    PolyChain1::new(segments)
}

fn corners(box_min: &[f64], box_max: &[f64]) -> Vec<Vec<f64>> {
    vec![
        vec![box_min[0], box_min[1]],
        vec![box_max[0], box_min[1]],
        vec![box_min[0], box_max[1]],
        vec![box_max[0], box_max[1]],
    ]
}

/// Anchor offset c in [0, s) with total clipped length equal to `target`.
/// The length is continuous piecewise linear in c with mean `target` for
/// non-axis-aligned families, so a sampled sign change plus bisection finds
/// an exact anchor; families constant in c must already be exact.
fn solve_anchor(family_len: &dyn Fn(f64) -> f64, s: f64, target: f64) -> Result<f64> {
    let g = |c: f64| family_len(c) - target;
    let samples = 64;
    let mut prev_c = 0.0;
    let mut prev_g = g(0.0);
    if prev_g.abs() <= 1e-11 * (1.0 + target) {
        return Ok(0.0);
    }
    for i in 1..=samples {
        let c = s * i as f64 / (samples + 1) as f64;
        let cur = g(c);
        if cur.abs() <= 1e-11 * (1.0 + target) {
            return Ok(c);
        }
        if cur.signum() != prev_g.signum() {
            let (mut lo, mut hi, mut glo) = (prev_c, c, prev_g);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm.abs() <= 1e-13 * (1.0 + target) {
                    return Ok(mid);
                }
                if gm.signum() == glo.signum() {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_c = c;
        prev_g = cur;
    }
    Err(Error::Numerical(
        "no anchor makes the family length exact; spacing does not divide the box".into(),
    ))
}

/// Clip the line {x : normal . x = t} (param direction e) to the box.
fn clip_line(
    normal: &[f64],
    t: f64,
    e: &[f64],
    box_min: &[f64],
    box_max: &[f64],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let p0 = scale(normal, t);
    let mut u0 = f64::NEG_INFINITY;
    let mut u1 = f64::INFINITY;
    for a in 0..2 {
        if e[a].abs() > 1e-14 {
            let r0 = (box_min[a] - p0[a]) / e[a];
            let r1 = (box_max[a] - p0[a]) / e[a];
            u0 = u0.max(r0.min(r1));
            u1 = u1.min(r0.max(r1));
        } else if p0[a] < box_min[a] - 1e-12 || p0[a] > box_max[a] + 1e-12 {
            return None;
        }
    }
    if u1 <= u0 {
        return None;
    }
    let a: Vec<f64> = p0.iter().zip(e).map(|(p, d)| p + u0 * d).collect();
    let b: Vec<f64> = p0.iter().zip(e).map(|(p, d)| p + u1 * d).collect();
    Some((a, b))
}

/// Pairing of the constant diffuse flux M on the box against a form, by
/// tensor Gauss-Legendre quadrature (the study's reference value).
pub fn diffuse_pair_exact(
    m: &Mat,
    omega: &TestForm1,
    box_min: &[f64],
    box_max: &[f64],
    order: usize,
) -> Result<f64> {
    if box_min.len() != 2 {
        return Err(Error::Input("diffuse pairing implemented for n = 2".into()));
    }
    let (nodes, weights) = gauss_legendre(order.max(4));
    let half = |lo: f64, hi: f64| (0.5 * (hi - lo), 0.5 * (hi + lo));
    let (hx, cx) = half(box_min[0], box_max[0]);
    let (hy, cy) = half(box_min[1], box_max[1]);
    let mut total = 0.0;
    for (xi, wx) in nodes.iter().zip(&weights) {
        for (yi, wy) in nodes.iter().zip(&weights) {
            let x = vec![cx + hx * xi, cy + hy * yi];
            total += wx * wy * m.frob_dot(&omega.eval(&x)?);
        }
    }
    Ok(total * hx * hy)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyRow {
    pub k: usize,
    pub mass: f64,
    pub max_pairing_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub expected_mass: f64,
}

impl StudyTable {
    /// CSV (k, mass, max_pairing_error, flat_value where applicable).
    pub fn csv(&self) -> String {
        let mut s = String::from("k,mass,max_pairing_error,flat_value\n");
        for r in &self.rows {
            s.push_str(&format!("{},{},{},\n", r.k, r.mass, r.max_pairing_error));
        }
        s
    }
}

/// Relaxation study: for each refinement k the microstructure mass (must
/// equal sum_i h(theta_i) * area) and the worst pairing error against the
/// diffuse flux over the form battery (must decrease in k).
pub fn relaxation_study(
    m: &Mat,
    decomposition: &[(Vec<f64>, Vec<f64>)],
    ks: &[usize],
    forms: &[TestForm1],
    h: &PolyhedralNorm,
    box_min: &[f64],
    box_max: &[f64],
) -> Result<StudyTable> {
    let mut sum = Mat::zeros(m.rows(), m.cols());
    for (theta, e) in decomposition {
        sum = sum.add(&Mat::outer(theta, e));
    }
    if sum.sub(m).frob_norm() > 1e-9 * (1.0 + m.frob_norm()) {
        return Err(Error::Input(
            "decomposition does not reassemble the flux matrix".into(),
        ));
    }
    let area = (box_max[0] - box_min[0]) * (box_max[1] - box_min[1]);
    let mut expected_mass = 0.0;
    for (theta, _) in decomposition {
        expected_mass += h.eval(theta)? * area;
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let chain = microstructure_chain(decomposition, k, box_min, box_max)?;
        let mass = chain.mass(h)?;
        let mut err: f64 = 0.0;
        for omega in forms {
            let exact = diffuse_pair_exact(m, omega, box_min, box_max, 16)?;
            err = err.max((chain.pair(omega)? - exact).abs());
        }
        rows.push(StudyRow {
            k,
            mass,
            max_pairing_error: err,
        });
    }
    if !decomposition.is_empty() {
        for r in &rows {
            if (r.mass - expected_mass).abs() > 1e-9 * (1.0 + expected_mass) {
                return Err(Error::Invariant(format!(
                    "microstructure mass {} deviates from {} at k = {}",
                    r.mass, expected_mass, r.k
                )));
            }
        }
        for w in rows.windows(2) {
            if w[1].max_pairing_error >= w[0].max_pairing_error {
                return Err(Error::Invariant(format!(
                    "pairing error did not decrease from k = {} to k = {}",
                    w[0].k, w[1].k
                )));
            }
        }
    }
    Ok(StudyTable {
        rows,
        expected_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Face;

    fn hex() -> PolyhedralNorm {
        PolyhedralNorm::hexagonal()
    }

    fn unit_grid(cells: usize) -> Grid {
        Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0 / cells as f64).unwrap()
    }

    /// Direct row-heavy assembly of the same LP, as an independent check of
    /// the dual-orientation solve.
    fn flat_norm_direct(p: &GridChain, h: &PolyhedralNorm) -> f64 {
        let low = enumerate_faces(&p.grid, p.k);
        let high = enumerate_faces(&p.grid, p.k + 1);
        let m = p.m;
        let gs = h.dual_vertices();
        let w_low = p.grid.delta.powi(p.k as i32);
        let w_high = p.grid.delta.powi(p.k as i32 + 1);
        // vars: q (m per high face), t (per low face), s (per high face)
        let nq = m * high.len();
        let nvars = nq + low.len() + high.len();
        let mut objective = vec![0.0; nvars];
        for f in 0..low.len() {
            objective[nq + f] = w_low;
        }
        for ff in 0..high.len() {
            objective[nq + low.len() + ff] = w_high;
        }
        let mut ineq = Vec::new();
        let mut rhs = Vec::new();
        let low_index: std::collections::BTreeMap<&Face, usize> =
            low.iter().enumerate().map(|(i, f)| (f, i)).collect();
        // g . (P_f - (dq)_f) - t_f <= 0
        for (fi, face) in low.iter().enumerate() {
            let theta = p.faces.get(face).cloned().unwrap_or_else(|| vec![0.0; m]);
            for g in gs {
                let mut row = vec![0.0; nvars];
                row[nq + fi] = -1.0;
                for (ffi, hf) in high.iter().enumerate() {
                    for (bf, sign) in boundary_faces(hf) {
                        if low_index.get(&bf) == Some(&fi) {
                            for (c, gc) in g.iter().enumerate() {
                                row[ffi * m + c] -= sign * gc;
                            }
                        }
                    }
                }
                ineq.push(row);
                rhs.push(-dot(g, &theta));
            }
        }
        // g . q_F - s_F <= 0
        for ffi in 0..high.len() {
            for g in gs {
                let mut row = vec![0.0; nvars];
                for (c, gc) in g.iter().enumerate() {
                    row[ffi * m + c] = *gc;
                }
                row[nq + low.len() + ffi] = -1.0;
                ineq.push(row);
                rhs.push(0.0);
            }
        }
        let lp = LinearProgram::new(objective, Vec::new(), Vec::new(), ineq, rhs).unwrap();
        let sol = solve_lp(&lp).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        sol.objective
    }

    #[test]
    fn single_cell_boundary() {
        // P = boundary of the unit cell with coefficient theta, delta = 1:
        // filling with the cell itself beats keeping the four edges.
        let grid = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let mut q0 = GridChain::new(grid, 2, 2).unwrap();
        q0.accumulate(Face::square(vec![0, 0], 0, 1), &[2.0, 1.0])
            .unwrap();
        let p = q0.boundary().unwrap();
        let h = hex();
        let r = grid_flat_norm(&p, &h).unwrap();
        let h_theta = h.eval(&[2.0, 1.0]).unwrap();
        assert!((r.value - h_theta).abs() < 1e-9, "value {}", r.value);
        assert!(r.remainder.is_empty());
        // boundary identity holds exactly
        let rebuilt = r.remainder.add(&r.filling.boundary().unwrap()).unwrap();
        assert_eq!(rebuilt, p);
    }

    #[test]
    fn zero_chain() {
        let p = GridChain::new(unit_grid(4), 1, 2).unwrap();
        let r = grid_flat_norm(&p, &hex()).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.filling.is_empty());
    }

    #[test]
    fn two_point_zero_chain() {
        // m = 1, h = abs: flat norm of delta_y - delta_x is
        // min(l1 grid distance, 2).
        let h = PolyhedralNorm::l1(1).unwrap();
        let grid = unit_grid(8);
        let mut close = GridChain::new(grid.clone(), 0, 1).unwrap();
        close.accumulate(Face::vertex(vec![1, 1]), &[-1.0]).unwrap();
        close.accumulate(Face::vertex(vec![2, 1]), &[1.0]).unwrap();
        let r = grid_flat_norm(&close, &h).unwrap();
        assert!((r.value - 0.125).abs() < 1e-9, "close pair: {}", r.value);
        let mut far = GridChain::new(grid, 0, 1).unwrap();
        far.accumulate(Face::vertex(vec![0, 0]), &[-1.0]).unwrap();
        far.accumulate(Face::vertex(vec![8, 8]), &[1.0]).unwrap();
        let r = grid_flat_norm(&far, &h).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "far pair: {}", r.value);
    }

    #[test]
    fn dual_orientation_matches_direct_assembly() {
        let h = hex();
        let grid = unit_grid(3);
        let mut p = GridChain::new(grid, 1, 2).unwrap();
        p.accumulate(Face::edge(vec![0, 1], 0), &[1.0, -0.5]).unwrap();
        p.accumulate(Face::edge(vec![1, 1], 1), &[0.5, 1.0]).unwrap();
        p.accumulate(Face::edge(vec![2, 2], 0), &[-1.0, 1.0]).unwrap();
        let fast = grid_flat_norm(&p, &h).unwrap();
        let direct = flat_norm_direct(&p, &h);
        assert!(
            (fast.value - direct).abs() < 1e-8,
            "dual {} vs direct {}",
            fast.value,
            direct
        );
        let rebuilt = fast
            .remainder
            .add(&fast.filling.boundary().unwrap())
            .unwrap();
        assert_eq!(rebuilt, p);
    }

    #[test]
    fn flat_norm_bounded_by_mass() {
        let h = hex();
        let mut p = GridChain::new(unit_grid(4), 1, 2).unwrap();
        p.accumulate(Face::edge(vec![1, 2], 1), &[1.0, 1.0]).unwrap();
        p.accumulate(Face::edge(vec![2, 0], 0), &[0.0, -2.0]).unwrap();
        let r = grid_flat_norm(&p, &h).unwrap();
        assert!(r.value <= p.mass(&h).unwrap() + 1e-9);
    }

    #[test]
    fn microstructure_axis_aligned() {
        let chain = microstructure_chain(
            &[(vec![2.0, 1.0], vec![1.0, 0.0])],
            4,
            &[0.0, 0.0],
            &[1.0, 1.0],
        )
        .unwrap();
        assert_eq!(chain.segments.len(), 4);
        let h = hex();
        assert!((chain.mass(&h).unwrap() - h.eval(&[2.0, 1.0]).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn microstructure_diagonal_mass_exact() {
        let e = vec![1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()];
        let chain =
            microstructure_chain(&[(vec![1.0, 1.0], e)], 4, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let h = hex();
        assert!(
            (chain.mass(&h).unwrap() - 1.0).abs() < 1e-10,
            "mass {}",
            chain.mass(&h).unwrap()
        );
    }

    #[test]
    fn microstructure_pairs_like_diffuse_flux() {
        let e = vec![1.0, 0.0];
        let m = Mat::outer(&[1.0, 0.0], &e);
        let form = TestForm1::Constant {
            matrix: Mat::from_rows(&[vec![1.0, 2.0], vec![-0.5, 0.25]]).unwrap(),
            order: 8,
        };
        let chain =
            microstructure_chain(&[(vec![1.0, 0.0], e)], 4, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        let exact = diffuse_pair_exact(&m, &form, &[0.0, 0.0], &[1.0, 1.0], 8).unwrap();
        assert!((chain.pair(&form).unwrap() - exact).abs() < 1e-12);
    }

    #[test]
    fn microstructure_rejects_zero_direction() {
        assert!(microstructure_chain(
            &[(vec![1.0, 0.0], vec![0.0, 0.0])],
            4,
            &[0.0, 0.0],
            &[1.0, 1.0]
        )
        .is_err());
    }
}
