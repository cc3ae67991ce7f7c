//! Vertex enumeration for origin-symmetric unit polytopes.
//!
//! Norm balls here are polytopes of the form {x : a_k . x <= 1}. At desk
//! scale (m <= 4, a few hundred halfspaces) brute-force enumeration of
//! active sets is entirely adequate and easy to make deterministic.

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm2};

const SINGULAR_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-9;
const MAX_ACTIVE_SETS: usize = 4_000_000;

/// Rank of the span of `vecs` (Gaussian elimination with partial pivoting).
pub fn span_rank(vecs: &[Vec<f64>], dim: usize) -> usize {
    let mut rows: Vec<Vec<f64>> = vecs.to_vec();
    let mut rank = 0;
    for col in 0..dim {
        let pivot = (rank..rows.len())
            .max_by(|&i, &j| rows[i][col].abs().total_cmp(&rows[j][col].abs()));
        let Some(p) = pivot else { break };
        if rows[p][col].abs() < 1e-12 {
            continue;
        }
        rows.swap(rank, p);
        for i in rank + 1..rows.len() {
            let f = rows[i][col] / rows[rank][col];
            for c in col..dim {
                rows[i][c] -= f * rows[rank][c];
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rank
}

/// Solve a square linear system by Gaussian elimination with partial
/// pivoting; `None` when (near-)singular.
pub fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
    let mut rhs = b.to_vec();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        let scale = m[p].iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if m[p][col].abs() < SINGULAR_TOL * scale.max(1.0) {
            return None;
        }
        m.swap(col, p);
        rhs.swap(col, p);
        for i in col + 1..n {
            let f = m[i][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[i][c] -= f * m[col][c];
                }
                rhs[i] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut v = rhs[i];
        for c in i + 1..n {
            v -= m[i][c] * x[c];
        }
        x[i] = v / m[i][i];
    }
    Some(x)
}

/// Vertices of {x in R^dim : a . x <= 1 for all a in `halfspaces`}.
///
/// The caller must guarantee boundedness (for symmetric spanning halfspace
/// sets this is automatic). Vertices are returned deduplicated, in a
/// deterministic order.
pub fn unit_polytope_vertices(dim: usize, halfspaces: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    if dim == 0 {
        return Err(Error::Input("dimension must be positive".into()));
    }
    for a in halfspaces {
        if a.len() != dim {
            return Err(Error::Input("halfspace normal has wrong dimension".into()));
        }
    }
    if halfspaces.len() < dim {
        return Err(Error::Invariant(
            "too few halfspaces; polytope is unbounded".into(),
        ));
    }
    if span_rank(halfspaces, dim) < dim {
        return Err(Error::Invariant(
            "halfspace normals do not span the space; polytope is unbounded".into(),
        ));
    }

    let k = halfspaces.len();
    let combos = n_choose_k(k, dim);
    if combos > MAX_ACTIVE_SETS {
        return Err(Error::Input(format!(
            "vertex enumeration over {combos} active sets exceeds desk-scale cap"
        )));
    }

    let ones = vec![1.0; dim];
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let rows: Vec<Vec<f64>> = idx.iter().map(|&i| halfspaces[i].clone()).collect();
        if let Some(x) = solve_square(&rows, &ones) {
            let xscale = 1.0 + norm2(&x);
            let feasible = halfspaces.iter().all(|a| dot(a, &x) <= 1.0 + FEAS_TOL * xscale);
            if feasible && !vertices.iter().any(|v| dist(v, &x) <= DEDUP_TOL * xscale) {
                vertices.push(x);
            }
        }
        if !next_combination(&mut idx, k) {
            break;
        }
    }

    if vertices.is_empty() {
        return Err(Error::Invariant(
            "polytope has no vertices; input is degenerate".into(),
        ));
    }
    // Deterministic order regardless of enumeration path.
    vertices.sort_by(|a, b| {
        for (x, y) in a.iter().zip(b) {
            match x.total_cmp(y) {
                std::cmp::Ordering::Equal => continue,
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
    Ok(vertices)
}

fn n_choose_k(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] != i + n - k {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_from_linf_ball() {
        // {|x1| <= 1, |x2| <= 1} has the four corner vertices.
        let hs = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
        ];
        let v = unit_polytope_vertices(2, &hs).unwrap();
        assert_eq!(v.len(), 4);
        for x in &v {
            assert!((x[0].abs() - 1.0).abs() < 1e-12);
            assert!((x[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hexagon_polar() {
        // Halfspaces from the hexagonal norm max{|t1|,|t2|,|t1-t2|}:
        // the feasible set is the hexagon with vertices +-(1,1),+-(1,0),+-(0,1).
        let hs = vec![
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, -1.0],
            vec![1.0, -1.0],
            vec![-1.0, 1.0],
        ];
        let v = unit_polytope_vertices(2, &hs).unwrap();
        assert_eq!(v.len(), 6);
        let expect = [
            [1.0, 1.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [-1.0, -1.0],
            [-1.0, 0.0],
            [0.0, -1.0],
        ];
        for e in expect {
            assert!(
                v.iter().any(|x| dist(x, &e) < 1e-12),
                "missing vertex {e:?} in {v:?}"
            );
        }
    }

    #[test]
    fn unbounded_detected() {
        let hs = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        assert!(unit_polytope_vertices(2, &hs).is_err());
    }

    #[test]
    fn rank() {
        assert_eq!(span_rank(&[vec![1.0, 2.0], vec![2.0, 4.0]], 2), 1);
        assert_eq!(span_rank(&[vec![1.0, 0.0], vec![1.0, 1.0]], 2), 2);
    }
}
