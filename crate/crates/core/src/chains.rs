//! Finite chain representations: signed point distributions (0-chains) and
//! free polyhedral 1-chains with R^m coefficients, their h-masses, boundary
//! operators, and pairing against smooth test forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dist, dot, norm_inf, scale, sub, Mat};
use crate::norm::PolyhedralNorm;

/// Positions closer than this merge into one atom.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom0 {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

/// A finite signed boundary distribution sum_j theta_j delta_{x_j}.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointChain0 {
    pub atoms: Vec<Atom0>,
}

impl PointChain0 {
    /// Build with the normalization pass: atoms at identical positions are
    /// merged, zero weights dropped.
    pub fn new(atoms: Vec<Atom0>) -> Result<Self> {
        if let Some(first) = atoms.first() {
            let (n, m) = (first.x.len(), first.theta.len());
            for a in &atoms {
                if a.x.len() != n || a.theta.len() != m {
                    return Err(Error::Input("atoms have inconsistent dimensions".into()));
                }
            }
        }
        let mut merged: Vec<Atom0> = Vec::new();
        for a in atoms {
            match merged.iter_mut().find(|b| dist(&b.x, &a.x) <= ATOM_MERGE_TOL) {
                Some(b) => b.theta = crate::linalg::add(&b.theta, &a.theta),
                None => merged.push(a),
            }
        }
        merged.retain(|a| norm_inf(&a.theta) > ATOM_MERGE_TOL);
        Ok(PointChain0 { atoms: merged })
    }

    pub fn empty() -> Self {
        PointChain0 { atoms: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn m(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.theta.len())
    }

    pub fn n(&self) -> Option<usize> {
        self.atoms.first().map(|a| a.x.len())
    }

    /// Componentwise total weight.
    pub fn total_weight(&self) -> Vec<f64> {
        let Some(m) = self.m() else {
            return Vec::new();
        };
        let mut t = vec![0.0; m];
        for a in &self.atoms {
            for (ti, v) in t.iter_mut().zip(&a.theta) {
                *ti += v;
            }
        }
        t
    }

    /// Admissible as a boundary iff the total weight vanishes componentwise.
    pub fn is_admissible_boundary(&self, tol: f64) -> bool {
        self.total_weight().iter().all(|v| v.abs() <= tol)
    }

    pub fn scaled(&self, s: f64) -> PointChain0 {
        PointChain0::new(
            self.atoms
                .iter()
                .map(|a| Atom0 {
                    x: a.x.clone(),
                    theta: scale(&a.theta, s),
                })
                .collect(),
        )
        .expect("scaling preserves well-formedness")
    }

    pub fn add(&self, other: &PointChain0) -> Result<PointChain0> {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        PointChain0::new(atoms)
    }

    /// Mass sum_j h(theta_j) (0-dimensional Hausdorff weight).
    pub fn mass(&self, h: &PolyhedralNorm) -> Result<f64> {
        let mut total = 0.0;
        for a in &self.atoms {
            total += h.eval(&a.theta)?;
        }
        Ok(total)
    }

    pub fn weight_at(&self, x: &[f64]) -> Option<&[f64]> {
        self.atoms
            .iter()
            .find(|a| dist(&a.x, x) <= ATOM_MERGE_TOL)
            .map(|a| a.theta.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub theta: Vec<f64>,
}

impl Segment {
    pub fn length(&self) -> f64 {
        dist(&self.a, &self.b)
    }

    pub fn orientation(&self) -> Vec<f64> {
        scale(&sub(&self.b, &self.a), 1.0 / self.length())
    }
}

/// A free polyhedral 1-chain: straight segments with R^m multiplicities.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolyChain1 {
    pub segments: Vec<Segment>,
}

impl PolyChain1 {
    /// Build, dropping degenerate segments (length <= 1e-12 or zero theta).
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if let Some(first) = segments.first() {
            let (n, m) = (first.a.len(), first.theta.len());
            for s in &segments {
                if s.a.len() != n || s.b.len() != n || s.theta.len() != m {
                    return Err(Error::Input("segments have inconsistent dimensions".into()));
                }
            }
        }
        let kept = segments
            .into_iter()
            .filter(|s| s.length() > 1e-12 && norm_inf(&s.theta) > 0.0)
            .collect();
        Ok(PolyChain1 { segments: kept })
    }

    pub fn empty() -> Self {
        PolyChain1 {
            segments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn m(&self) -> Option<usize> {
        self.segments.first().map(|s| s.theta.len())
    }

    pub fn n(&self) -> Option<usize> {
        self.segments.first().map(|s| s.a.len())
    }

    pub fn concat(&self, other: &PolyChain1) -> Result<PolyChain1> {
        let mut segs = self.segments.clone();
        segs.extend(other.segments.iter().cloned());
        PolyChain1::new(segs)
    }

    /// The h-mass sum_s h(theta_s) H^1(s).
    pub fn mass(&self, h: &PolyhedralNorm) -> Result<f64> {
        let mut total = 0.0;
        for s in &self.segments {
            total += h.eval(&s.theta)? * s.length();
        }
        Ok(total)
    }

    /// Boundary: the signed endpoint sum theta (delta_b - delta_a), merged.
    pub fn boundary(&self) -> PointChain0 {
        let mut atoms = Vec::with_capacity(2 * self.segments.len());
        for s in &self.segments {
            atoms.push(Atom0 {
                x: s.b.clone(),
                theta: s.theta.clone(),
            });
            atoms.push(Atom0 {
                x: s.a.clone(),
                theta: scale(&s.theta, -1.0),
            });
        }
        PointChain0::new(atoms).expect("boundary atoms are well-formed")
    }

    /// Duality pairing F(omega) by per-segment Gauss-Legendre quadrature of
    /// the form's order.
    pub fn pair(&self, omega: &TestForm1) -> Result<f64> {
        let order = omega.order();
        if order < 1 {
            return Err(Error::Input("quadrature order must be >= 1".into()));
        }
        let (nodes, weights) = gauss_legendre(order);
        let mut total = 0.0;
        for s in &self.segments {
            let len = s.length();
            let dir = s.orientation();
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(&weights) {
                // map [-1, 1] -> segment
                let frac = 0.5 * (t + 1.0);
                let x: Vec<f64> = s
                    .a
                    .iter()
                    .zip(&s.b)
                    .map(|(a, b)| a + frac * (b - a))
                    .collect();
                let w_mat = omega.eval(&x)?;
                acc += w * dot(&s.theta, &w_mat.apply(&dir));
            }
            total += acc * 0.5 * len;
        }
        Ok(total)
    }

    /// All distinct segment endpoints (merge tolerance `ATOM_MERGE_TOL`).
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        let mut vs: Vec<Vec<f64>> = Vec::new();
        for s in &self.segments {
            for p in [&s.a, &s.b] {
                if !vs.iter().any(|v| dist(v, p) <= ATOM_MERGE_TOL) {
                    vs.push(p.clone());
                }
            }
        }
        vs
    }
}

/// Smooth matrix-valued test forms from a small parametric family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestForm1 {
    Constant { matrix: Mat, order: usize },
    /// omega(x) = base + sum_i x_i grad[i]
    Affine {
        base: Mat,
        grad: Vec<Mat>,
        order: usize,
    },
    /// omega(x) = amp * cos(freq . x + phase)
    Trig {
        amp: Mat,
        freq: Vec<f64>,
        phase: f64,
        order: usize,
    },
}

impl TestForm1 {
    pub fn order(&self) -> usize {
        match self {
            TestForm1::Constant { order, .. } => *order,
            TestForm1::Affine { order, .. } => *order,
            TestForm1::Trig { order, .. } => *order,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Mat> {
        match self {
            TestForm1::Constant { matrix, .. } => Ok(matrix.clone()),
            TestForm1::Affine { base, grad, .. } => {
                if grad.len() != x.len() {
                    return Err(Error::Input("affine form gradient/dimension mismatch".into()));
                }
                let mut m = base.clone();
                for (xi, gi) in x.iter().zip(grad) {
                    m = m.add(&gi.scaled(*xi));
                }
                Ok(m)
            }
            TestForm1::Trig {
                amp, freq, phase, ..
            } => {
                if freq.len() != x.len() {
                    return Err(Error::Input("trig form frequency/dimension mismatch".into()));
                }
                Ok(amp.scaled((dot(freq, x) + phase).cos()))
            }
        }
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the Legendre
/// polynomial; fine for the orders used here).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Initial guess (Chebyshev-like).
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::PolyhedralNorm;

    fn hex() -> PolyhedralNorm {
        PolyhedralNorm::hexagonal()
    }

    fn seg(a: [f64; 2], b: [f64; 2], theta: [f64; 2]) -> Segment {
        Segment {
            a: a.to_vec(),
            b: b.to_vec(),
            theta: theta.to_vec(),
        }
    }

    #[test]
    fn mass_single_segment() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [2.0, 0.0], [1.0, 1.0])]).unwrap();
        assert!((p.mass(&hex()).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(PolyChain1::empty().mass(&hex()).unwrap(), 0.0);
    }

    #[test]
    fn boundary_single_segment() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [1.0, 0.0], [2.0, 0.0])]).unwrap();
        let b = p.boundary();
        assert_eq!(b.atoms.len(), 2);
        assert_eq!(b.weight_at(&[1.0, 0.0]).unwrap(), &[2.0, 0.0]);
        assert_eq!(b.weight_at(&[0.0, 0.0]).unwrap(), &[-2.0, 0.0]);
        assert!(b.is_admissible_boundary(1e-12));
    }

    #[test]
    fn mass_invariant_under_subdivision_and_reversal() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [1.0, 1.0], [1.0, -0.5])]).unwrap();
        let split = PolyChain1::new(vec![
            seg([0.0, 0.0], [0.3, 0.3], [1.0, -0.5]),
            seg([0.3, 0.3], [1.0, 1.0], [1.0, -0.5]),
        ])
        .unwrap();
        let reversed = PolyChain1::new(vec![seg([1.0, 1.0], [0.0, 0.0], [-1.0, 0.5])]).unwrap();
        let h = hex();
        let m = p.mass(&h).unwrap();
        assert!((split.mass(&h).unwrap() - m).abs() < 1e-12);
        assert!((reversed.mass(&h).unwrap() - m).abs() < 1e-12);
        // reversal also preserves the boundary
        let b1 = p.boundary();
        let b2 = reversed.boundary();
        assert_eq!(b1.weight_at(&[1.0, 1.0]), b2.weight_at(&[1.0, 1.0]));
    }

    #[test]
    fn pair_constant_form_is_exact() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [2.0, 1.0], [1.0, 2.0])]).unwrap();
        let w = Mat::from_rows(&[vec![1.0, 0.5], vec![-0.25, 2.0]]).unwrap();
        let form = TestForm1::Constant {
            matrix: w.clone(),
            order: 8,
        };
        // theta . (omega (b - a)) for constant forms
        let expect = dot(&[1.0, 2.0], &w.apply(&[2.0, 1.0]));
        assert!((p.pair(&form).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn pair_gradient_form_telescopes() {
        // omega = D phi for affine phi(x) = C x: pairing equals the boundary
        // sum of phi . theta.
        let c = Mat::from_rows(&[vec![0.3, -1.0], vec![2.0, 0.7]]).unwrap();
        let p = PolyChain1::new(vec![
            seg([0.0, 0.0], [1.0, 0.5], [1.0, 1.0]),
            seg([1.0, 0.5], [2.0, -1.0], [0.5, -1.0]),
        ])
        .unwrap();
        let form = TestForm1::Constant {
            matrix: c.clone(),
            order: 8,
        };
        let lhs = p.pair(&form).unwrap();
        let rhs: f64 = p
            .boundary()
            .atoms
            .iter()
            .map(|a| dot(&c.apply(&a.x), &a.theta))
            .sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn quadrature_order_validated() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [1.0, 0.0], [1.0, 0.0])]).unwrap();
        let form = TestForm1::Constant {
            matrix: Mat::zeros(2, 2),
            order: 0,
        };
        assert!(p.pair(&form).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(8);
        // integral of t^6 over [-1,1] = 2/7
        let got: f64 = x.iter().zip(&w).map(|(t, w)| w * t.powi(6)).sum();
        assert!((got - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn atom_merging() {
        let c = PointChain0::new(vec![
            Atom0 {
                x: vec![0.0, 0.0],
                theta: vec![1.0, 0.0],
            },
            Atom0 {
                x: vec![0.0, 0.0],
                theta: vec![-1.0, 0.0],
            },
            Atom0 {
                x: vec![1.0, 0.0],
                theta: vec![0.5, 0.5],
            },
        ])
        .unwrap();
        assert_eq!(c.atoms.len(), 1);
    }

    #[test]
    fn chain_json_matches_schema() {
        let p = PolyChain1::new(vec![seg([0.0, 0.0], [1.0, 0.0], [1.0, 2.0])]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&p).unwrap();
        assert!(v.get("segments").is_some());
        assert!(v["segments"][0].get("a").is_some());
        let b = p.boundary();
        let v: serde_json::Value = serde_json::to_value(&b).unwrap();
        assert!(v["atoms"][0].get("x").is_some());
        assert!(v["atoms"][0].get("theta").is_some());
    }
}
