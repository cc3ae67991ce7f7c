//! Cubical grid chains: R^m coefficients on vertices, edges, and 2-faces of
//! an axis-aligned box complex, with the signed incidence boundary operator
//! and a staircase rasterization of free chains.
//!
//! Cells follow the half-open convention, so restriction to cells partitions
//! a chain without double counting; faces carry the canonical positive axis
//! orientation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chains::{PolyChain1, PointChain0, Segment, TestForm1};
use crate::error::{Error, Result};
use crate::linalg::{add, norm_inf, scale, Mat};
use crate::norm::{GeneratedNorm, HInterval, PolyhedralNorm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: Vec<f64>,
    pub delta: f64,
    /// Cells per axis.
    pub dims: Vec<usize>,
}

impl Grid {
    /// Box [min, max] with spacing delta; extents must be integer multiples
    /// of delta (within 1e-9).
    pub fn new(min: Vec<f64>, max: Vec<f64>, delta: f64) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::Input("grid box dimensions inconsistent".into()));
        }
        if !(delta > 0.0) {
            return Err(Error::Input("grid spacing must be positive".into()));
        }
        let mut dims = Vec::with_capacity(min.len());
        for (lo, hi) in min.iter().zip(&max) {
            let cells = (hi - lo) / delta;
            let rounded = cells.round();
            if rounded < 1.0 || (cells - rounded).abs() > 1e-9 {
                return Err(Error::Input(
                    "box extent must be a positive integer multiple of delta".into(),
                ));
            }
            dims.push(rounded as usize);
        }
        Ok(Grid { min, delta, dims })
    }

    pub fn n(&self) -> usize {
        self.min.len()
    }

    pub fn vertex_position(&self, base: &[i64]) -> Vec<f64> {
        self.min
            .iter()
            .zip(base)
            .map(|(lo, i)| lo + self.delta * *i as f64)
            .collect()
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> bool {
        x.iter().zip(self.min.iter().zip(&self.dims)).all(|(xi, (lo, d))| {
            *xi >= lo - tol && *xi <= lo + self.delta * *d as f64 + tol
        })
    }

    pub fn cell_center(&self, base: &[i64]) -> Vec<f64> {
        self.min
            .iter()
            .zip(base)
            .map(|(lo, i)| lo + self.delta * (*i as f64 + 0.5))
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.delta.powi(self.n() as i32)
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.dims == other.dims
            && (self.delta - other.delta).abs() <= 1e-12
            && self
                .min
                .iter()
                .zip(&other.min)
                .all(|(a, b)| (a - b).abs() <= 1e-12)
    }
}

/// An oriented k-face: base lattice vertex plus the k spanned axes (sorted).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub base: Vec<i64>,
    pub axes: Vec<u8>,
}

impl Face {
    pub fn vertex(base: Vec<i64>) -> Self {
        Face {
            base,
            axes: Vec::new(),
        }
    }

    pub fn edge(base: Vec<i64>, axis: u8) -> Self {
        Face {
            base,
            axes: vec![axis],
        }
    }

    pub fn square(base: Vec<i64>, a: u8, b: u8) -> Self {
        debug_assert!(a < b);
        Face {
            base,
            axes: vec![a, b],
        }
    }
}

/// A finite k-chain on the grid complex, k in {0, 1, 2}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridChain {
    pub grid: Grid,
    pub k: usize,
    pub m: usize,
    /// Sparse face -> coefficient list (BTreeMap keeps everything ordered and
    /// runs deterministic).
    pub faces: BTreeMap<Face, Vec<f64>>,
}

impl GridChain {
    pub fn new(grid: Grid, k: usize, m: usize) -> Result<Self> {
        if k > 2 {
            return Err(Error::Input("grid chains support k <= 2".into()));
        }
        if k > grid.n() {
            return Err(Error::Input("face dimension exceeds grid dimension".into()));
        }
        if m == 0 {
            return Err(Error::Input("material dimension must be positive".into()));
        }
        Ok(GridChain {
            grid,
            k,
            m,
            faces: BTreeMap::new(),
        })
    }

    fn face_in_box(&self, face: &Face) -> bool {
        if face.axes.len() != self.k || face.base.len() != self.grid.n() {
            return false;
        }
        let mut sorted = face.axes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted != face.axes || face.axes.iter().any(|&a| a as usize >= self.grid.n()) {
            return false;
        }
        face.base.iter().enumerate().all(|(i, &b)| {
            let extent = self.grid.dims[i] as i64;
            let along = face.axes.contains(&(i as u8));
            b >= 0 && if along { b < extent } else { b <= extent }
        })
    }

    /// Accumulate a coefficient on a face; the face must lie inside the box.
    pub fn accumulate(&mut self, face: Face, theta: &[f64]) -> Result<()> {
        if theta.len() != self.m {
            return Err(Error::Input("coefficient has wrong dimension".into()));
        }
        if !self.face_in_box(&face) {
            return Err(Error::Input(format!(
                "face {face:?} lies outside the grid box"
            )));
        }
        let entry = self
            .faces
            .entry(face.clone())
            .or_insert_with(|| vec![0.0; self.m]);
        *entry = add(entry, theta);
        if norm_inf(entry) == 0.0 {
            // exact cancellation
            self.faces.remove(&face);
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    /// h-mass with the k-dimensional Hausdorff weight delta^k.
    pub fn mass(&self, h: &PolyhedralNorm) -> Result<f64> {
        let w = self.grid.delta.powi(self.k as i32);
        let mut total = 0.0;
        for theta in self.faces.values() {
            total += h.eval(theta)? * w;
        }
        Ok(total)
    }

    /// Signed incidence boundary; GridChain(k) -> GridChain(k-1), and
    /// boundary of boundary vanishes exactly.
    pub fn boundary(&self) -> Result<GridChain> {
        if self.k == 0 {
            return Err(Error::Input("0-chains have no boundary".into()));
        }
        let mut out = GridChain::new(self.grid.clone(), self.k - 1, self.m)?;
        for (face, theta) in &self.faces {
            match face.axes.as_slice() {
                [a] => {
                    let mut head = face.base.clone();
                    head[*a as usize] += 1;
                    out.accumulate(Face::vertex(head), theta)?;
                    out.accumulate(Face::vertex(face.base.clone()), &scale(theta, -1.0))?;
                }
                [a, b] => {
                    let (a, b) = (*a, *b);
                    let mut shift_a = face.base.clone();
                    shift_a[a as usize] += 1;
                    let mut shift_b = face.base.clone();
                    shift_b[b as usize] += 1;
                    out.accumulate(Face::edge(face.base.clone(), a), theta)?;
                    out.accumulate(Face::edge(shift_a, b), theta)?;
                    out.accumulate(Face::edge(shift_b, a), &scale(theta, -1.0))?;
                    out.accumulate(Face::edge(face.base.clone(), b), &scale(theta, -1.0))?;
                }
                _ => unreachable!("k <= 2"),
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &GridChain) -> Result<GridChain> {
        if !self.grid.same_as(&other.grid) || self.k != other.k || self.m != other.m {
            return Err(Error::Input("grid chains live on different complexes".into()));
        }
        let mut out = self.clone();
        for (face, theta) in &other.faces {
            out.accumulate(face.clone(), theta)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &GridChain) -> Result<GridChain> {
        self.add(&other.scaled(-1.0))
    }

    pub fn scaled(&self, s: f64) -> GridChain {
        let mut out = self.clone();
        if s == 0.0 {
            out.faces.clear();
            return out;
        }
        for theta in out.faces.values_mut() {
            *theta = scale(theta, s);
        }
        out
    }

    /// View a 1-chain as a free polyhedral chain (for pairing and plots).
    pub fn to_polychain(&self) -> Result<PolyChain1> {
        if self.k != 1 {
            return Err(Error::Input("only 1-chains convert to segments".into()));
        }
        let mut segments = Vec::with_capacity(self.faces.len());
        for (face, theta) in &self.faces {
            let a = self.grid.vertex_position(&face.base);
            let mut head = face.base.clone();
            head[face.axes[0] as usize] += 1;
            let b = self.grid.vertex_position(&head);
            segments.push(Segment {
                a,
                b,
                theta: theta.clone(),
            });
        }
        PolyChain1::new(segments)
    }

    /// View a 0-chain as a point chain.
    pub fn to_pointchain(&self) -> Result<PointChain0> {
        if self.k != 0 {
            return Err(Error::Input("only 0-chains convert to atoms".into()));
        }
        PointChain0::new(
            self.faces
                .iter()
                .map(|(face, theta)| crate::chains::Atom0 {
                    x: self.grid.vertex_position(&face.base),
                    theta: theta.clone(),
                })
                .collect(),
        )
    }

    pub fn pair(&self, omega: &TestForm1) -> Result<f64> {
        self.to_polychain()?.pair(omega)
    }
}

/// Staircase rasterization: each segment becomes a monotone lattice path
/// between the nearest lattice nodes of its endpoints, carrying theta.
pub fn rasterize(p: &PolyChain1, grid: &Grid) -> Result<GridChain> {
    let m = p.m().unwrap_or(1);
    let mut out = GridChain::new(grid.clone(), 1, m)?;
    let n = grid.n();
    for s in &p.segments {
        if s.a.len() != n {
            return Err(Error::Input("segment dimension differs from grid".into()));
        }
        if !grid.contains_point(&s.a, 1e-9) || !grid.contains_point(&s.b, 1e-9) {
            return Err(Error::Input("segment exits the grid box".into()));
        }
        let snap = |x: &[f64]| -> Vec<i64> {
            x.iter()
                .zip(grid.min.iter().zip(&grid.dims))
                .map(|(xi, (lo, d))| {
                    let i = ((xi - lo) / grid.delta).round() as i64;
                    i.clamp(0, *d as i64)
                })
                .collect()
        };
        let ia = snap(&s.a);
        let ib = snap(&s.b);
        let mut cur = ia.clone();
        while cur != ib {
            // Step along the axis whose move keeps the node closest to the
            // true segment; monotone by construction.
            let mut best: Option<(usize, f64)> = None;
            for axis in 0..n {
                let step = (ib[axis] - cur[axis]).signum();
                if step == 0 {
                    continue;
                }
                let mut next = cur.clone();
                next[axis] += step;
                let d = point_segment_distance(&grid.vertex_position(&next), &s.a, &s.b);
                match best {
                    Some((_, bd)) if d >= bd => {}
                    _ => best = Some((axis, d)),
                }
            }
            let (axis, _) = best.expect("cur != ib implies a remaining axis");
            let step = (ib[axis] - cur[axis]).signum();
            let mut next = cur.clone();
            next[axis] += step;
            let (base, sign) = if step > 0 {
                (cur.clone(), 1.0)
            } else {
                (next.clone(), -1.0)
            };
            out.accumulate(Face::edge(base, axis as u8), &scale(&s.theta, sign))?;
            cur = next;
        }
    }
    Ok(out)
}

fn point_segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab = crate::linalg::sub(b, a);
    let ax = crate::linalg::sub(x, a);
    let denom = crate::linalg::dot(&ab, &ab);
    let t = if denom > 0.0 {
        (crate::linalg::dot(&ax, &ab) / denom).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(ai, d)| ai + t * d).collect();
    crate::linalg::dist(x, &proj)
}

/// Cell-wise diffuse flux density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffuseFlux {
    pub grid: Grid,
    pub cells: BTreeMap<Vec<i64>, Mat>,
}

impl DiffuseFlux {
    pub fn new(grid: Grid) -> Self {
        DiffuseFlux {
            grid,
            cells: BTreeMap::new(),
        }
    }

    /// Constant density M on every cell of the grid (n = 2).
    pub fn constant(grid: Grid, m: &Mat) -> Result<Self> {
        if grid.n() != 2 {
            return Err(Error::Input("constant diffuse flux implemented for n = 2".into()));
        }
        let mut out = DiffuseFlux::new(grid);
        for i in 0..out.grid.dims[0] as i64 {
            for j in 0..out.grid.dims[1] as i64 {
                out.cells.insert(vec![i, j], m.clone());
            }
        }
        Ok(out)
    }
}

/// A mixed flux: rectifiable part plus cell-wise diffuse density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedFlux {
    pub rect: PolyChain1,
    pub diffuse: DiffuseFlux,
}

impl MixedFlux {
    /// Mass interval: exact h-mass of the rectifiable part plus certified
    /// H-intervals of the diffuse densities times cell volume.
    pub fn mass(&self, g: &GeneratedNorm, gap_tol: f64) -> Result<HInterval> {
        let rect_mass = self.rect.mass(g.h())?;
        let vol = self.diffuse.grid.cell_volume();
        let mut lower = rect_mass;
        let mut upper = rect_mass;
        for density in self.diffuse.cells.values() {
            let iv = g.evaluate(density, gap_tol)?;
            lower += iv.lower * vol;
            upper += iv.upper * vol;
        }
        Ok(HInterval {
            lower,
            upper,
            certificate: Mat::zeros(g.m(), g.n()),
            decomposition: Vec::new(),
            converged: true,
        })
    }

    /// Pairing: quadrature along the rectifiable part plus the midpoint rule
    /// per diffuse cell.
    pub fn pair(&self, omega: &TestForm1) -> Result<f64> {
        let mut total = self.rect.pair(omega)?;
        let vol = self.diffuse.grid.cell_volume();
        for (base, density) in &self.diffuse.cells {
            let w = omega.eval(&self.diffuse.grid.cell_center(base))?;
            total += density.frob_dot(&w) * vol;
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(cells: usize) -> Grid {
        Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0 / cells as f64).unwrap()
    }

    #[test]
    fn boundary_of_boundary_vanishes() {
        let mut q = GridChain::new(unit_grid(4), 2, 2).unwrap();
        q.accumulate(Face::square(vec![1, 2], 0, 1), &[1.0, -2.0]).unwrap();
        q.accumulate(Face::square(vec![0, 0], 0, 1), &[0.5, 0.25]).unwrap();
        let dq = q.boundary().unwrap();
        let ddq = dq.boundary().unwrap();
        assert!(ddq.is_empty(), "dd != 0: {:?}", ddq.faces);
    }

    #[test]
    fn cell_boundary_mass() {
        let grid = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], 1.0).unwrap();
        let mut q = GridChain::new(grid, 2, 2).unwrap();
        q.accumulate(Face::square(vec![0, 0], 0, 1), &[1.0, 1.0]).unwrap();
        let h = PolyhedralNorm::hexagonal();
        assert!((q.mass(&h).unwrap() - 1.0).abs() < 1e-12);
        let dq = q.boundary().unwrap();
        assert_eq!(dq.faces.len(), 4);
        assert!((dq.mass(&h).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rasterize_axis_aligned_identity() {
        let grid = unit_grid(4);
        let p = PolyChain1::new(vec![Segment {
            a: vec![0.0, 0.25],
            b: vec![0.75, 0.25],
            theta: vec![1.0, 0.0],
        }])
        .unwrap();
        let r = rasterize(&p, &grid).unwrap();
        assert_eq!(r.faces.len(), 3);
        let h = PolyhedralNorm::hexagonal();
        assert!((r.mass(&h).unwrap() - p.mass(&h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rasterize_diagonal_staircase() {
        let grid = Grid::new(vec![0.0, 0.0], vec![1.0, 1.0], 0.5).unwrap();
        let p = PolyChain1::new(vec![Segment {
            a: vec![0.0, 0.0],
            b: vec![1.0, 1.0],
            theta: vec![1.0, 1.0],
        }])
        .unwrap();
        let r = rasterize(&p, &grid).unwrap();
        assert_eq!(r.faces.len(), 4);
        let h = PolyhedralNorm::hexagonal();
        // l1 path length |dx| + |dy| = 2
        assert!((r.mass(&h).unwrap() - 2.0 * h.eval(&[1.0, 1.0]).unwrap()).abs() < 1e-12);
        // boundary matches the snapped boundary of p
        let rb = r.boundary().unwrap().to_pointchain().unwrap();
        assert_eq!(rb.weight_at(&[1.0, 1.0]).unwrap(), &[1.0, 1.0]);
        assert_eq!(rb.weight_at(&[0.0, 0.0]).unwrap(), &[-1.0, -1.0]);
    }

    #[test]
    fn rasterize_rejects_outside_segment() {
        let grid = unit_grid(2);
        let p = PolyChain1::new(vec![Segment {
            a: vec![0.0, 0.0],
            b: vec![2.0, 0.0],
            theta: vec![1.0, 0.0],
        }])
        .unwrap();
        assert!(rasterize(&p, &grid).is_err());
    }

    #[test]
    fn out_of_box_face_rejected() {
        let mut c = GridChain::new(unit_grid(2), 1, 1).unwrap();
        assert!(c.accumulate(Face::edge(vec![2, 0], 0), &[1.0]).is_err());
        assert!(c.accumulate(Face::edge(vec![1, 2], 0), &[1.0]).is_ok());
    }
}
