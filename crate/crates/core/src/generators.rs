//! Seeded instance generators for property suites and the CLI. All
//! randomness flows from an explicit seed through ChaCha; there is no
//! implicit entropy anywhere.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::chains::{Atom0, PointChain0};
use crate::duality::PiecewiseCalibration;
use crate::error::{Error, Result};
use crate::flow::{FlowProblem, GeometricGraph};
use crate::grid::{Face, Grid, GridChain};
use crate::linalg::{dot, scale, Mat};
use crate::lp::LinearProgram;
use crate::norm::PolyhedralNorm;
use crate::polytope::solve_square;

/// A seeded star junction: k distinct first-quadrant directions, nonzero
/// amplitudes with sum a_i e_i = 0 (random vector projected onto the
/// null-space condition), terminal distances, the star-plus-chords candidate
/// graph under the largest norm with h(+-e_i) = 1, and the identity
/// calibration field.
pub struct StarJunction {
    pub problem: FlowProblem,
    pub expected_cost: f64,
    pub field: PiecewiseCalibration,
    pub directions: Vec<Vec<f64>>,
    pub amplitudes: Vec<f64>,
    pub lengths: Vec<f64>,
}

pub fn star_junction(k: usize, seed: u64) -> Result<StarJunction> {
    if k < 3 {
        return Err(Error::Input("star junction needs k >= 3 arms".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5747_ae21);
    let directions = loop {
        let mut angles: Vec<f64> = (0..k)
            .map(|_| rng.gen_range(0.08..std::f64::consts::FRAC_PI_2 - 0.08))
            .collect();
        angles.sort_by(f64::total_cmp);
        let spaced = angles.windows(2).all(|w| w[1] - w[0] > 0.06);
        if spaced {
            break angles
                .into_iter()
                .map(|a| vec![a.cos(), a.sin()])
                .collect::<Vec<_>>();
        }
    };
    // amplitudes: project a random vector onto {sum a_i e_i = 0}
    let amplitudes = loop {
        let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
        // E a with E the 2 x k direction matrix
        let ea = [
            (0..k).map(|i| directions[i][0] * raw[i]).sum::<f64>(),
            (0..k).map(|i| directions[i][1] * raw[i]).sum::<f64>(),
        ];
        // Gram matrix E E^T
        let g00: f64 = directions.iter().map(|e| e[0] * e[0]).sum();
        let g01: f64 = directions.iter().map(|e| e[0] * e[1]).sum();
        let g11: f64 = directions.iter().map(|e| e[1] * e[1]).sum();
        let Some(mult) = solve_square(
            &[vec![g00, g01], vec![g01, g11]],
            &[ea[0], ea[1]],
        ) else {
            continue;
        };
        let projected: Vec<f64> = (0..k)
            .map(|i| raw[i] - dot(&directions[i], &mult))
            .collect();
        if projected.iter().all(|a| a.abs() > 0.05) {
            break projected;
        }
    };
    let lengths: Vec<f64> = (0..k).map(|_| rng.gen_range(0.6..1.4f64)).collect();

    let mut primal = Vec::with_capacity(2 * k);
    for e in &directions {
        primal.push(e.clone());
        primal.push(scale(e, -1.0));
    }
    let h = PolyhedralNorm::from_primal_vertices(2, primal)?;

    let mut nodes = vec![vec![0.0, 0.0]];
    let mut atoms = Vec::with_capacity(k);
    let mut expected_cost = 0.0;
    for i in 0..k {
        let sign = amplitudes[i].signum();
        let terminal = scale(&directions[i], sign * lengths[i]);
        let theta = scale(&directions[i], amplitudes[i].abs());
        atoms.push(Atom0 {
            x: terminal.clone(),
            theta: scale(&theta, sign),
        });
        nodes.push(terminal);
        expected_cost += amplitudes[i].abs() * lengths[i];
    }
    let mut edges: Vec<(usize, usize)> = (1..=k).map(|i| (0, i)).collect();
    for i in 1..=k {
        for j in i + 1..=k {
            edges.push((i, j));
        }
    }
    let graph = GeometricGraph::new(nodes, edges)?;
    let boundary = PointChain0::new(atoms)?;
    let problem = FlowProblem::new(graph, boundary, h)?;
    let field = PiecewiseCalibration::single(
        Mat::identity(2),
        vec![-2.0, -2.0],
        vec![2.0, 2.0],
    );
    Ok(StarJunction {
        problem,
        expected_cost,
        field,
        directions,
        amplitudes,
        lengths,
    })
}

/// A random admissible planar flow problem: spanning tree plus extra edges,
/// a rotating norm choice, and a zero-sum boundary on a few terminals.
pub fn random_flow_problem(seed: u64) -> Result<FlowProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf10e_11aa);
    let nv = rng.gen_range(6..=28usize);
    let mut nodes: Vec<Vec<f64>> = Vec::with_capacity(nv);
    while nodes.len() < nv {
        let p = vec![rng.gen_range(0.0..4.0f64), rng.gen_range(0.0..4.0f64)];
        if nodes.iter().all(|q| crate::linalg::dist(q, &p) > 0.05) {
            nodes.push(p);
        }
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..nv {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    let extra = (nv as f64 * 1.3) as usize;
    for _ in 0..extra {
        let a = rng.gen_range(0..nv);
        let b = rng.gen_range(0..nv);
        if a != b && !edges.contains(&(a, b)) && !edges.contains(&(b, a)) {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let h = match seed % 3 {
        0 => PolyhedralNorm::hexagonal(),
        1 => PolyhedralNorm::l1(2)?,
        _ => random_polygon_norm(&mut rng)?,
    };
    let terminals = rng.gen_range(2..=5usize).min(nv);
    let mut picked: Vec<usize> = Vec::new();
    while picked.len() < terminals {
        let v = rng.gen_range(0..nv);
        if !picked.contains(&v) {
            picked.push(v);
        }
    }
    let mut atoms = Vec::new();
    let mut total = vec![0.0; 2];
    for (i, &v) in picked.iter().enumerate() {
        let theta = if i + 1 == picked.len() {
            scale(&total, -1.0)
        } else {
            let t = vec![rng.gen_range(-2.0..2.0f64), rng.gen_range(-2.0..2.0f64)];
            total = crate::linalg::add(&total, &t);
            t
        };
        atoms.push(Atom0 {
            x: nodes[v].clone(),
            theta,
        });
    }
    let graph = GeometricGraph::new(nodes, edges)?;
    let boundary = PointChain0::new(atoms)?;
    FlowProblem::new(graph, boundary, h)
}

fn random_polygon_norm(rng: &mut ChaCha8Rng) -> Result<PolyhedralNorm> {
    let half = rng.gen_range(2..=4usize);
    let mut dual = Vec::with_capacity(2 * half);
    let base: f64 = rng.gen_range(0.0..0.5);
    for i in 0..half {
        let angle = base + std::f64::consts::PI * i as f64 / half as f64
            + rng.gen_range(-0.2..0.2) / half as f64;
        let r = rng.gen_range(0.5..2.0f64);
        let v = vec![r * angle.cos(), r * angle.sin()];
        dual.push(scale(&v, -1.0));
        dual.push(v);
    }
    PolyhedralNorm::new(2, dual)
}

/// Size class for random LPs used by the oracle-equivalence suite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpSize {
    /// A handful of free variables with inequality rows and box bounds.
    Small,
    /// Twenty variables pinned by sixteen equalities (the enumeration
    /// oracle stays tractable because only four activities remain free).
    Large,
}

/// A random bounded feasible LP built around an interior point.
pub fn random_lp(seed: u64, size: LpSize) -> Result<LinearProgram> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x11bb_33cc);
    let (nvars, n_eq, n_ineq) = match size {
        LpSize::Small => {
            let n = rng.gen_range(3..=6usize);
            (n, 0usize, rng.gen_range(n..n + 5))
        }
        LpSize::Large => (20, 17, rng.gen_range(6..10usize)),
    };
    let x0: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
    let objective: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
    let mut eq = Vec::with_capacity(n_eq);
    let mut eq_rhs = Vec::with_capacity(n_eq);
    for _ in 0..n_eq {
        let row: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
        let rhs = dot(&row, &x0);
        eq.push(row);
        eq_rhs.push(rhs);
    }
    let mut ineq = Vec::with_capacity(n_ineq);
    let mut ineq_rhs = Vec::with_capacity(n_ineq);
    for _ in 0..n_ineq {
        let row: Vec<f64> = (0..nvars).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
        let rhs = dot(&row, &x0) + rng.gen_range(0.1..2.0f64);
        ineq.push(row);
        ineq_rhs.push(rhs);
    }
    let bounds: Vec<(Option<f64>, Option<f64>)> = x0
        .iter()
        .map(|x| {
            (
                Some(x - rng.gen_range(0.5..3.0f64)),
                Some(x + rng.gen_range(0.5..3.0f64)),
            )
        })
        .collect();
    LinearProgram::with_bounds(objective, eq, eq_rhs, ineq, ineq_rhs, bounds)
}

/// A sparse random grid chain with a handful of coefficient-carrying faces.
pub fn random_grid_chain(seed: u64, grid: &Grid, k: usize, m: usize) -> Result<GridChain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x77dd_0501);
    let mut chain = GridChain::new(grid.clone(), k, m)?;
    let count = rng.gen_range(4..=10usize);
    let n = grid.n();
    for _ in 0..count {
        let face = match k {
            0 => Face::vertex(
                (0..n)
                    .map(|a| rng.gen_range(0..=grid.dims[a] as i64))
                    .collect(),
            ),
            1 => {
                let axis = rng.gen_range(0..n) as u8;
                Face::edge(
                    (0..n)
                        .map(|a| {
                            if a == axis as usize {
                                rng.gen_range(0..grid.dims[a] as i64)
                            } else {
                                rng.gen_range(0..=grid.dims[a] as i64)
                            }
                        })
                        .collect(),
                    axis,
                )
            }
            _ => {
                let base: Vec<i64> = (0..n).map(|a| rng.gen_range(0..grid.dims[a] as i64)).collect();
                Face::square(base, 0, 1)
            }
        };
        let theta: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0f64)).collect();
        chain.accumulate(face, &theta)?;
    }
    Ok(chain)
}

/// A random material vector with entries in [-2, 2].
pub fn random_theta(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.gen_range(-2.0..2.0f64)).collect()
}

/// A random unit direction in the plane.
pub fn random_direction(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    vec![a.cos(), a.sin()]
}
