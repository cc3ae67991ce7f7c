//! Built-in example instances used by the CLI and the acceptance suite:
//! the hexagonal-norm transport networks with their certifying fields, the
//! homogenization decomposition of the identity flux, and the standard test
//! form battery.

use crate::chains::{Atom0, PointChain0, PolyChain1, Segment, TestForm1};
use crate::duality::{Halfspace, PiecewiseCalibration, Region};
use crate::flow::GeometricGraph;
use crate::linalg::Mat;
use crate::norm::{circle_directions, GeneratedNorm, PolyhedralNorm};

fn sqrt3() -> f64 {
    3.0f64.sqrt()
}

/// The constant calibration matrix (1/2) [[1, sqrt3], [1, -sqrt3]].
pub fn phi_bar() -> Mat {
    Mat::from_rows(&[
        vec![0.5, 0.5 * sqrt3()],
        vec![0.5, -0.5 * sqrt3()],
    ])
    .expect("static data")
}

/// The extremal certificate (1/(2 sqrt2)) [[1+sqrt3, 1-sqrt3], [1-sqrt3, 1+sqrt3]]
/// with H_*(M) = 1 and M : I = (1 + sqrt3)/sqrt2.
pub fn m_bar() -> Mat {
    let s = 1.0 / (2.0 * 2.0f64.sqrt());
    Mat::from_rows(&[
        vec![s * (1.0 + sqrt3()), s * (1.0 - sqrt3())],
        vec![s * (1.0 - sqrt3()), s * (1.0 + sqrt3())],
    ])
    .expect("static data")
}

/// The three transport directions of the hexagonal examples:
/// e1 = (1, 0), e2 = (1, sqrt3)/2, e3 = (1, -sqrt3)/2.
pub fn hex_directions() -> [Vec<f64>; 3] {
    [
        vec![1.0, 0.0],
        vec![0.5, 0.5 * sqrt3()],
        vec![0.5, -0.5 * sqrt3()],
    ]
}

/// Rank-one decomposition of the identity flux: three material bundles and
/// unit directions with sum t_i (x) e_i = I and
/// h(t1) + h(t2) + h(t3) = (1 + sqrt3)/sqrt2.
pub fn homogenization_decomposition() -> Vec<(Vec<f64>, Vec<f64>)> {
    let s = 1.0 / (2.0 * 2.0f64.sqrt());
    let c = (2.0f64 / 3.0).sqrt();
    let t3 = (sqrt3() - 1.0) / 6.0f64.sqrt();
    vec![
        (
            vec![c, 0.0],
            vec![s * (1.0 + sqrt3()) * 2.0f64.sqrt() / 2.0f64.sqrt(), s * (1.0 - sqrt3())],
        ),
        (vec![0.0, c], vec![s * (1.0 - sqrt3()), s * (1.0 + sqrt3())]),
        (vec![t3, t3], vec![1.0 / 2.0f64.sqrt(), 1.0 / 2.0f64.sqrt()]),
    ]
}

/// The homogenization value (1 + sqrt3)/sqrt2.
pub fn homogenization_value() -> f64 {
    (1.0 + sqrt3()) / 2.0f64.sqrt()
}

/// Hexagonal generated norm whose direction set includes the decomposition
/// directions on top of the default uniform fan.
pub fn hex_generated_norm() -> GeneratedNorm {
    let mut dirs = circle_directions(32);
    for (_, e) in homogenization_decomposition() {
        let neg: Vec<f64> = e.iter().map(|x| -x).collect();
        dirs.push(e);
        dirs.push(neg);
    }
    GeneratedNorm::new(PolyhedralNorm::hexagonal(), 2, dirs).expect("static data")
}

/// Standard three-form battery for relaxation studies: one affine and two
/// trigonometric forms.
pub fn form_battery() -> Vec<TestForm1> {
    vec![
        TestForm1::Affine {
            base: Mat::from_rows(&[vec![0.2, -0.1], vec![0.4, 0.3]]).expect("static"),
            grad: vec![
                Mat::from_rows(&[vec![0.5, 0.1], vec![-0.2, 0.3]]).expect("static"),
                Mat::from_rows(&[vec![0.1, -0.4], vec![0.2, 0.6]]).expect("static"),
            ],
            order: 8,
        },
        TestForm1::Trig {
            amp: Mat::from_rows(&[vec![1.0, 0.5], vec![-0.3, 0.8]]).expect("static"),
            freq: vec![2.0, 1.0],
            phase: 0.3,
            order: 8,
        },
        TestForm1::Trig {
            amp: Mat::from_rows(&[vec![0.4, -0.2], vec![0.7, 0.1]]).expect("static"),
            freq: vec![1.0, 3.0],
            phase: -0.7,
            order: 8,
        },
    ]
}

fn atoms(entries: &[(Vec<f64>, Vec<f64>)]) -> PointChain0 {
    PointChain0::new(
        entries
            .iter()
            .map(|(x, theta)| Atom0 {
                x: x.clone(),
                theta: theta.clone(),
            })
            .collect(),
    )
    .expect("static data")
}

fn segment(a: &[f64], b: &[f64], theta: &[f64]) -> Segment {
    Segment {
        a: a.to_vec(),
        b: b.to_vec(),
        theta: theta.to_vec(),
    }
}

/// The two-sources/two-sinks instance: terminals at +-(3/2, +-sqrt3/2),
/// junctions at (+-1, 0), hexagonal norm, optimal cost 6 for both boundary
/// configurations.
pub struct TwoSources {
    pub h: PolyhedralNorm,
    pub graph: GeometricGraph,
    /// Boundary sending theta2 right-up and theta3 right-down (uncrossed).
    pub boundary_straight: PointChain0,
    /// Crossed boundary: theta2 from lower-left to upper-right sink,
    /// theta3 from upper-left to lower-right sink.
    pub boundary_crossed: PointChain0,
    /// Documented optimizer for the uncrossed boundary.
    pub flow_straight: PolyChain1,
    /// Bent optimizer F of the crossed boundary (through both junctions).
    pub flow_crossed_bent: PolyChain1,
    /// Straight optimizer G of the crossed boundary (two chords).
    pub flow_crossed_straight: PolyChain1,
    /// Constant field certifying the uncrossed optimizer.
    pub field_constant: PiecewiseCalibration,
    /// Discontinuous four-region field certifying both crossed optimizers.
    pub field_four_region: PiecewiseCalibration,
}

pub fn two_sources() -> TwoSources {
    let [e1, e2, e3] = hex_directions();
    let _ = (&e1, &e2, &e3);
    let p_m1 = vec![1.0, 0.0];
    let p_p1 = vec![-1.0, 0.0];
    let p_m2 = vec![1.5, 0.5 * sqrt3()];
    let p_m3 = vec![1.5, -0.5 * sqrt3()];
    let p_p2 = vec![-1.5, -0.5 * sqrt3()];
    let p_p3 = vec![-1.5, 0.5 * sqrt3()];
    let theta1 = vec![1.0, 1.0];
    let theta2 = vec![1.0, 0.0];
    let theta3 = vec![0.0, 1.0];

    let nodes = vec![
        p_p1.clone(), // 0
        p_m1.clone(), // 1
        p_p2.clone(), // 2
        p_m2.clone(), // 3
        p_p3.clone(), // 4
        p_m3.clone(), // 5
    ];
    // documented edges of both topologies plus the straight terminal chords
    let edges = vec![
        (0, 1), // trunk
        (2, 0),
        (1, 3),
        (4, 0),
        (1, 5),
        (4, 3), // upper chord (straight optimizer)
        (2, 5), // lower chord
        (2, 3),
        (4, 5),
    ];
    let graph = GeometricGraph::new(nodes, edges).expect("static data");

    let boundary_straight = atoms(&[
        (p_m2.clone(), theta2.clone()),
        (p_p2.clone(), vec![-1.0, 0.0]),
        (p_m3.clone(), theta3.clone()),
        (p_p3.clone(), vec![0.0, -1.0]),
    ]);
    let boundary_crossed = atoms(&[
        (p_m2.clone(), theta2.clone()),
        (p_p3.clone(), vec![-1.0, 0.0]),
        (p_m3.clone(), theta3.clone()),
        (p_p2.clone(), vec![0.0, -1.0]),
    ]);

    let flow_straight = PolyChain1::new(vec![
        segment(&p_p1, &p_m1, &theta1),
        segment(&p_p2, &p_p1, &theta2),
        segment(&p_m1, &p_m2, &theta2),
        segment(&p_p3, &p_p1, &theta3),
        segment(&p_m1, &p_m3, &theta3),
    ])
    .expect("static data");

    let flow_crossed_bent = PolyChain1::new(vec![
        segment(&p_p1, &p_m1, &theta1),
        segment(&p_p3, &p_p1, &theta2),
        segment(&p_m1, &p_m2, &theta2),
        segment(&p_p2, &p_p1, &theta3),
        segment(&p_m1, &p_m3, &theta3),
    ])
    .expect("static data");

    let flow_crossed_straight = PolyChain1::new(vec![
        segment(&p_p3, &p_m2, &theta2),
        segment(&p_p2, &p_m3, &theta3),
    ])
    .expect("static data");

    let box_min = vec![-2.0, -2.0];
    let box_max = vec![2.0, 2.0];
    let field_constant =
        PiecewiseCalibration::single(phi_bar(), box_min.clone(), box_max.clone());

    // Wedges between the lines x1 = +-sqrt3 x2. The A wedges carry the
    // constant matrices of the uncrossed instance, the B wedges route each
    // material straight across.
    let s3 = sqrt3();
    let wedge = |normals: [[f64; 2]; 2], matrix: Mat| Region {
        halfspaces: normals
            .iter()
            .map(|n| Halfspace {
                normal: n.to_vec(),
                offset: 0.0,
            })
            .collect(),
        matrix,
    };
    let field_four_region = PiecewiseCalibration {
        regions: vec![
            // A+ = {x1 >= sqrt3 |x2|}
            wedge([[-1.0, s3], [-1.0, -s3]], phi_bar()),
            // A- = {-x1 >= sqrt3 |x2|}
            wedge(
                [[1.0, s3], [1.0, -s3]],
                Mat::from_rows(&[vec![0.5, -0.5 * s3], vec![0.5, 0.5 * s3]]).expect("static"),
            ),
            // B+ = {sqrt3 x2 >= |x1|}
            wedge(
                [[1.0, -s3], [-1.0, -s3]],
                Mat::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).expect("static"),
            ),
            // B- = {-sqrt3 x2 >= |x1|}
            wedge(
                [[1.0, s3], [-1.0, s3]],
                Mat::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).expect("static"),
            ),
        ],
        box_min,
        box_max,
    };

    TwoSources {
        h: PolyhedralNorm::hexagonal(),
        graph,
        boundary_straight,
        boundary_crossed,
        flow_straight,
        flow_crossed_bent,
        flow_crossed_straight,
        field_constant,
        field_four_region,
    }
}

/// The cyclic network: boundary theta4 = (-1, 1) from (0,1) to (0,-1) and
/// theta1 = (1,1) from (-1,0) to (1,0); the optimizer has cost 2 + 2 sqrt3
/// and its support contains a cycle through the four inner junctions.
pub struct CycleExample {
    pub h: PolyhedralNorm,
    pub graph: GeometricGraph,
    pub boundary: PointChain0,
    /// Documented six-segment optimizer.
    pub flow: PolyChain1,
    pub field: PiecewiseCalibration,
}

pub fn cycle() -> CycleExample {
    let s3 = sqrt3();
    let p_p1 = vec![0.0, 1.0]; // 0
    let p_m1 = vec![0.0, -1.0]; // 1
    let p_p2 = vec![-1.0, 0.0]; // 2
    let p_m2 = vec![1.0, 0.0]; // 3
    let p3 = vec![-1.0 / s3, 0.0]; // 4
    let p4 = vec![1.0 / s3, 0.0]; // 5
    let theta1 = vec![1.0, 1.0];
    let theta2 = vec![1.0, 0.0];
    let theta3 = vec![0.0, 1.0];

    let nodes = vec![
        p_p1.clone(),
        p_m1.clone(),
        p_p2.clone(),
        p_m2.clone(),
        p3.clone(),
        p4.clone(),
    ];
    let edges = vec![
        (2, 4), // theta1 inbound
        (5, 3), // theta1 outbound
        (4, 0), // theta2 up-right
        (1, 5), // theta2 up-right
        (4, 1), // theta3 down-right
        (0, 5), // theta3 down-right
        // terminal chords
        (0, 1),
        (2, 3),
        (0, 3),
        (2, 1),
    ];
    let graph = GeometricGraph::new(nodes, edges).expect("static data");

    let boundary = atoms(&[
        (p_m1.clone(), vec![-1.0, 1.0]),
        (p_p1.clone(), vec![1.0, -1.0]),
        (p_m2.clone(), theta1.clone()),
        (p_p2.clone(), vec![-1.0, -1.0]),
    ]);

    let flow = PolyChain1::new(vec![
        segment(&p_p2, &p3, &theta1),
        segment(&p4, &p_m2, &theta1),
        segment(&p3, &p_p1, &theta2),
        segment(&p_m1, &p4, &theta2),
        segment(&p3, &p_m1, &theta3),
        segment(&p_p1, &p4, &theta3),
    ])
    .expect("static data");

    let field = PiecewiseCalibration::single(phi_bar(), vec![-2.0, -2.0], vec![2.0, 2.0]);

    CycleExample {
        h: PolyhedralNorm::hexagonal(),
        graph,
        boundary,
        flow,
        field,
    }
}

/// The cost of the cyclic optimizer, 2 + 2 sqrt3.
pub fn cycle_cost() -> f64 {
    2.0 + 2.0 * sqrt3()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;

    #[test]
    fn decomposition_reassembles_identity() {
        let mut sum = Mat::zeros(2, 2);
        for (t, e) in homogenization_decomposition() {
            assert!((crate::linalg::norm2(&e) - 1.0).abs() < 1e-12);
            sum = sum.add(&Mat::outer(&t, &e));
        }
        assert!(sum.sub(&Mat::identity(2)).frob_norm() < 1e-12);
    }

    #[test]
    fn decomposition_cost_is_homogenization_value() {
        let h = PolyhedralNorm::hexagonal();
        let total: f64 = homogenization_decomposition()
            .iter()
            .map(|(t, _)| h.eval(t).unwrap())
            .sum();
        assert!((total - homogenization_value()).abs() < 1e-12);
    }

    #[test]
    fn mbar_pairs_identity_to_value() {
        assert!((m_bar().frob_dot(&Mat::identity(2)) - homogenization_value()).abs() < 1e-12);
    }

    #[test]
    fn two_sources_masses() {
        let ex = two_sources();
        assert!((ex.flow_straight.mass(&ex.h).unwrap() - 6.0).abs() < 1e-12);
        assert!((ex.flow_crossed_bent.mass(&ex.h).unwrap() - 6.0).abs() < 1e-12);
        assert!((ex.flow_crossed_straight.mass(&ex.h).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn two_sources_boundaries_match_flows() {
        let ex = two_sources();
        for (flow, f0) in [
            (&ex.flow_straight, &ex.boundary_straight),
            (&ex.flow_crossed_bent, &ex.boundary_crossed),
            (&ex.flow_crossed_straight, &ex.boundary_crossed),
        ] {
            let b = flow.boundary();
            assert_eq!(b.atoms.len(), f0.atoms.len());
            for a in &f0.atoms {
                let got = b.weight_at(&a.x).unwrap();
                for (x, y) in got.iter().zip(&a.theta) {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cycle_mass_and_boundary() {
        let ex = cycle();
        assert!((ex.flow.mass(&ex.h).unwrap() - cycle_cost()).abs() < 1e-12);
        let b = ex.flow.boundary();
        for a in &ex.boundary.atoms {
            let got = b.weight_at(&a.x).unwrap();
            for (x, y) in got.iter().zip(&a.theta) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_balances_at_junctions() {
        let ex = two_sources();
        let r = crate::duality::momentum_residual(&ex.flow_straight, &[1.0, 0.0], &ex.h)
            .unwrap();
        assert!(crate::linalg::norm2(&r) < 1e-12, "residual {r:?}");
        // boundary node keeps its single-arm imbalance
        let r = crate::duality::momentum_residual(&ex.flow_straight, &[1.5, 0.5 * sqrt3()], &ex.h)
            .unwrap();
        assert!(crate::linalg::norm2(&r) > 0.5);
    }

    #[test]
    fn constant_field_dual_value_is_six() {
        let ex = two_sources();
        let phi = phi_bar();
        let dual: f64 = ex
            .boundary_straight
            .atoms
            .iter()
            .map(|a| dot(&phi.apply(&a.x), &a.theta))
            .sum();
        assert!((dual - 6.0).abs() < 1e-12);
    }
}
