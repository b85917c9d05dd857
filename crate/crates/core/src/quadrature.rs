//! Quadrature rules on the reference triangle (barycentric coordinates,
//! weights normalized to sum 1) and Gauss-Legendre rules on the unit
//! interval.

/// A symmetric triangle rule in barycentric coordinates.
///
/// Weights are normalized against the reference area, so a physical integral
/// is `|K| * Σ w_q f(x_q)`.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Rule with the requested degree of exactness (2, 4, 5, or 6).
    pub fn with_degree(degree: usize) -> TriangleRule {
        match degree {
            0..=2 => Self::midpoints(),
            3..=4 => Self::six_point(),
            5 => Self::seven_point(),
            _ => Self::twelve_point(),
        }
    }

    /// Edge-midpoint rule, exact for quadratics. Integrates products of
    /// Crouzeix-Raviart basis functions exactly.
    pub fn midpoints() -> TriangleRule {
        let third = 1.0 / 3.0;
        TriangleRule {
            points: vec![
                [0.5, 0.5, 0.0],
                [0.0, 0.5, 0.5],
                [0.5, 0.0, 0.5],
            ],
            weights: vec![third; 3],
            degree: 2,
        }
    }

    /// Six-point rule of degree 4.
    pub fn six_point() -> TriangleRule {
        let a = 0.445_948_490_915_965;
        let wa = 0.223_381_589_678_011;
        let b = 0.091_576_213_509_771;
        let wb = 0.109_951_743_655_322;
        TriangleRule {
            points: sym3(a).into_iter().chain(sym3(b)).collect(),
            weights: vec![wa, wa, wa, wb, wb, wb],
            degree: 4,
        }
    }

    /// Seven-point rule of degree 5 (centroid plus two orbits); also used as
    /// the per-element sampling pattern for geometry measurements.
    pub fn seven_point() -> TriangleRule {
        let third = 1.0 / 3.0;
        let a = 0.470_142_064_105_115;
        let wa = 0.132_394_152_788_506;
        let b = 0.101_286_507_323_456;
        let wb = 0.125_939_180_544_827;
        let mut points = vec![[third, third, third]];
        let mut weights = vec![0.225];
        points.extend(sym3(a));
        weights.extend([wa; 3]);
        points.extend(sym3(b));
        weights.extend([wb; 3]);
        TriangleRule {
            points,
            weights,
            degree: 5,
        }
    }

    /// Twelve-point rule of degree 6, used as the brute-force reference in
    /// the local-matrix oracles and the quadrature saturation checks.
    pub fn twelve_point() -> TriangleRule {
        let a = 0.063_089_014_491_502;
        let wa = 0.050_844_906_370_207;
        let b = 0.249_286_745_170_910;
        let wb = 0.116_786_275_726_379;
        let c = 0.310_352_451_033_785;
        let d = 0.053_145_049_844_816;
        let wc = 0.082_851_075_618_374;
        let mut points = sym3(a);
        let mut weights = vec![wa; 3];
        points.extend(sym3(b));
        weights.extend([wb; 3]);
        points.extend(perm6(c, d));
        weights.extend([wc; 6]);
        TriangleRule {
            points,
            weights,
            degree: 6,
        }
    }
}

fn sym3(a: f64) -> Vec<[f64; 3]> {
    let b = 1.0 - 2.0 * a;
    vec![[a, a, b], [a, b, a], [b, a, a]]
}

fn perm6(a: f64, b: f64) -> Vec<[f64; 3]> {
    let c = 1.0 - a - b;
    vec![
        [a, b, c],
        [a, c, b],
        [b, a, c],
        [b, c, a],
        [c, a, b],
        [c, b, a],
    ]
}

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre_unit(points: usize) -> (Vec<f64>, Vec<f64>) {
    let (nodes, weights): (Vec<f64>, Vec<f64>) = match points {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let x = 1.0 / 3.0_f64.sqrt();
            (vec![-x, x], vec![1.0, 1.0])
        }
        3 => {
            let x = (3.0 / 5.0_f64).sqrt();
            (vec![-x, 0.0, x], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        5 => (
            vec![
                -0.906_179_845_938_664,
                -0.538_469_310_105_683,
                0.0,
                0.538_469_310_105_683,
                0.906_179_845_938_664,
            ],
            vec![
                0.236_926_885_056_189,
                0.478_628_670_499_366,
                0.568_888_888_888_889,
                0.478_628_670_499_366,
                0.236_926_885_056_189,
            ],
        ),
        n => panic!("no Gauss-Legendre rule with {n} points wired up"),
    };
    (
        nodes.into_iter().map(|x| 0.5 * (x + 1.0)).collect(),
        weights.into_iter().map(|w| 0.5 * w).collect(),
    )
}
