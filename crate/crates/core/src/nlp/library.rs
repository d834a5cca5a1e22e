//! Small posynomial programs with optima computed by dense grid search, used
//! to check the solver against ground truth.

/// `c * prod_j x_j^a_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub c: f64,
    pub a: Vec<f64>,
}

impl Monomial {
    fn new(c: f64, a: &[f64]) -> Self {
        Monomial { c, a: a.to_vec() }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.a.iter().zip(x).fold(self.c, |acc, (a, v)| acc * v.powf(*a))
    }
}

fn sum(terms: &[Monomial], x: &[f64]) -> f64 {
    terms.iter().map(|m| m.eval(x)).sum()
}

/// Minimize a posynomial subject to posynomial constraints `g_k(x) <= 1`
/// inside a positive box.
#[derive(Debug, Clone, PartialEq)]
pub struct Posynomial {
    pub name: &'static str,
    pub bounds: Vec<(f64, f64)>,
    pub objective: Vec<Monomial>,
    pub constraints: Vec<Vec<Monomial>>,
}

impl Posynomial {
    pub fn dims(&self) -> usize {
        self.bounds.len()
    }

    /// Objective value; constraint values `ln g_k(x)` (feasible when `<= 0`)
    /// go to `g`.
    pub fn eval(&self, x: &[f64], g: &mut [f64]) -> f64 {
        for (gk, c) in g.iter_mut().zip(&self.constraints) {
            *gk = sum(c, x).ln();
        }
        sum(&self.objective, x)
    }

    /// Best feasible value over a log-spaced grid with `points` values per
    /// dimension.
    pub fn grid_optimum(&self, points: usize) -> f64 {
        let axes: Vec<Vec<f64>> = self
            .bounds
            .iter()
            .map(|&(lo, hi)| {
                (0..points)
                    .map(|i| {
                        let t = i as f64 / (points - 1) as f64;
                        (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                    })
                    .collect()
            })
            .collect();
        let mut g = vec![0.0; self.constraints.len()];
        let mut x = vec![0.0; self.dims()];
        let mut idx = vec![0usize; self.dims()];
        let mut best = f64::INFINITY;
        loop {
            for (j, &i) in idx.iter().enumerate() {
                x[j] = axes[j][i];
            }
            let f = self.eval(&x, &mut g);
            if g.iter().all(|&v| v <= 0.0) && f < best {
                best = f;
            }
            let mut j = 0;
            loop {
                idx[j] += 1;
                if idx[j] < points {
                    break;
                }
                idx[j] = 0;
                j += 1;
                if j == idx.len() {
                    return best;
                }
            }
        }
    }
}

/// Ten programs shaped like tile-size problems: reuse terms `1/T`, capacity
/// constraints on products and sums of tiles, halo factors `(T + r)`.
pub fn library() -> Vec<Posynomial> {
    let m = Monomial::new;
    vec![
        Posynomial {
            name: "square-tile",
            bounds: vec![(1.0, 64.0); 2],
            objective: vec![m(1.0, &[-1.0, 0.0]), m(1.0, &[0.0, -1.0])],
            constraints: vec![vec![m(1.0 / 64.0, &[1.0, 1.0])]],
        },
        Posynomial {
            name: "weighted-sum-budget",
            bounds: vec![(1.0, 32.0); 2],
            objective: vec![m(4.0, &[-1.0, 0.0]), m(1.0, &[0.0, -1.0])],
            constraints: vec![vec![m(1.0 / 20.0, &[1.0, 0.0]), m(1.0 / 20.0, &[0.0, 1.0])]],
        },
        Posynomial {
            name: "unconstrained-balance",
            bounds: vec![(1.0, 100.0); 2],
            objective: vec![m(1.0, &[-1.0, -1.0]), m(1.0 / 32.0, &[1.0, 0.0]), m(1.0 / 16.0, &[0.0, 1.0])],
            constraints: vec![],
        },
        Posynomial {
            name: "cube-volume",
            bounds: vec![(1.0, 64.0); 3],
            objective: vec![m(1.0, &[-1.0, 0.0, 0.0]), m(1.0, &[0.0, -1.0, 0.0]), m(1.0, &[0.0, 0.0, -1.0])],
            constraints: vec![vec![m(1.0 / 512.0, &[1.0, 1.0, 1.0])]],
        },
        Posynomial {
            name: "matmul-footprint",
            bounds: vec![(1.0, 64.0); 3],
            objective: vec![
                m(262144.0, &[-1.0, 0.0, 0.0]),
                m(262144.0, &[0.0, -1.0, 0.0]),
                m(262144.0, &[0.0, 0.0, -1.0]),
            ],
            constraints: vec![vec![
                m(1.0 / 192.0, &[1.0, 1.0, 0.0]),
                m(1.0 / 192.0, &[0.0, 1.0, 1.0]),
                m(1.0 / 192.0, &[1.0, 0.0, 1.0]),
            ]],
        },
        Posynomial {
            name: "pairwise-reuse",
            bounds: vec![(1.0, 30.0); 3],
            objective: vec![m(1.0, &[-1.0, -1.0, 0.0]), m(1.0, &[0.0, -1.0, -1.0]), m(1.0, &[-1.0, 0.0, -1.0])],
            constraints: vec![vec![
                m(1.0 / 30.0, &[1.0, 0.0, 0.0]),
                m(1.0 / 30.0, &[0.0, 1.0, 0.0]),
                m(1.0 / 30.0, &[0.0, 0.0, 1.0]),
            ]],
        },
        Posynomial {
            name: "halo-window",
            bounds: vec![(1.0, 64.0); 2],
            // (x + 2)(y + 2) / (x y)
            objective: vec![
                m(1.0, &[0.0, 0.0]),
                m(2.0, &[0.0, -1.0]),
                m(2.0, &[-1.0, 0.0]),
                m(4.0, &[-1.0, -1.0]),
            ],
            constraints: vec![vec![
                m(0.01, &[1.0, 1.0]),
                m(0.02, &[1.0, 0.0]),
                m(0.02, &[0.0, 1.0]),
                m(0.04, &[0.0, 0.0]),
            ]],
        },
        Posynomial {
            name: "fractional-exponents",
            bounds: vec![(1.0, 50.0), (1.0, 10.0)],
            objective: vec![m(1.0, &[-1.0, -0.5]), m(1.0, &[0.5, 0.0])],
            constraints: vec![vec![m(1.0 / 200.0, &[1.0, 2.0])]],
        },
        Posynomial {
            name: "volume-penalty",
            bounds: vec![(1.0, 100.0); 3],
            objective: vec![
                m(10.0, &[-1.0, 0.0, 0.0]),
                m(5.0, &[0.0, -1.0, 0.0]),
                m(1.0, &[0.0, 0.0, -1.0]),
                m(1e-3, &[1.0, 1.0, 1.0]),
            ],
            constraints: vec![],
        },
        Posynomial {
            name: "surface-budget",
            bounds: vec![(1.0, 6.0), (1.0, 64.0), (1.0, 64.0)],
            objective: vec![m(1.0, &[-1.0, 0.0, 0.0]), m(1.0, &[0.0, -1.0, 0.0]), m(1.0, &[0.0, 0.0, -1.0])],
            constraints: vec![vec![
                m(2.0 / 300.0, &[1.0, 1.0, 0.0]),
                m(2.0 / 300.0, &[0.0, 1.0, 1.0]),
                m(2.0 / 300.0, &[1.0, 0.0, 1.0]),
            ]],
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_optima() {
        let lib = library();
        assert_eq!(lib.len(), 10);
        // x = y = 8
        assert!((lib[0].grid_optimum(401) - 0.25).abs() < 1e-3);
        // x = y = z = 8
        assert!((lib[3].grid_optimum(101) - 0.375).abs() < 5e-3);
    }
}
