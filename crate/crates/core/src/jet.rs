//! Second-order jets: forward-mode automatic differentiation in three
//! variables carrying value, gradient, and Hessian.
//!
//! A [`Jet2`] represents the degree-2 Taylor data of a scalar expression in
//! the ambient coordinates `x = (x1, x2, x3)`. Propagating jets through the
//! arithmetic of a closed-form expression yields its exact (to floating
//! point) gradient and Hessian, which is what the tangential differential
//! operators in [`crate::tangential`] are built from.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Value, gradient, and symmetric Hessian of a scalar expression at a point.
#[derive(Clone, Copy, Debug)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vector3<f64>,
    pub hess: Matrix3<f64>,
}

impl Jet2 {
    /// A constant: zero gradient and Hessian.
    #[inline]
    pub fn constant(value: f64) -> Self {
        Jet2 {
            value,
            grad: Vector3::zeros(),
            hess: Matrix3::zeros(),
        }
    }

    /// The coordinate `x[axis]` seeded at the point `x`.
    #[inline]
    pub fn variable(x: &Vector3<f64>, axis: usize) -> Self {
        let mut grad = Vector3::zeros();
        grad[axis] = 1.0;
        Jet2 {
            value: x[axis],
            grad,
            hess: Matrix3::zeros(),
        }
    }

    /// All three coordinates seeded at `x`.
    #[inline]
    pub fn coordinates(x: &Vector3<f64>) -> [Jet2; 3] {
        [
            Jet2::variable(x, 0),
            Jet2::variable(x, 1),
            Jet2::variable(x, 2),
        ]
    }

    /// Composition with a univariate function given by `(f, f', f'')` at
    /// `self.value`:
    ///
    /// ```text
    /// grad(f∘g) = f'(g) ∇g
    /// hess(f∘g) = f'(g) H_g + f''(g) ∇g ∇gᵀ
    /// ```
    #[inline]
    fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Jet2 {
            value: f,
            grad: df * self.grad,
            hess: df * self.hess + ddf * (self.grad * self.grad.transpose()),
        }
        .symmetrized()
    }

    /// Re-symmetrize the Hessian to suppress rounding drift.
    #[inline]
    fn symmetrized(mut self) -> Self {
        self.hess = 0.5 * (self.hess + self.hess.transpose());
        self
    }

    #[inline]
    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    #[inline]
    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    /// Square root. A non-positive argument produces non-finite jets that are
    /// rejected by [`eval_scalar`].
    #[inline]
    pub fn sqrt(self) -> Self {
        let r = self.value.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * r * r))
    }

    /// Integer power with the usual convention `x^0 = 1`.
    #[inline]
    pub fn powi(self, n: i32) -> Self {
        match n {
            0 => Jet2::constant(1.0),
            1 => self,
            _ => {
                let v = self.value;
                self.chain(
                    v.powi(n),
                    f64::from(n) * v.powi(n - 1),
                    f64::from(n * (n - 1)) * v.powi(n - 2),
                )
            }
        }
    }

    /// Reciprocal, `1/g`. Division by (near) zero yields non-finite jets.
    #[inline]
    pub fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    /// True if value, gradient, and Hessian are all finite.
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.grad.iter().all(|g| g.is_finite())
            && self.hess.iter().all(|h| h.is_finite())
    }
}

impl std::ops::Add for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + rhs.value,
            grad: self.grad + rhs.grad,
            hess: self.hess + rhs.hess,
        }
    }
}

impl std::ops::Sub for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self.value - rhs.value,
            grad: self.grad - rhs.grad,
            hess: self.hess - rhs.hess,
        }
    }
}

impl std::ops::Neg for Jet2 {
    type Output = Jet2;
    #[inline]
    fn neg(self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: -self.grad,
            hess: -self.hess,
        }
    }
}

impl std::ops::Mul for Jet2 {
    type Output = Jet2;
    /// Product rule: `H(fg) = f H_g + g H_f + ∇f ∇gᵀ + ∇g ∇fᵀ`.
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        let cross = self.grad * rhs.grad.transpose();
        Jet2 {
            value: self.value * rhs.value,
            grad: self.value * rhs.grad + rhs.value * self.grad,
            hess: self.value * rhs.hess + rhs.value * self.hess + cross + cross.transpose(),
        }
        .symmetrized()
    }
}

impl std::ops::Div for Jet2 {
    type Output = Jet2;
    #[inline]
    fn div(self, rhs: Jet2) -> Jet2 {
        self * rhs.recip()
    }
}

impl std::ops::Mul<Jet2> for f64 {
    type Output = Jet2;
    #[inline]
    fn mul(self, rhs: Jet2) -> Jet2 {
        Jet2 {
            value: self * rhs.value,
            grad: self * rhs.grad,
            hess: self * rhs.hess,
        }
    }
}

impl std::ops::Add<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn add(mut self, rhs: f64) -> Jet2 {
        self.value += rhs;
        self
    }
}

impl std::ops::Sub<f64> for Jet2 {
    type Output = Jet2;
    #[inline]
    fn sub(mut self, rhs: f64) -> Jet2 {
        self.value -= rhs;
        self
    }
}

/// Evaluate a scalar expression at `x` with fully seeded jets.
///
/// Returns [`Error::Domain`] when the expression leaves the domain of one of
/// its elementary functions (square root of a negative number, division by
/// zero), which surfaces as non-finite jet data.
pub fn eval_scalar<F>(expr: F, x: &Vector3<f64>) -> Result<Jet2>
where
    F: Fn(&[Jet2; 3]) -> Jet2,
{
    let out = expr(&Jet2::coordinates(x));
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::Domain("expression produced non-finite jet data"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fd_grad(f: impl Fn(&Vector3<f64>) -> f64, x: &Vector3<f64>, h: f64) -> Vector3<f64> {
        Vector3::from_fn(|i, _| {
            let mut xp = *x;
            let mut xm = *x;
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    fn fd_hess(f: impl Fn(&Vector3<f64>) -> f64 + Copy, x: &Vector3<f64>, h: f64) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| {
            if i == j {
                let mut xp = *x;
                let mut xm = *x;
                xp[i] += h;
                xm[i] -= h;
                (f(&xp) - 2.0 * f(x) + f(&xm)) / (h * h)
            } else {
                let mut xpp = *x;
                let mut xpm = *x;
                let mut xmp = *x;
                let mut xmm = *x;
                xpp[i] += h;
                xpp[j] += h;
                xpm[i] += h;
                xpm[j] -= h;
                xmp[i] -= h;
                xmp[j] += h;
                xmm[i] -= h;
                xmm[j] -= h;
                (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
            }
        })
    }

    #[test]
    fn square_of_first_coordinate() {
        let x = Vector3::new(3.0, 0.0, 0.0);
        let j = eval_scalar(|x| x[0] * x[0], &x).unwrap();
        assert_eq!(j.value, 9.0);
        assert_eq!(j.grad, Vector3::new(6.0, 0.0, 0.0));
        assert_eq!(j.hess, Matrix3::from_diagonal(&Vector3::new(2.0, 0.0, 0.0)));
    }

    #[test]
    fn sine_product_at_stationary_point() {
        let x = Vector3::new(0.0, 1.0, std::f64::consts::FRAC_PI_2);
        let j = eval_scalar(|x| (x[1] * x[2]).sin(), &x).unwrap();
        assert_relative_eq!(j.value, 1.0, epsilon = 1e-15);
        // cos(pi/2) = 0 kills the whole gradient.
        assert!(j.grad.norm() < 1e-15, "grad = {:?}", j.grad);
    }

    #[test]
    fn torus_level_set_jet_matches_finite_differences() {
        let phi = |x: &[Jet2; 3]| {
            let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
            x[2] * x[2] + (rho - 1.0) * (rho - 1.0) - Jet2::constant(0.25)
        };
        let phi_f = |x: &Vector3<f64>| {
            let rho = x.xy().norm();
            x[2] * x[2] + (rho - 1.0) * (rho - 1.0) - 0.25
        };
        let p = Vector3::new(1.5, 0.0, 0.0);
        let j = eval_scalar(phi, &p).unwrap();
        assert!(j.value.abs() < 1e-15);
        let g = fd_grad(phi_f, &p, 1e-5);
        assert!((j.grad - g).norm() < 1e-8, "jet grad {:?} vs fd {:?}", j.grad, g);
    }

    #[test]
    fn domain_errors_are_reported() {
        let x = Vector3::new(-2.0, 0.0, 1.0);
        assert!(matches!(
            eval_scalar(|x| x[0].sqrt(), &x),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            eval_scalar(|x| x[2] / (x[1] * x[1]), &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn hessian_symmetric_after_composites() {
        let exprs: [fn(&[Jet2; 3]) -> Jet2; 3] = [
            |x| ((x[0] * x[1]).sin() + x[2].powi(3)) / (x[0] * x[0] + Jet2::constant(1.0)),
            |x| (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt().recip(),
            |x| (x[0].cos() * x[1].sin() - x[2] * x[0]).powi(2),
        ];
        let x = Vector3::new(0.7, -0.4, 1.3);
        for expr in exprs {
            let j = eval_scalar(expr, &x).unwrap();
            assert!((j.hess - j.hess.transpose()).norm() < 1e-13);
        }
    }

    /// Random composite expressions: jets against central differences.
    #[test]
    fn random_composites_match_finite_differences() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        #[derive(Clone)]
        enum Expr {
            Coord(usize),
            Const(f64),
            Add(Box<Expr>, Box<Expr>),
            Sub(Box<Expr>, Box<Expr>),
            Mul(Box<Expr>, Box<Expr>),
            Div(Box<Expr>, Box<Expr>),
            Sin(Box<Expr>),
            Cos(Box<Expr>),
            SqrtShift(Box<Expr>),
            Pow(Box<Expr>, i32),
        }

        impl Expr {
            fn random(rng: &mut ChaCha8Rng, depth: usize) -> Expr {
                if depth == 0 {
                    return if rng.random_bool(0.7) {
                        Expr::Coord(rng.random_range(0..3))
                    } else {
                        Expr::Const(rng.random_range(-2.0..2.0))
                    };
                }
                let a = Box::new(Expr::random(rng, depth - 1));
                let b = Box::new(Expr::random(rng, depth - 1));
                match rng.random_range(0..8) {
                    0 => Expr::Add(a, b),
                    1 => Expr::Sub(a, b),
                    2 | 3 => Expr::Mul(a, b),
                    // denominator shifted away from zero
                    4 => Expr::Div(a, Box::new(Expr::SqrtShift(b))),
                    5 => Expr::Sin(a),
                    6 => Expr::Cos(a),
                    _ => Expr::Pow(a, rng.random_range(2..4)),
                }
            }

            fn jet(&self, x: &[Jet2; 3]) -> Jet2 {
                match self {
                    Expr::Coord(i) => x[*i],
                    Expr::Const(c) => Jet2::constant(*c),
                    Expr::Add(a, b) => a.jet(x) + b.jet(x),
                    Expr::Sub(a, b) => a.jet(x) - b.jet(x),
                    Expr::Mul(a, b) => a.jet(x) * b.jet(x),
                    Expr::Div(a, b) => a.jet(x) / b.jet(x),
                    Expr::Sin(a) => a.jet(x).sin(),
                    Expr::Cos(a) => a.jet(x).cos(),
                    Expr::SqrtShift(a) => {
                        let j = a.jet(x);
                        (j * j + Jet2::constant(4.0)).sqrt()
                    }
                    Expr::Pow(a, n) => a.jet(x).powi(*n),
                }
            }

            fn eval(&self, x: &Vector3<f64>) -> f64 {
                match self {
                    Expr::Coord(i) => x[*i],
                    Expr::Const(c) => *c,
                    Expr::Add(a, b) => a.eval(x) + b.eval(x),
                    Expr::Sub(a, b) => a.eval(x) - b.eval(x),
                    Expr::Mul(a, b) => a.eval(x) * b.eval(x),
                    Expr::Div(a, b) => a.eval(x) / b.eval(x),
                    Expr::Sin(a) => a.eval(x).sin(),
                    Expr::Cos(a) => a.eval(x).cos(),
                    Expr::SqrtShift(a) => {
                        let v = a.eval(x);
                        (v * v + 4.0).sqrt()
                    }
                    Expr::Pow(a, n) => a.eval(x).powi(*n),
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut tested = 0;
        while tested < 50 {
            let expr = Expr::random(&mut rng, 3);
            let x = Vector3::new(
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
                rng.random_range(-1.5..1.5),
            );
            let Ok(j) = eval_scalar(|xs| expr.jet(xs), &x) else {
                continue;
            };
            // Skip expressions with huge derivatives; finite differences lose
            // too many digits there to make a meaningful comparison.
            let scale = 1.0 + j.grad.norm() + j.hess.norm();
            if scale > 1e3 {
                continue;
            }
            let g = fd_grad(|y| expr.eval(y), &x, 1e-6);
            let h = fd_hess(|y| expr.eval(y), &x, 1e-4);
            assert!(
                (j.grad - g).norm() <= 1e-6 * scale,
                "gradient mismatch: {:?} vs {:?}",
                j.grad,
                g
            );
            assert!(
                (j.hess - h).norm() <= 1e-4 * scale,
                "hessian mismatch: {:?} vs {:?}",
                j.hess,
                h
            );
            tested += 1;
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn close(a: &Jet2, b: &Jet2, tol: f64) -> bool {
            (a.value - b.value).abs() <= tol
                && (a.grad - b.grad).norm() <= tol
                && (a.hess - b.hess).norm() <= tol
        }

        proptest! {
            /// Distributivity holds at jet level, not just for values.
            #[test]
            fn multiplication_distributes(
                a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64
            ) {
                let x = Vector3::new(a, b, c);
                let [j0, j1, j2] = Jet2::coordinates(&x);
                let lhs = (j0 + j1) * j2;
                let rhs = j0 * j2 + j1 * j2;
                prop_assert!(close(&lhs, &rhs, 1e-12));
            }

            /// sin^2 + cos^2 = 1 including all derivatives.
            #[test]
            fn pythagorean_identity(a in -3.0..3.0f64) {
                let x = Vector3::new(a, 0.0, 0.0);
                let j = Jet2::variable(&x, 0);
                let one = j.sin() * j.sin() + j.cos() * j.cos();
                prop_assert!(close(&one, &Jet2::constant(1.0), 1e-14));
            }

            /// sqrt(g)^2 recovers g wherever sqrt is defined.
            #[test]
            fn sqrt_square_roundtrip(a in 0.1..4.0f64, b in -2.0..2.0f64) {
                let x = Vector3::new(a, b, 0.0);
                let g = Jet2::variable(&x, 0) * Jet2::variable(&x, 0)
                    + Jet2::variable(&x, 1) * Jet2::variable(&x, 1)
                    + Jet2::constant(0.5);
                let r = g.sqrt();
                prop_assert!(close(&(r * r), &g, 1e-12));
            }
        }
    }
}
