//! The chunk-parameterized second-order dual number.
//!
//! An `HDual<S, C>` carries `2C + 2` components for one function value:
//! the value itself, the first derivative with respect to the active row
//! variable `x_i`, the `C` first derivatives with respect to a contiguous
//! chunk of columns `x_j .. x_{j+C-1}`, and the `C` mixed second
//! derivatives `d2f/dx_i dx_{j+t}`. Running a function body over seeded
//! `HDual`s propagates all of them in one pass.
//!
//! The component arithmetic for any one column slot depends only on the
//! (value, row, that column, that mixed) quadruple of the operands, so the
//! number computed for a given Hessian entry is bit-identical no matter how
//! the columns are packed into chunks. Sums that would distinguish the row
//! and column roles are grouped so that swapping the two roles commutes
//! bit-exactly, which keeps directly computed `H[i][j]` and `H[j][i]`
//! identical.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::scalar::{AdNum, Scalar};

/// Second-order dual with a chunk of `C` columns. See the module docs for
/// the slot semantics.
#[derive(Clone, Copy, Debug)]
pub struct HDual<S: Scalar, const C: usize> {
    /// Function value (flat slot `v[0]`).
    pub val: S,
    /// First derivative w.r.t. the active row variable (`v[1]`).
    pub row: S,
    /// First derivatives w.r.t. the chunk columns (`v[2..=C+1]`).
    pub col: [S; C],
    /// Mixed second derivatives (`v[C+2..=2C+1]`).
    pub mixed: [S; C],
}

impl<S: Scalar, const C: usize> HDual<S, C> {
    /// Number of scalar components, `2C + 2`.
    pub const LEN: usize = 2 * C + 2;

    pub fn zero() -> Self {
        let z = S::from_f64(0.0);
        HDual { val: z, row: z, col: [z; C], mixed: [z; C] }
    }

    /// A constant: value `c`, all derivative slots zero.
    pub fn lift_constant(c: f64) -> Self {
        let mut r = Self::zero();
        r.val = S::from_f64(c);
        r
    }

    /// Read a component by its flat index (0-based, matching the
    /// `v[0..2C+1]` layout above). Panics if `k >= 2C + 2`.
    pub fn slot(&self, k: usize) -> S {
        match k {
            0 => self.val,
            1 => self.row,
            _ if k <= C + 1 => self.col[k - 2],
            _ if k <= 2 * C + 1 => self.mixed[k - C - 2],
            _ => panic!("slot index {k} out of range for HDual<_, {C}>"),
        }
    }

    /// Write a component by its flat index. Panics if out of range.
    pub fn set_slot(&mut self, k: usize, s: S) {
        match k {
            0 => self.val = s,
            1 => self.row = s,
            _ if k <= C + 1 => self.col[k - 2] = s,
            _ if k <= 2 * C + 1 => self.mixed[k - C - 2] = s,
            _ => panic!("slot index {k} out of range for HDual<_, {C}>"),
        }
    }

    /// All components in flat order, for tests and diagnostics.
    pub fn slots(&self) -> Vec<S> {
        (0..Self::LEN).map(|k| self.slot(k)).collect()
    }

    /// Second-order chain rule for a unary elementary function:
    /// value `g0 = g(u0)`, first-order slots scaled by `g1 = g'(u0)`,
    /// mixed slots `g1*u_mixed + g2*(u_row*u_col)` with `g2 = g''(u0)`.
    ///
    /// `u_row * u_col` is kept as its own product so the row/column roles
    /// enter symmetrically.
    fn chain(self, g0: S, g1: S, g2: S) -> Self {
        let mut r = HDual { val: g0, row: g1 * self.row, col: self.col, mixed: self.mixed };
        for t in 0..C {
            r.col[t] = g1 * self.col[t];
            r.mixed[t] = g1 * self.mixed[t] + g2 * (self.row * self.col[t]);
        }
        r
    }
}

impl<S: Scalar, const C: usize> Add for HDual<S, C> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut r = HDual {
            val: self.val + rhs.val,
            row: self.row + rhs.row,
            col: self.col,
            mixed: self.mixed,
        };
        for t in 0..C {
            r.col[t] = self.col[t] + rhs.col[t];
            r.mixed[t] = self.mixed[t] + rhs.mixed[t];
        }
        r
    }
}

impl<S: Scalar, const C: usize> Sub for HDual<S, C> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut r = HDual {
            val: self.val - rhs.val,
            row: self.row - rhs.row,
            col: self.col,
            mixed: self.mixed,
        };
        for t in 0..C {
            r.col[t] = self.col[t] - rhs.col[t];
            r.mixed[t] = self.mixed[t] - rhs.mixed[t];
        }
        r
    }
}

impl<S: Scalar, const C: usize> Neg for HDual<S, C> {
    type Output = Self;
    fn neg(self) -> Self {
        let mut r = HDual { val: -self.val, row: -self.row, col: self.col, mixed: self.mixed };
        for t in 0..C {
            r.col[t] = -self.col[t];
            r.mixed[t] = -self.mixed[t];
        }
        r
    }
}

impl<S: Scalar, const C: usize> Mul for HDual<S, C> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (u, v) = (self, rhs);
        let mut r = HDual {
            val: u.val * v.val,
            row: u.val * v.row + v.val * u.row,
            col: u.col,
            mixed: u.mixed,
        };
        for t in 0..C {
            r.col[t] = u.val * v.col[t] + v.val * u.col[t];
            // four-term second-order product rule; the two cross terms are
            // summed as a pair so that the row and column roles commute
            r.mixed[t] = (u.val * v.mixed[t] + (u.row * v.col[t] + v.row * u.col[t]))
                + v.val * u.mixed[t];
        }
        r
    }
}

impl<S: Scalar, const C: usize> Div for HDual<S, C> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        let (u, v) = (self, rhs);
        let val = u.val / v.val;
        let row = (u.row - val * v.row) / v.val;
        let mut r = HDual { val, row, col: u.col, mixed: u.mixed };
        for t in 0..C {
            r.col[t] = (u.col[t] - val * v.col[t]) / v.val;
            r.mixed[t] = ((u.mixed[t] - (row * v.col[t] + r.col[t] * v.row)) - val * v.mixed[t])
                / v.val;
        }
        r
    }
}

// Mixed-scalar arithmetic. Plus/minus touch only the value slot; scaling
// touches every slot; `c / u` lifts the constant and divides.

impl<S: Scalar, const C: usize> Add<f64> for HDual<S, C> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.val = self.val + S::from_f64(c);
        self
    }
}

impl<S: Scalar, const C: usize> Add<HDual<S, C>> for f64 {
    type Output = HDual<S, C>;
    fn add(self, mut u: HDual<S, C>) -> HDual<S, C> {
        u.val = S::from_f64(self) + u.val;
        u
    }
}

impl<S: Scalar, const C: usize> Sub<f64> for HDual<S, C> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.val = self.val - S::from_f64(c);
        self
    }
}

impl<S: Scalar, const C: usize> Sub<HDual<S, C>> for f64 {
    type Output = HDual<S, C>;
    fn sub(self, u: HDual<S, C>) -> HDual<S, C> {
        let mut r = -u;
        r.val = S::from_f64(self) + r.val;
        r
    }
}

impl<S: Scalar, const C: usize> Mul<f64> for HDual<S, C> {
    type Output = Self;
    fn mul(self, c: f64) -> Self {
        let c = S::from_f64(c);
        let mut r = HDual { val: c * self.val, row: c * self.row, col: self.col, mixed: self.mixed };
        for t in 0..C {
            r.col[t] = c * self.col[t];
            r.mixed[t] = c * self.mixed[t];
        }
        r
    }
}

impl<S: Scalar, const C: usize> Mul<HDual<S, C>> for f64 {
    type Output = HDual<S, C>;
    fn mul(self, u: HDual<S, C>) -> HDual<S, C> {
        u * self
    }
}

impl<S: Scalar, const C: usize> Div<f64> for HDual<S, C> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        let c = S::from_f64(c);
        let mut r = HDual { val: self.val / c, row: self.row / c, col: self.col, mixed: self.mixed };
        for t in 0..C {
            r.col[t] = self.col[t] / c;
            r.mixed[t] = self.mixed[t] / c;
        }
        r
    }
}

impl<S: Scalar, const C: usize> Div<HDual<S, C>> for f64 {
    type Output = HDual<S, C>;
    fn div(self, u: HDual<S, C>) -> HDual<S, C> {
        HDual::lift_constant(self) / u
    }
}

// Comparisons look at the value slot only, mirroring how overloaded
// comparisons must behave for control flow in generic function bodies.

impl<S: Scalar, const C: usize> PartialEq for HDual<S, C> {
    fn eq(&self, other: &Self) -> bool {
        self.val == other.val
    }
}

impl<S: Scalar, const C: usize> PartialOrd for HDual<S, C> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        self.val.partial_cmp(&other.val)
    }
}

impl<S: Scalar, const C: usize> PartialEq<f64> for HDual<S, C> {
    fn eq(&self, other: &f64) -> bool {
        self.val == S::from_f64(*other)
    }
}

impl<S: Scalar, const C: usize> PartialOrd<f64> for HDual<S, C> {
    fn partial_cmp(&self, other: &f64) -> Option<std::cmp::Ordering> {
        self.val.partial_cmp(&S::from_f64(*other))
    }
}

impl<S: Scalar, const C: usize> AdNum for HDual<S, C> {
    fn constant(c: f64) -> Self {
        Self::lift_constant(c)
    }

    fn value(&self) -> f64 {
        self.val.to_f64()
    }

    fn sin(self) -> Self {
        self.chain(self.val.sin(), self.val.cos(), -self.val.sin())
    }

    fn cos(self) -> Self {
        self.chain(self.val.cos(), -self.val.sin(), -self.val.cos())
    }

    fn exp(self) -> Self {
        let e = self.val.exp();
        self.chain(e, e, e)
    }

    fn sqrt(self) -> Self {
        let g0 = self.val.sqrt();
        let g1 = S::from_f64(0.5) / g0;
        let g2 = -(S::from_f64(0.25) / (self.val * g0));
        self.chain(g0, g1, g2)
    }

    fn ln(self) -> Self {
        let one = S::from_f64(1.0);
        let g1 = one / self.val;
        self.chain(self.val.ln(), g1, -(g1 * g1))
    }

    fn abs(self) -> Self {
        // sign(0) = 0 and second derivative 0 everywhere (subgradient
        // convention); the kink itself reports zero slopes.
        self.chain(self.val.abs(), self.val.signum0(), S::from_f64(0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    type H1 = HDual<f64, 1>;
    type H2 = HDual<f64, 2>;

    fn h1(v: [f64; 4]) -> H1 {
        HDual { val: v[0], row: v[1], col: [v[2]], mixed: [v[3]] }
    }

    fn assert_slots<const C: usize>(u: HDual<f64, C>, want: &[f64]) {
        assert_eq!(u.slots(), want.to_vec());
    }

    #[test]
    fn lift_constant_zeroes_derivatives() {
        assert_slots(H1::lift_constant(5.0), &[5.0, 0.0, 0.0, 0.0]);
        assert_slots(H2::lift_constant(0.0), &[0.0; 6]);
        assert_slots(H1::lift_constant(-3.5), &[-3.5, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn add_is_componentwise() {
        let r = h1([1.0, 2.0, 3.0, 4.0]) + h1([10.0, 20.0, 30.0, 40.0]);
        assert_slots(r, &[11.0, 22.0, 33.0, 44.0]);

        let u = h1([1.5, -2.0, 0.25, 7.0]);
        assert_eq!((u + H1::lift_constant(0.0)).slots(), u.slots());

        let a = HDual::<f64, 2> { val: 1.0, row: 1.0, col: [0.0, 0.0], mixed: [0.0, 0.0] };
        let b = HDual::<f64, 2> { val: 2.0, row: 0.0, col: [1.0, 0.0], mixed: [0.0, 0.0] };
        assert_slots(a + b, &[3.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn mul_second_order_rule() {
        // d^2(x^2)/dx^2 = 2, diagonal seed <2,1,1,0>
        let x = h1([2.0, 1.0, 1.0, 0.0]);
        assert_slots(x * x, &[4.0, 4.0, 4.0, 2.0]);

        // hand application of the four-term product rule:
        // 3*5 + 1*1 + 0*0 + 2*2 = 20
        let r = h1([3.0, 1.0, 0.0, 2.0]) * h1([2.0, 0.0, 1.0, 5.0]);
        assert_slots(r, &[6.0, 2.0, 3.0, 20.0]);

        let u = h1([1.25, -3.0, 0.5, 2.0]);
        assert_eq!((u * H1::lift_constant(1.0)).slots(), u.slots());
    }

    #[test]
    fn div_quotient_rule() {
        let r = H1::lift_constant(6.0) / H1::lift_constant(2.0);
        assert_slots(r, &[3.0, 0.0, 0.0, 0.0]);

        // 1/x at x=2: value 0.5, d = -1/x^2 = -0.25, d2 = 2/x^3 = 0.25
        let x = h1([2.0, 1.0, 1.0, 0.0]);
        let r = H1::lift_constant(1.0) / x;
        assert_slots(r, &[0.5, -0.25, -0.25, 0.25]);
    }

    #[test]
    fn div_is_inverse_of_mul() {
        // mul(div(u, v), v) ~= u componentwise for well-scaled inputs
        let us = [h1([1.3, 1.7, 1.1, 1.9]), h1([1.05, 1.5, 1.99, 1.42])];
        let vs = [h1([3.0, 1.2, 1.8, 1.6]), h1([3.0, 1.9, 1.01, 1.33])];
        for (&u, &v) in us.iter().zip(&vs) {
            let back = (u / v) * v;
            for k in 0..4 {
                let (a, b) = (back.slot(k), u.slot(k));
                assert!((a - b).abs() <= 1e-12 * b.abs(), "slot {k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn elementary_functions() {
        let s = AdNum::sin(h1([0.0, 1.0, 1.0, 0.0]));
        assert_slots(s, &[0.0, 1.0, 1.0, 0.0]);

        let s = AdNum::sin(h1([std::f64::consts::FRAC_PI_2, 1.0, 1.0, 0.0]));
        assert_eq!(s.val, 1.0);
        assert!(s.row.abs() < 1e-16 && s.col[0].abs() < 1e-16);
        assert_eq!(s.mixed[0], -1.0);

        let e = AdNum::exp(h1([0.0, 1.0, 1.0, 0.0]));
        assert_slots(e, &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn sqrt_log_domain_violations_propagate_nan() {
        let u = AdNum::sqrt(h1([-1.0, 1.0, 1.0, 0.0]));
        assert!(u.val.is_nan() && u.mixed[0].is_nan());
        let u = AdNum::ln(h1([-1.0, 1.0, 1.0, 0.0]));
        assert!(u.val.is_nan());
        let u = h1([1.0, 0.0, 0.0, 0.0]) / H1::lift_constant(0.0);
        assert!(u.val.is_infinite());
    }

    #[test]
    fn abs_kink_convention() {
        let u = AdNum::abs(h1([0.0, 1.0, 1.0, 0.0]));
        assert_slots(u, &[0.0, 0.0, 0.0, 0.0]);
        let u = AdNum::abs(h1([-2.0, 1.0, 1.0, 3.0]));
        assert_slots(u, &[2.0, -1.0, -1.0, -3.0]);
    }

    #[test]
    fn mixed_scalar_ops() {
        assert_slots(h1([2.0, 1.0, 1.0, 0.0]) + 3.0, &[5.0, 1.0, 1.0, 0.0]);
        assert_slots(2.0 * h1([2.0, 1.0, 1.0, 0.0]), &[4.0, 2.0, 2.0, 0.0]);
        assert_slots(h1([4.0, 2.0, 2.0, 0.0]) / 2.0, &[2.0, 1.0, 1.0, 0.0]);
        assert_slots(1.0 - h1([2.0, 1.0, 1.0, 0.5]), &[-1.0, -1.0, -1.0, -0.5]);
        // c / u at x=2 equals the 1/x example scaled
        let x = h1([2.0, 1.0, 1.0, 0.0]);
        assert_slots(2.0 / x, &[1.0, -0.5, -0.5, 0.5]);
    }

    #[test]
    fn comparisons_use_value_slot_only() {
        assert!(h1([2.0, 9.0, 9.0, 9.0]) < h1([3.0, 0.0, 0.0, 0.0]));
        assert!(h1([2.0, 1.0, 0.0, 0.0]) >= 2.0);
        assert!(!(h1([-1.0, 5.0, 5.0, 5.0]) > h1([-1.0, 0.0, 0.0, 0.0])));
        assert!(h1([7.0, 1.0, 2.0, 3.0]) == h1([7.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn mul_commutes_within_tolerance() {
        let u = h1([1.3, -0.7, 2.2, 0.9]);
        let v = h1([-2.1, 0.4, 1.1, -1.6]);
        let (a, b) = (u * v, v * u);
        for k in 0..4 {
            let (x, y) = (a.slot(k), b.slot(k));
            assert!((x - y).abs() <= 1e-15 * x.abs().max(y.abs()).max(1.0));
        }
    }
}
