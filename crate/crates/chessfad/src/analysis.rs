//! Arithmetic-cost verification and the finite-difference oracle.
//!
//! `CountingScalar` is an `f64` wrapper whose multiplications and
//! additions are tallied into a thread-local session, letting the chunked
//! engines be run unchanged and measured. `predict_chunk_counts` and
//! `predict_schunk_counts` are the closed-form cost model for a function
//! of `M` carrier multiplications and `A` carrier additions; see the
//! module docs on [`predict_chunk_counts`] for a known one-off in the
//! addition model.
//!
//! `fd_gradient` / `fd_hessian` are central-difference oracles evaluated
//! on plain scalars, independent of the dual-number propagation path.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{ChessfadError, Result};
use crate::hessian::{chunk_hess, schunk_hess, DiffFn, HessianMatrix};
use crate::scalar::Scalar;

/// Exact tallies of scalar multiplications and additions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCount {
    pub mults: u64,
    pub adds: u64,
}

impl Add for OpCount {
    type Output = OpCount;
    fn add(self, rhs: OpCount) -> OpCount {
        OpCount { mults: self.mults + rhs.mults, adds: self.adds + rhs.adds }
    }
}

thread_local! {
    static SESSION_ACTIVE: Cell<bool> = const { Cell::new(false) };
    static MULTS: Cell<u64> = const { Cell::new(0) };
    static ADDS: Cell<u64> = const { Cell::new(0) };
    static OTHER: Cell<u64> = const { Cell::new(0) };
}

/// Run `body` in a counting session and return its result plus the tally
/// of [`CountingScalar`] operations it performed, along with the number of
/// operations outside the add/mul set (divisions, elementary functions).
///
/// Sessions are thread-local and may not be nested.
pub fn count_ops<R>(body: impl FnOnce() -> R) -> (R, OpCount, u64) {
    assert!(
        !SESSION_ACTIVE.with(|a| a.replace(true)),
        "counting sessions cannot be nested"
    );
    MULTS.with(|c| c.set(0));
    ADDS.with(|c| c.set(0));
    OTHER.with(|c| c.set(0));
    let out = body();
    SESSION_ACTIVE.with(|a| a.set(false));
    let tally = OpCount { mults: MULTS.with(Cell::get), adds: ADDS.with(Cell::get) };
    (out, tally, OTHER.with(Cell::get))
}

#[inline]
fn bump(cell: &'static std::thread::LocalKey<Cell<u64>>) {
    cell.with(|c| c.set(c.get() + 1));
}

/// An `f64` that tallies its multiplications and additions.
///
/// Results are bit-identical to plain `f64` arithmetic; comparisons,
/// copies, and seeding assignments tally nothing. Negation is a sign flip
/// and tallies nothing; operations outside the add/mul model (division,
/// elementary functions) are tracked separately so strict counting runs
/// can reject them.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct CountingScalar(pub f64);

impl Add for CountingScalar {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        bump(&ADDS);
        CountingScalar(self.0 + rhs.0)
    }
}

impl Sub for CountingScalar {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        bump(&ADDS);
        CountingScalar(self.0 - rhs.0)
    }
}

impl Mul for CountingScalar {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        bump(&MULTS);
        CountingScalar(self.0 * rhs.0)
    }
}

impl Div for CountingScalar {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        bump(&OTHER);
        CountingScalar(self.0 / rhs.0)
    }
}

impl Neg for CountingScalar {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        CountingScalar(-self.0)
    }
}

macro_rules! counting_mixed_op {
    ($trait:ident, $method:ident) => {
        impl $trait<f64> for CountingScalar {
            type Output = Self;
            #[inline]
            fn $method(self, rhs: f64) -> Self {
                $trait::$method(self, CountingScalar(rhs))
            }
        }
    };
}
counting_mixed_op!(Add, add);
counting_mixed_op!(Sub, sub);
counting_mixed_op!(Mul, mul);
counting_mixed_op!(Div, div);

macro_rules! counting_other_fn {
    ($($name:ident),*) => {$(
        #[inline]
        fn $name(self) -> Self {
            bump(&OTHER);
            CountingScalar(f64::$name(self.0))
        }
    )*};
}

impl Scalar for CountingScalar {
    #[inline]
    fn from_f64(c: f64) -> Self {
        CountingScalar(c)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self.0
    }
    counting_other_fn!(sin, cos, exp, sqrt, ln);
    #[inline]
    fn abs(self) -> Self {
        bump(&OTHER);
        CountingScalar(self.0.abs())
    }
    #[inline]
    fn signum0(self) -> Self {
        CountingScalar(Scalar::signum0(self.0))
    }
}

fn require_divides(n: usize, csize: usize) -> Result<()> {
    if csize == 0 || csize > n || n % csize != 0 {
        return Err(ChessfadError::ChunkSize { csize, n });
    }
    Ok(())
}

/// Closed-form cost of the plain chunked Hessian of a function with `m`
/// carrier multiplications and `a` carrier additions:
/// `(6 + 3/C) n^2 M` multiplications, `4 n^2 M + (2 + 2/C) n^2 A`
/// additions.
///
/// Note: the addition model undercounts the measured tally by one scalar
/// addition per dual multiplication (`n^2 M / C` in total) -- a dual
/// multiply needs `4C + 1` additions, one per first-order slot (`C + 1` of
/// them) plus three per second-order slot. The model is kept in this
/// stated form; [`count_chunk_hess`] reports what actually executes.
pub fn predict_chunk_counts(n: usize, csize: usize, m: u64, a: u64) -> Result<OpCount> {
    require_divides(n, csize)?;
    let (n, c) = (n as u64, csize as u64);
    let calls = n * n / c;
    Ok(OpCount {
        mults: calls * (6 * c + 3) * m,
        adds: 4 * n * n * m + calls * (2 * c + 2) * a,
    })
}

/// Closed-form chunk-evaluation and multiplication counts for the
/// symmetric chunked engine: `n (n/C + 1) / 2` chunks,
/// `(3/2) n (2n + 2C + n/C + 1) M` multiplications.
pub fn predict_schunk_counts(n: usize, csize: usize, m: u64) -> Result<(u64, u64)> {
    require_divides(n, csize)?;
    let (n, c) = (n as u64, csize as u64);
    let nchunk = n / c;
    let chunks = c * nchunk * (nchunk + 1) / 2;
    Ok((chunks, chunks * (6 * c + 3) * m))
}

/// The divisors of `n`, ascending.
pub fn divisors(n: usize) -> Vec<usize> {
    (1..=n).filter(|c| n % c == 0).collect()
}

/// The divisor of `n` minimizing the symmetric-engine multiplication
/// count, ties broken toward the smaller divisor. The continuous optimum
/// is `sqrt(n/2)` (see [`continuous_optimal_chunk`]); the engines only
/// accept divisors, so the scan is over those.
pub fn optimal_chunk(n: usize) -> usize {
    divisors(n)
        .into_iter()
        .min_by_key(|&c| predict_schunk_counts(n, c, 1).expect("divisor").1)
        .expect("n >= 1 has divisor 1")
}

/// The unconstrained minimizer `sqrt(n/2)` of the symmetric-engine
/// multiplication count, reported as metadata alongside [`optimal_chunk`].
pub fn continuous_optimal_chunk(n: usize) -> f64 {
    (n as f64 / 2.0).sqrt()
}

/// Run the chunked Hessian over the counting scalar and return the
/// measured tally. Seeding assignments are excluded by construction (they
/// are plain stores). With `strict`, reject functions that used any
/// operation outside the add/mul set, since the closed-form model does not
/// cover those.
pub fn count_chunk_hess<F: DiffFn, const C: usize>(f: &F, a: &[f64], strict: bool) -> Result<OpCount> {
    let (res, tally, other) = count_ops(|| chunk_hess::<CountingScalar, F, C>(f, a));
    res?;
    if strict && other > 0 {
        return Err(ChessfadError::NonCountableOps(other));
    }
    Ok(tally)
}

/// As [`count_chunk_hess`], for the symmetric chunked engine.
pub fn count_schunk_hess<F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
    strict: bool,
) -> Result<OpCount> {
    let (res, tally, other) = count_ops(|| schunk_hess::<CountingScalar, F, C>(f, a));
    res?;
    if strict && other > 0 {
        return Err(ChessfadError::NonCountableOps(other));
    }
    Ok(tally)
}

/// Runtime-chunk-size front end for [`count_chunk_hess`].
pub fn count_chunk_hess_dyn<F: DiffFn>(
    f: &F,
    a: &[f64],
    csize: usize,
    strict: bool,
) -> Result<OpCount> {
    require_divides(f.dim(), csize)?;
    crate::with_csize!(csize, C => count_chunk_hess::<F, C>(f, a, strict))
}

/// Runtime-chunk-size front end for [`count_schunk_hess`].
pub fn count_schunk_hess_dyn<F: DiffFn>(
    f: &F,
    a: &[f64],
    csize: usize,
    strict: bool,
) -> Result<OpCount> {
    require_divides(f.dim(), csize)?;
    crate::with_csize!(csize, C => count_schunk_hess::<F, C>(f, a, strict))
}

pub const DEFAULT_GRAD_STEP: f64 = 1e-5;
pub const DEFAULT_HESS_STEP: f64 = 1e-4;

#[inline]
fn scaled_step(h: f64, coord: f64) -> f64 {
    h * coord.abs().max(1.0)
}

/// Central-difference gradient with per-coordinate step
/// `h * max(1, |a_i|)`.
pub fn fd_gradient<F: DiffFn>(f: &F, a: &[f64], h: f64) -> Vec<f64> {
    let mut x = a.to_vec();
    (0..a.len())
        .map(|i| {
            let hi = scaled_step(h, a[i]);
            x[i] = a[i] + hi;
            let up = f.eval(x.as_slice());
            x[i] = a[i] - hi;
            let down = f.eval(x.as_slice());
            x[i] = a[i];
            (up - down) / (2.0 * hi)
        })
        .collect()
}

/// Four-point central-difference Hessian with per-coordinate steps,
/// symmetric by construction (the lower triangle mirrors the upper).
pub fn fd_hessian<F: DiffFn>(f: &F, a: &[f64], h: f64) -> HessianMatrix {
    let n = a.len();
    let mut x = a.to_vec();
    let mut out = HessianMatrix::zeros(n);
    let eval_at = |x: &mut Vec<f64>, i: usize, j: usize, si: f64, sj: f64| {
        x[i] += si;
        x[j] += sj;
        let v = f.eval(x.as_slice());
        x[i] = a[i];
        x[j] = a[j];
        v
    };
    for i in 0..n {
        let hi = scaled_step(h, a[i]);
        for j in i..n {
            let hj = scaled_step(h, a[j]);
            let pp = eval_at(&mut x, i, j, hi, hj);
            let pm = eval_at(&mut x, i, j, hi, -hj);
            let mp = eval_at(&mut x, i, j, -hi, hj);
            let mm = eval_at(&mut x, i, j, -hi, -hj);
            let v = ((pp - pm) - (mp - mm)) / (4.0 * hi * hj);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::AdNum;
    use crate::testfuncs::{ProdSum, Rosenbrock};
    use proptest::prelude::*;

    #[test]
    fn predict_frozen_values() {
        assert_eq!(
            predict_chunk_counts(4, 2, 2, 1).unwrap(),
            OpCount { mults: 240, adds: 176 }
        );
        assert_eq!(
            predict_chunk_counts(4, 2, 3, 2).unwrap(),
            OpCount { mults: 360, adds: 288 }
        );
        assert_eq!(predict_chunk_counts(4, 4, 3, 2).unwrap().mults, 324);
        assert_eq!(predict_chunk_counts(6, 3, 0, 0).unwrap(), OpCount::default());
        assert!(predict_chunk_counts(4, 3, 1, 1).is_err());
    }

    #[test]
    fn predict_schunk_frozen_values() {
        assert_eq!(predict_schunk_counts(4, 2, 3).unwrap(), (6, 270));
        // C = n gives n chunks; C = 1 gives n(n+1)/2
        assert_eq!(predict_schunk_counts(8, 8, 1).unwrap().0, 8);
        assert_eq!(predict_schunk_counts(8, 1, 1).unwrap().0, 36);
    }

    #[test]
    fn mult_cost_monotone_in_chunk_size() {
        for n in [4usize, 8, 12] {
            let costs: Vec<u64> = divisors(n)
                .into_iter()
                .map(|c| predict_chunk_counts(n, c, 1, 0).unwrap().mults)
                .collect();
            assert!(costs.windows(2).all(|w| w[1] < w[0]), "n = {n}: {costs:?}");
        }
    }

    #[test]
    fn optimal_chunk_values() {
        assert_eq!(optimal_chunk(8), 2);
        assert_eq!(optimal_chunk(2), 1);
        assert_eq!(optimal_chunk(32), 4);
        // for n = 2^(2k+1) the optimum is 2^k
        for k in 1u32..5 {
            let n = 1usize << (2 * k + 1);
            assert_eq!(optimal_chunk(n), 1 << k, "n = {n}");
        }
        assert!((continuous_optimal_chunk(32) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn per_operation_tallies() {
        type H2 = crate::hdual::HDual<CountingScalar, 2>;
        let u = H2::lift_constant(1.5);
        let v = H2::lift_constant(2.5);
        let (_, t, other) = count_ops(|| u * v);
        // a dual multiply runs 6C+3 multiplications and 4C+1 additions:
        // one addition per first-order slot (C+1 of them), three per
        // second-order slot
        assert_eq!(t, OpCount { mults: 15, adds: 9 });
        assert_eq!(other, 0);
        let (_, t, _) = count_ops(|| u + v);
        assert_eq!(t, OpCount { mults: 0, adds: 6 });
        let (_, t, other) = count_ops(|| u / v);
        assert_eq!(t.mults, 9); // one for the row slot, four per column slot
        assert_eq!(other, 6); // the 2C+2 divisions are outside the add/mul model
    }

    #[test]
    fn measured_chunk_counts() {
        let f = ProdSum { n: 4 };
        let a = [1.0, 2.0, 3.0, 4.0];
        let got = count_chunk_hess::<_, 2>(&f, &a, true).unwrap();
        // model says (360, 288); the extra 24 additions are the one
        // per-multiply addition the model omits: n^2/C * M = 8 * 3
        assert_eq!(got.mults, 360);
        assert_eq!(got.adds, 312);
        let predicted = predict_chunk_counts(4, 2, 3, 2).unwrap();
        assert_eq!(got.mults, predicted.mults);
        assert_eq!(got.adds, predicted.adds + 24);
    }

    #[test]
    fn measured_schunk_mults_match_model() {
        let f = ProdSum { n: 4 };
        let a = [1.0, 2.0, 3.0, 4.0];
        let got = count_schunk_hess::<_, 2>(&f, &a, true).unwrap();
        assert_eq!(got.mults, 270);
    }

    #[test]
    fn single_variable_single_chunk() {
        struct Square;
        impl DiffFn for Square {
            fn dim(&self) -> usize {
                1
            }
            fn eval<T: AdNum>(&self, y: &[T]) -> T {
                y[0] * y[0]
            }
        }
        let got = count_chunk_hess::<_, 1>(&Square, &[3.0], true).unwrap();
        assert_eq!(got.mults, 9); // one call, one dual multiply
        assert_eq!(got.adds, 5);
    }

    #[test]
    fn strict_mode_rejects_other_operations() {
        let f = Rosenbrock { n: 4 };
        let a = [0.5; 4];
        // rosenbrock itself is add/mul, but uses scalar-mixed constants,
        // which still count as add/mul; ackley brings sqrt/exp/cos
        let err = count_chunk_hess::<_, 2>(&crate::testfuncs::Ackley { n: 4 }, &a, false);
        assert!(err.is_ok());
        let err = count_chunk_hess::<_, 2>(&crate::testfuncs::Ackley { n: 4 }, &a, true);
        assert!(matches!(err, Err(ChessfadError::NonCountableOps(_))));
        assert!(count_chunk_hess::<_, 2>(&f, &a, true).is_ok());
    }

    #[test]
    #[should_panic(expected = "nested")]
    fn nested_sessions_panic() {
        let _ = count_ops(|| count_ops(|| ()));
    }

    #[test]
    fn fd_oracle_frozen_checks() {
        let f = Rosenbrock { n: 2 };
        let h = fd_hessian(&f, &[1.0, 1.0], 1e-4);
        let want = [[802.0, -400.0], [-400.0, 200.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h.get(i, j) - want[i][j]).abs() < 1e-3);
            }
        }

        struct SumSq;
        impl DiffFn for SumSq {
            fn dim(&self) -> usize {
                3
            }
            fn eval<T: AdNum>(&self, y: &[T]) -> T {
                y[0] * y[0] + y[1] * y[1] + y[2] * y[2]
            }
        }
        let h = fd_hessian(&SumSq, &[0.4, -1.7, 2.2], DEFAULT_HESS_STEP);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 2.0 } else { 0.0 };
                assert!((h.get(i, j) - want).abs() < 1e-6);
            }
        }

        let g = fd_gradient(&ProdSum { n: 4 }, &[1.0, 2.0, 3.0, 4.0], 1e-5);
        for (got, want) in g.iter().zip([2.0, 4.0, 6.0, 3.0]) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn counting_scalar_is_numerically_transparent(
            vals in proptest::collection::vec(-100.0f64..100.0, 4..10)
        ) {
            // same arithmetic over f64 and CountingScalar, bit-identical
            fn poly<T: AdNum>(v: &[T]) -> T {
                let mut acc = v[0];
                for &x in &v[1..] {
                    acc = acc * x + x - acc * 0.5;
                }
                acc
            }
            let plain = poly(vals.as_slice());
            let wrapped: Vec<CountingScalar> =
                vals.iter().map(|&v| CountingScalar(v)).collect();
            let ((), _, _) = count_ops(|| {
                let c = poly(wrapped.as_slice());
                assert_eq!(plain.to_bits(), c.0.to_bits());
            });
        }
    }
}
