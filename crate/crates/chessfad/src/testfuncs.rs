//! Scalable benchmark function families, generic over the carrier.
//!
//! The same body runs on plain `f64`, on `HDual` (yielding derivatives),
//! and on the counting scalar (yielding arithmetic tallies). `ProdSum` is
//! the synthetic add/mul-only function used to verify the closed-form
//! operation counts: it performs exactly `n - 1` carrier multiplications
//! and `n - 2` carrier additions, with no scalar-mixed operations.

use serde::{Deserialize, Serialize};

use crate::hessian::DiffFn;
use crate::sample::seeded_rng;
use crate::scalar::AdNum;
use rand::Rng;

/// Chained Rosenbrock: `sum_i 100 (y_{i+1} - y_i^2)^2 + (1 - y_i)^2`.
#[derive(Clone, Copy, Debug)]
pub struct Rosenbrock {
    pub n: usize,
}

impl DiffFn for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        debug_assert!(self.n >= 2);
        let mut s: Option<T> = None;
        for i in 0..self.n - 1 {
            let t = y[i + 1] - y[i] * y[i];
            let u = y[i] - 1.0;
            let term = t * t * 100.0 + u * u;
            s = Some(match s {
                Some(acc) => acc + term,
                None => term,
            });
        }
        s.expect("rosenbrock needs n >= 2")
    }
}

/// Standard Ackley function with constants (20, 0.2, 2*pi).
///
/// The value at the origin is 0 but the derivative slots are NaN there
/// (the sqrt term is not differentiable at 0).
#[derive(Clone, Copy, Debug)]
pub struct Ackley {
    pub n: usize,
}

impl DiffFn for Ackley {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        let n = self.n as f64;
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut sq = y[0] * y[0];
        let mut cs = (y[0] * two_pi).cos();
        for &yi in &y[1..] {
            sq = sq + yi * yi;
            cs = cs + (yi * two_pi).cos();
        }
        let radial = (sq / n).sqrt() * (-0.2);
        radial.exp() * (-20.0) - (cs / n).exp() + (20.0 + std::f64::consts::E)
    }
}

/// Parameters of the trigonometric Fletcher-Powell least-squares function,
/// generated deterministically from a seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FpParams {
    pub n: usize,
    pub seed: u64,
    /// n*n integer matrix, row-major, entries in [-100, 100].
    pub a: Vec<i32>,
    /// n*n integer matrix, row-major, entries in [-100, 100].
    pub b: Vec<i32>,
    /// Target point, entries in (-pi, pi).
    pub xstar: Vec<f64>,
    /// Precomputed `E_i(xstar)`.
    pub estar: Vec<f64>,
}

/// Build Fletcher-Powell parameters from a seed: `A`, `B` uniform integer
/// matrices, `xstar` uniform in (-pi, pi), `estar` derived.
pub fn make_fp_params(n: usize, seed: u64) -> FpParams {
    let mut rng = seeded_rng(seed);
    let a: Vec<i32> = (0..n * n).map(|_| rng.random_range(-100..=100)).collect();
    let b: Vec<i32> = (0..n * n).map(|_| rng.random_range(-100..=100)).collect();
    let pi = std::f64::consts::PI;
    let xstar: Vec<f64> = (0..n).map(|_| rng.random_range(-pi..pi)).collect();
    let estar = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    a[i * n + j] as f64 * xstar[j].sin() + b[i * n + j] as f64 * xstar[j].cos()
                })
                .sum()
        })
        .collect();
    FpParams { n, seed, a, b, xstar, estar }
}

/// `f(y) = sum_i (estar_i - E_i(y))^2` with
/// `E_i(y) = sum_j A[i][j] sin(y_j) + B[i][j] cos(y_j)`.
#[derive(Clone, Debug)]
pub struct FletcherPowell {
    pub params: FpParams,
}

impl DiffFn for FletcherPowell {
    fn dim(&self) -> usize {
        self.params.n
    }

    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        let p = &self.params;
        let n = p.n;
        let mut total: Option<T> = None;
        for i in 0..n {
            let mut e: Option<T> = None;
            for (j, &yj) in y.iter().enumerate() {
                let term = yj.sin() * p.a[i * n + j] as f64 + yj.cos() * p.b[i * n + j] as f64;
                e = Some(match e {
                    Some(acc) => acc + term,
                    None => term,
                });
            }
            let r = e.expect("n >= 1") - p.estar[i];
            let sq = r * r;
            total = Some(match total {
                Some(acc) => acc + sq,
                None => sq,
            });
        }
        total.expect("n >= 1")
    }
}

/// `f(y) = sum_i y_i * y_{i+1}`: exactly `n - 1` carrier multiplications
/// and `n - 2` carrier additions, nothing else. Used to verify the
/// operation-count model exactly.
#[derive(Clone, Copy, Debug)]
pub struct ProdSum {
    pub n: usize,
}

impl DiffFn for ProdSum {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        debug_assert!(self.n >= 2);
        let mut s = y[0] * y[1];
        for i in 1..self.n - 1 {
            s = s + y[i] * y[i + 1];
        }
        s
    }
}

/// Runtime-selectable test function (used by the CLI and benches).
#[derive(Clone, Debug)]
pub enum Func {
    Rosenbrock(Rosenbrock),
    Ackley(Ackley),
    FletcherPowell(FletcherPowell),
    ProdSum(ProdSum),
}

impl Func {
    /// Construct by name; `seed` is only used by fletcher-powell.
    pub fn by_name(name: &str, n: usize, seed: u64) -> Option<Func> {
        match name {
            "rosenbrock" => Some(Func::Rosenbrock(Rosenbrock { n })),
            "ackley" => Some(Func::Ackley(Ackley { n })),
            "fletcher-powell" => {
                Some(Func::FletcherPowell(FletcherPowell { params: make_fp_params(n, seed) }))
            }
            "prodsum" => Some(Func::ProdSum(ProdSum { n })),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Func::Rosenbrock(_) => "rosenbrock",
            Func::Ackley(_) => "ackley",
            Func::FletcherPowell(_) => "fletcher-powell",
            Func::ProdSum(_) => "prodsum",
        }
    }
}

impl DiffFn for Func {
    fn dim(&self) -> usize {
        match self {
            Func::Rosenbrock(f) => f.dim(),
            Func::Ackley(f) => f.dim(),
            Func::FletcherPowell(f) => f.dim(),
            Func::ProdSum(f) => f.dim(),
        }
    }

    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        match self {
            Func::Rosenbrock(f) => f.eval(y),
            Func::Ackley(f) => f.eval(y),
            Func::FletcherPowell(f) => f.eval(y),
            Func::ProdSum(f) => f.eval(y),
        }
    }
}
