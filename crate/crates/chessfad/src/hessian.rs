//! Seeding and the four Hessian engines.
//!
//! `hessian_full` evaluates the function once per Hessian entry (n^2
//! calls), `hessian_sym` once per upper-triangle entry (n(n+1)/2 calls),
//! and the chunked engines once per row-chunk: `chunk_hess` makes n^2/C
//! calls and `schunk_hess` skips the chunks strictly below the diagonal
//! block, making n(n/C + 1)/2. The chunked engines also return the
//! gradient, which rides along in the row slot for free.

use std::sync::atomic::{AtomicUsize, Ordering};

use crate::error::{ChessfadError, Result};
use crate::hdual::HDual;
use crate::scalar::{AdNum, Scalar};

/// A scalar function of `dim()` variables, evaluable over any carrier.
///
/// Bodies must be pure and stick to the carrier operation set; that is
/// what makes the same body usable for plain evaluation, derivative
/// propagation, and operation counting.
pub trait DiffFn: Sync {
    fn dim(&self) -> usize;
    fn eval<T: AdNum>(&self, y: &[T]) -> T;
}

impl<F: DiffFn> DiffFn for &F {
    fn dim(&self) -> usize {
        (*self).dim()
    }
    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        (*self).eval(y)
    }
}

/// Wraps a function and counts how many times it is evaluated.
pub struct CountedFn<'a, F> {
    inner: &'a F,
    calls: AtomicUsize,
}

impl<'a, F: DiffFn> CountedFn<'a, F> {
    pub fn new(inner: &'a F) -> Self {
        CountedFn { inner, calls: AtomicUsize::new(0) }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<F: DiffFn> DiffFn for CountedFn<'_, F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval<T: AdNum>(&self, y: &[T]) -> T {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(y)
    }
}

/// Dense row-major n-by-n Hessian.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianMatrix {
    n: usize,
    data: Vec<f64>,
}

impl HessianMatrix {
    pub fn zeros(n: usize) -> Self {
        HessianMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n)
    }

    /// Exact (bitwise) symmetry check.
    pub fn is_symmetric_bitwise(&self) -> bool {
        (0..self.n).all(|i| {
            (0..i).all(|j| self.get(i, j).to_bits() == self.get(j, i).to_bits())
        })
    }

    /// `H v` with a plain left-to-right dot product per row.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n);
        self.rows().map(|row| row.iter().zip(v).map(|(h, x)| h * x).sum()).collect()
    }
}

/// Seed duals so one evaluation yields `d2f/dx_i dx_j` in the mixed slot:
/// `y[k] = <a[k], [k==i], [k==j], 0>`.
pub fn initialize<S: Scalar>(a: &[f64], i: usize, j: usize) -> Vec<HDual<S, 1>> {
    let mut y = vec![HDual::zero(); a.len()];
    initialize_into(&mut y, a, i, j);
    y
}

pub(crate) fn initialize_into<S: Scalar>(y: &mut [HDual<S, 1>], a: &[f64], i: usize, j: usize) {
    let n = a.len();
    assert!(i < n && j < n, "seed indices ({i}, {j}) out of range for n = {n}");
    let (zero, one) = (S::from_f64(0.0), S::from_f64(1.0));
    for (k, (yk, &ak)) in y.iter_mut().zip(a).enumerate() {
        yk.val = S::from_f64(ak);
        yk.row = if k == i { one } else { zero };
        yk.col[0] = if k == j { one } else { zero };
        yk.mixed[0] = zero;
    }
}

/// Seed duals for one row-chunk: row derivative w.r.t. `x_row`, column
/// derivatives for the chunk starting at `cstart`.
pub fn chunk_init<S: Scalar, const C: usize>(
    a: &[f64],
    row: usize,
    cstart: usize,
) -> Vec<HDual<S, C>> {
    let mut y = vec![HDual::zero(); a.len()];
    chunk_init_into(&mut y, a, row, cstart);
    y
}

pub(crate) fn chunk_init_into<S: Scalar, const C: usize>(
    y: &mut [HDual<S, C>],
    a: &[f64],
    row: usize,
    cstart: usize,
) {
    let n = a.len();
    assert!(row < n, "row index {row} out of range for n = {n}");
    assert!(cstart + C <= n, "chunk [{cstart}, {cstart}+{C}) out of range for n = {n}");
    let (zero, one) = (S::from_f64(0.0), S::from_f64(1.0));
    for (k, (yk, &ak)) in y.iter_mut().zip(a).enumerate() {
        yk.val = S::from_f64(ak);
        yk.row = if k == row { one } else { zero };
        yk.col = [zero; C];
        yk.mixed = [zero; C];
        if k >= cstart && k < cstart + C {
            yk.col[k - cstart] = one;
        }
    }
}

fn check_dims<F: DiffFn>(f: &F, a: &[f64]) -> Result<usize> {
    let n = f.dim();
    if a.len() != n {
        return Err(ChessfadError::Dimension { expected: n, got: a.len() });
    }
    Ok(n)
}

fn check_csize(n: usize, csize: usize) -> Result<()> {
    if csize == 0 || csize > n || n % csize != 0 {
        return Err(ChessfadError::ChunkSize { csize, n });
    }
    Ok(())
}

/// Full Hessian, one evaluation per entry.
pub fn hessian_full<S: Scalar, F: DiffFn>(f: &F, a: &[f64]) -> Result<HessianMatrix> {
    let n = check_dims(f, a)?;
    let mut h = HessianMatrix::zeros(n);
    let mut y = vec![HDual::<S, 1>::zero(); n];
    for i in 0..n {
        for j in 0..n {
            initialize_into(&mut y, a, i, j);
            let temp = f.eval(&y);
            h.set(i, j, temp.mixed[0].to_f64());
        }
    }
    Ok(h)
}

/// Upper-triangle evaluations only; lower triangle is a mirror copy.
pub fn hessian_sym<S: Scalar, F: DiffFn>(f: &F, a: &[f64]) -> Result<HessianMatrix> {
    let n = check_dims(f, a)?;
    let mut h = HessianMatrix::zeros(n);
    let mut y = vec![HDual::<S, 1>::zero(); n];
    for i in 0..n {
        for j in i..n {
            initialize_into(&mut y, a, i, j);
            let temp = f.eval(&y);
            let v = temp.mixed[0].to_f64();
            h.set(i, j, v);
            h.set(j, i, v);
        }
    }
    Ok(h)
}

/// Chunked Hessian: `n/C` evaluations per row, gradient as by-product.
pub fn chunk_hess<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
) -> Result<(HessianMatrix, Vec<f64>)> {
    let n = check_dims(f, a)?;
    check_csize(n, C)?;
    let nchunk = n / C;
    let mut h = HessianMatrix::zeros(n);
    let mut grad = vec![0.0; n];
    let mut y = vec![HDual::<S, C>::zero(); n];
    for i in 0..n {
        for j in 0..nchunk {
            let cstart = j * C;
            chunk_init_into(&mut y, a, i, cstart);
            let temp = f.eval(&y);
            for l in 0..C {
                h.set(i, cstart + l, temp.mixed[l].to_f64());
            }
            // identical in every chunk of the row; keep the last
            grad[i] = temp.row.to_f64();
        }
    }
    Ok((h, grad))
}

/// Symmetric chunked Hessian: rows visit only chunks at or after their
/// diagonal block; whole chunks strictly below it are mirrored afterwards.
/// Below-diagonal entries inside the diagonal block are computed directly,
/// which is safe because they come out bit-identical to their mirrors.
pub fn schunk_hess<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
) -> Result<(HessianMatrix, Vec<f64>)> {
    let n = check_dims(f, a)?;
    check_csize(n, C)?;
    let nchunk = n / C;
    let mut h = HessianMatrix::zeros(n);
    let mut grad = vec![0.0; n];
    let mut y = vec![HDual::<S, C>::zero(); n];
    for i in 0..n {
        let startchunk = i / C;
        for j in startchunk..nchunk {
            let cstart = j * C;
            chunk_init_into(&mut y, a, i, cstart);
            let temp = f.eval(&y);
            for l in 0..C {
                h.set(i, cstart + l, temp.mixed[l].to_f64());
            }
            grad[i] = temp.row.to_f64();
        }
    }
    for i in C..n {
        let endindex = (i / C) * C;
        // exclusive bound: entries in the diagonal block stay as computed
        for j in 0..endindex {
            let v = h.get(j, i);
            h.set(i, j, v);
        }
    }
    Ok((h, grad))
}

/// Runtime-chunk-size front end for [`chunk_hess`].
pub fn chunk_hess_dyn<F: DiffFn>(
    f: &F,
    a: &[f64],
    csize: usize,
) -> Result<(HessianMatrix, Vec<f64>)> {
    check_csize(f.dim(), csize)?;
    crate::with_csize!(csize, C => chunk_hess::<f64, F, C>(f, a))
}

/// Runtime-chunk-size front end for [`schunk_hess`].
pub fn schunk_hess_dyn<F: DiffFn>(
    f: &F,
    a: &[f64],
    csize: usize,
) -> Result<(HessianMatrix, Vec<f64>)> {
    check_csize(f.dim(), csize)?;
    crate::with_csize!(csize, C => schunk_hess::<f64, F, C>(f, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfuncs::{ProdSum, Rosenbrock};

    #[test]
    fn initialize_seeds() {
        let y = initialize::<f64>(&[5.0, 6.0, 7.0], 0, 2);
        assert_eq!(y[0].slots(), vec![5.0, 1.0, 0.0, 0.0]);
        assert_eq!(y[1].slots(), vec![6.0, 0.0, 0.0, 0.0]);
        assert_eq!(y[2].slots(), vec![7.0, 0.0, 1.0, 0.0]);

        let y = initialize::<f64>(&[4.0], 0, 0);
        assert_eq!(y[0].slots(), vec![4.0, 1.0, 1.0, 0.0]);

        let y = initialize::<f64>(&[0.0, 0.0], 1, 0);
        assert_eq!(y[0].slots(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(y[1].slots(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn chunk_init_seeds() {
        let y = chunk_init::<f64, 2>(&[1.0, 2.0, 3.0, 4.0], 1, 2);
        assert_eq!(y[0].slots(), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(y[1].slots(), vec![2.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(y[2].slots(), vec![3.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y[3].slots(), vec![4.0, 0.0, 0.0, 1.0, 0.0, 0.0]);

        // row inside the chunk duplicates the seed
        let y = chunk_init::<f64, 2>(&[1.0, 2.0], 0, 0);
        assert_eq!(y[0].slots(), vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(y[1].slots(), vec![2.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    fn rosen2_at(a: [f64; 2]) -> HessianMatrix {
        hessian_full::<f64, _>(&Rosenbrock { n: 2 }, &a).unwrap()
    }

    #[test]
    fn rosenbrock_hessians() {
        let h = rosen2_at([1.0, 1.0]);
        assert_eq!(h.as_slice(), &[802.0, -400.0, -400.0, 200.0]);
        let h = rosen2_at([0.0, 0.0]);
        assert_eq!(h.as_slice(), &[2.0, 0.0, 0.0, 200.0]);
    }

    #[test]
    fn product_function_constant_mixed_derivative() {
        struct Xy;
        impl DiffFn for Xy {
            fn dim(&self) -> usize {
                2
            }
            fn eval<T: AdNum>(&self, y: &[T]) -> T {
                y[0] * y[1]
            }
        }
        let h = hessian_full::<f64, _>(&Xy, &[3.0, 2.0]).unwrap();
        assert_eq!(h.as_slice(), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn engine_call_counts() {
        let f = Rosenbrock { n: 5 };
        let a = [0.3, -0.8, 1.1, 0.2, -1.4];

        let c = CountedFn::new(&f);
        hessian_full::<f64, _>(&c, &a).unwrap();
        assert_eq!(c.calls(), 25);

        let c = CountedFn::new(&f);
        hessian_sym::<f64, _>(&c, &a).unwrap();
        assert_eq!(c.calls(), 15);

        let f = Rosenbrock { n: 4 };
        let a = [0.3, -0.8, 1.1, 0.2];
        let c = CountedFn::new(&f);
        chunk_hess::<f64, _, 2>(&c, &a).unwrap();
        assert_eq!(c.calls(), 8);

        let c = CountedFn::new(&f);
        schunk_hess::<f64, _, 2>(&c, &a).unwrap();
        assert_eq!(c.calls(), 6);

        let c = CountedFn::new(&f);
        chunk_hess::<f64, _, 4>(&c, &a).unwrap();
        assert_eq!(c.calls(), 4);

        let c = CountedFn::new(&f);
        schunk_hess::<f64, _, 1>(&c, &a).unwrap();
        assert_eq!(c.calls(), 10);
    }

    #[test]
    fn engines_agree_bitwise() {
        let f = Rosenbrock { n: 4 };
        let a = [0.7, -0.3, 1.2, 0.1];
        let full = hessian_full::<f64, _>(&f, &a).unwrap();
        let sym = hessian_sym::<f64, _>(&f, &a).unwrap();
        let (chunk, _) = chunk_hess::<f64, _, 2>(&f, &a).unwrap();
        let (schunk, _) = schunk_hess::<f64, _, 2>(&f, &a).unwrap();
        for i in 0..4 {
            for j in i..4 {
                let v = full.get(i, j).to_bits();
                assert_eq!(v, sym.get(i, j).to_bits());
                assert_eq!(v, chunk.get(i, j).to_bits());
                assert_eq!(v, schunk.get(i, j).to_bits());
            }
        }
        assert!(sym.is_symmetric_bitwise());
        assert!(schunk.is_symmetric_bitwise());
    }

    #[test]
    fn chunk_invariance_over_divisors() {
        let f = ProdSum { n: 12 };
        let a: Vec<f64> = (0..12).map(|k| 0.3 * k as f64 - 1.5).collect();
        let (baseline, gref) = chunk_hess::<f64, _, 1>(&f, &a).unwrap();
        macro_rules! check {
            ($($c:literal),*) => {$(
                let (h, g) = chunk_hess::<f64, _, $c>(&f, &a).unwrap();
                assert_eq!(h.as_slice(), baseline.as_slice(), "csize {}", $c);
                assert_eq!(g, gref);
            )*};
        }
        check!(2, 3, 4, 6, 12);
    }

    #[test]
    fn whole_row_chunk_uses_n_calls() {
        let f = Rosenbrock { n: 4 };
        let a = [0.5, 0.5, 0.5, 0.5];
        let c = CountedFn::new(&f);
        let (h, _) = chunk_hess::<f64, _, 4>(&c, &a).unwrap();
        assert_eq!(c.calls(), 4);
        let (h1, _) = chunk_hess::<f64, _, 1>(&f, &a).unwrap();
        assert_eq!(h.as_slice(), h1.as_slice());
    }

    #[test]
    fn gradient_by_product() {
        let f = ProdSum { n: 4 };
        let (_, grad) = chunk_hess::<f64, _, 2>(&f, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(grad, vec![2.0, 4.0, 6.0, 3.0]);
        let (_, grad) = schunk_hess::<f64, _, 2>(&f, &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(grad, vec![2.0, 4.0, 6.0, 3.0]);
    }

    #[test]
    fn rejects_bad_chunk_and_shape() {
        let f = Rosenbrock { n: 4 };
        let a = [0.0; 4];
        assert!(matches!(
            chunk_hess::<f64, _, 3>(&f, &a),
            Err(ChessfadError::ChunkSize { csize: 3, n: 4 })
        ));
        assert!(matches!(
            chunk_hess_dyn(&f, &a, 3),
            Err(ChessfadError::ChunkSize { csize: 3, n: 4 })
        ));
        assert!(matches!(
            hessian_full::<f64, _>(&f, &[0.0; 3]),
            Err(ChessfadError::Dimension { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn row_seed_duplicated_into_chunk_slot() {
        // with the row inside the active chunk, slot 1 stays equal to its
        // chunk copy through arbitrary arithmetic
        let f = Rosenbrock { n: 4 };
        let a = [0.9, -1.2, 0.4, 1.7];
        for i in 0..4 {
            let cstart = (i / 2) * 2;
            let y = chunk_init::<f64, 2>(&a, i, cstart);
            let r = f.eval(&y);
            assert_eq!(r.row.to_bits(), r.col[i - cstart].to_bits());
        }
    }
}
