//! Matrix-free Hessian-vector products.
//!
//! A Hessian entry `H[i][j]` contributes only to `out[i]`, so each row
//! chunk can be computed, folded into the row's dot product, and
//! discarded. `chess_vec` visits every chunk of every row; `sc_hess_vec`
//! visits only chunks at or after the row's diagonal block and pushes the
//! symmetric contribution `H[i][s] * in[i]` into `out[s]` for chunks
//! strictly after it.
//!
//! Per-row accumulation is chunk partial sums folded in ascending chunk
//! order; the batch executor's partial-sum reduction replays exactly this
//! order, which is what makes every execution level bit-identical.

use crate::error::{ChessfadError, Result};
use crate::hdual::HDual;
use crate::hessian::{chunk_init_into, DiffFn};
use crate::scalar::Scalar;

fn check<F: DiffFn>(f: &F, a: &[f64], vin: &[f64], csize: usize) -> Result<usize> {
    let n = f.dim();
    if a.len() != n {
        return Err(ChessfadError::Dimension { expected: n, got: a.len() });
    }
    if vin.len() != n {
        return Err(ChessfadError::Dimension { expected: n, got: vin.len() });
    }
    if csize == 0 || csize > n || n % csize != 0 {
        return Err(ChessfadError::ChunkSize { csize, n });
    }
    Ok(n)
}

/// One chunk's contribution to row `i` of `H * in`:
/// `sum_l H[i][cstart + l] * in[cstart + l]`.
pub(crate) fn hvp_row_chunk<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
    vin: &[f64],
    y: &mut [HDual<S, C>],
    i: usize,
    chunk: usize,
) -> f64 {
    let cstart = chunk * C;
    chunk_init_into(y, a, i, cstart);
    let temp = f.eval(y);
    let mut part = 0.0;
    for l in 0..C {
        part += temp.mixed[l].to_f64() * vin[cstart + l];
    }
    part
}

/// Row `i` of `H * in`, folding chunk partials in ascending chunk order.
pub(crate) fn hvp_row<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
    vin: &[f64],
    y: &mut [HDual<S, C>],
    i: usize,
) -> f64 {
    let nchunk = a.len() / C;
    let mut res = 0.0;
    for j in 0..nchunk {
        res += hvp_row_chunk(f, a, vin, y, i, j);
    }
    res
}

/// `out = H(a) * in`, row by row, never materializing `H`.
pub fn chess_vec<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
    vin: &[f64],
) -> Result<Vec<f64>> {
    let n = check(f, a, vin, C)?;
    let mut y = vec![HDual::<S, C>::zero(); n];
    Ok((0..n).map(|i| hvp_row(f, a, vin, &mut y, i)).collect())
}

/// Symmetry-exploiting `H * in`: each row visits chunks from its diagonal
/// block onward; entries in later chunks also update the mirrored output
/// component. Start-chunk entries update only `out[i]` - the mirror comes
/// from the other row's own direct pass, so nothing is applied twice.
pub fn sc_hess_vec<S: Scalar, F: DiffFn, const C: usize>(
    f: &F,
    a: &[f64],
    vin: &[f64],
) -> Result<Vec<f64>> {
    let n = check(f, a, vin, C)?;
    let nchunk = n / C;
    let mut out = vec![0.0; n];
    let mut y = vec![HDual::<S, C>::zero(); n];
    for i in 0..n {
        let scn = i / C;
        for cn in scn..nchunk {
            let cstart = cn * C;
            chunk_init_into(&mut y, a, i, cstart);
            let temp = f.eval(&y);
            for l in 0..C {
                let s = cstart + l;
                let h = temp.mixed[l].to_f64();
                out[i] += h * vin[s];
                if cn > scn {
                    out[s] += h * vin[i];
                }
            }
        }
    }
    Ok(out)
}

/// Runtime-chunk-size front end for [`chess_vec`].
pub fn chess_vec_dyn<F: DiffFn>(f: &F, a: &[f64], vin: &[f64], csize: usize) -> Result<Vec<f64>> {
    check(f, a, vin, csize)?;
    crate::with_csize!(csize, C => chess_vec::<f64, F, C>(f, a, vin))
}

/// Runtime-chunk-size front end for [`sc_hess_vec`].
pub fn sc_hess_vec_dyn<F: DiffFn>(
    f: &F,
    a: &[f64],
    vin: &[f64],
    csize: usize,
) -> Result<Vec<f64>> {
    check(f, a, vin, csize)?;
    crate::with_csize!(csize, C => sc_hess_vec::<f64, F, C>(f, a, vin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hessian::{chunk_hess, CountedFn};
    use crate::scalar::AdNum;
    use crate::testfuncs::Rosenbrock;

    struct Xy;
    impl DiffFn for Xy {
        fn dim(&self) -> usize {
            2
        }
        fn eval<T: AdNum>(&self, y: &[T]) -> T {
            y[0] * y[1]
        }
    }

    struct SumSquares {
        n: usize,
    }
    impl DiffFn for SumSquares {
        fn dim(&self) -> usize {
            self.n
        }
        fn eval<T: AdNum>(&self, y: &[T]) -> T {
            let mut s = y[0] * y[0];
            for &yi in &y[1..] {
                s = s + yi * yi;
            }
            s
        }
    }

    #[test]
    fn rosenbrock_hvp_spot_check() {
        let f = Rosenbrock { n: 2 };
        let out = chess_vec::<f64, _, 1>(&f, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        assert_eq!(out, vec![402.0, -200.0]);
        let out = sc_hess_vec::<f64, _, 1>(&f, &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        for (o, want) in out.iter().zip([402.0, -200.0]) {
            assert!((o - want).abs() <= 1e-12 * want.abs());
        }
    }

    #[test]
    fn zero_multiplicand_gives_zero() {
        let f = Rosenbrock { n: 4 };
        let out = chess_vec::<f64, _, 2>(&f, &[0.4, -1.0, 0.7, 0.2], &[0.0; 4]).unwrap();
        assert_eq!(out, vec![0.0; 4]);
    }

    #[test]
    fn antidiagonal_hessian_swaps_components() {
        let out = chess_vec::<f64, _, 1>(&Xy, &[5.0, -3.0], &[2.5, 7.0]).unwrap();
        assert_eq!(out, vec![7.0, 2.5]);
    }

    #[test]
    fn identity_scaled_hessian() {
        let f = SumSquares { n: 6 };
        let vin = [0.5, -1.0, 2.0, 0.0, 3.5, -0.25];
        let out = sc_hess_vec::<f64, _, 2>(&f, &[1.0, 2.0, -1.0, 0.3, 0.0, 4.0], &vin).unwrap();
        for (o, v) in out.iter().zip(vin) {
            assert!((o - 2.0 * v).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_engine_saves_evaluations() {
        let f = Rosenbrock { n: 4 };
        let a = [0.1, 0.9, -0.5, 1.3];
        let vin = [1.0, -2.0, 0.5, 0.7];

        let c = CountedFn::new(&f);
        chess_vec::<f64, _, 2>(&c, &a, &vin).unwrap();
        assert_eq!(c.calls(), 8);

        let c = CountedFn::new(&f);
        sc_hess_vec::<f64, _, 2>(&c, &a, &vin).unwrap();
        assert_eq!(c.calls(), 6);
    }

    #[test]
    fn matches_explicit_matrix_product() {
        let f = Rosenbrock { n: 8 };
        let a: Vec<f64> = (0..8).map(|k| 0.25 * k as f64 - 0.9).collect();
        let vin: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7).sin()).collect();
        let (h, _) = chunk_hess::<f64, _, 2>(&f, &a).unwrap();
        let dense = h.mul_vec(&vin);
        let out = chess_vec::<f64, _, 2>(&f, &a, &vin).unwrap();
        let sout = sc_hess_vec::<f64, _, 2>(&f, &a, &vin).unwrap();
        for i in 0..8 {
            let scale = dense[i].abs().max(1.0);
            assert!((out[i] - dense[i]).abs() <= 1e-12 * scale);
            assert!((sout[i] - dense[i]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn chunk_packing_invariance_within_tolerance() {
        let f = Rosenbrock { n: 12 };
        let a: Vec<f64> = (0..12).map(|k| 0.2 * k as f64 - 1.1).collect();
        let vin: Vec<f64> = (0..12).map(|k| 1.0 - 0.15 * k as f64).collect();
        let base = chess_vec::<f64, _, 1>(&f, &a, &vin).unwrap();
        for csize in [2usize, 3, 4, 6, 12] {
            let out = chess_vec_dyn(&f, &a, &vin, csize).unwrap();
            for i in 0..12 {
                let scale = base[i].abs().max(1.0);
                assert!(
                    (out[i] - base[i]).abs() <= 1e-12 * scale,
                    "csize {csize} row {i}: {} vs {}",
                    out[i],
                    base[i]
                );
            }
        }
    }

    #[test]
    fn rejects_nondividing_chunk() {
        let f = Rosenbrock { n: 4 };
        assert!(chess_vec_dyn(&f, &[0.0; 4], &[0.0; 4], 3).is_err());
    }
}
