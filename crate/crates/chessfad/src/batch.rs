//! Deterministic batch evaluation of Hessian-vector products.
//!
//! Three task granularities mirror the three kernel decompositions:
//! `L0` one task per instance, `L1` one task per (instance, row), `L2`
//! one task per (instance, row, chunk) with an ordered partial-sum
//! reduction per row. Tasks are split over a fixed-size worker pool in
//! contiguous index ranges and every task writes its own output slot, so
//! the result is bit-identical for any worker count and across levels.

use std::ops::Range;

use crate::error::{ChessfadError, Result};
use crate::hdual::HDual;
use crate::hessian::DiffFn;
use crate::hvp::{hvp_row, hvp_row_chunk};

/// `m` instances of an n-variable HVP problem, instance-major:
/// instance `e` owns `points[e*n .. e*n+n]` and the matching multiplicand
/// row.
#[derive(Clone, Debug)]
pub struct BatchData {
    m: usize,
    n: usize,
    points: Vec<f64>,
    multiplicands: Vec<f64>,
}

impl BatchData {
    pub fn new(m: usize, n: usize, points: Vec<f64>, multiplicands: Vec<f64>) -> Result<Self> {
        if points.len() != m * n {
            return Err(ChessfadError::Dimension { expected: m * n, got: points.len() });
        }
        if multiplicands.len() != m * n {
            return Err(ChessfadError::Dimension { expected: m * n, got: multiplicands.len() });
        }
        Ok(BatchData { m, n, points, multiplicands })
    }

    /// Seeded batch: coordinates uniform in [-2, 2], multiplicands in
    /// [-1, 1], from the crate's deterministic generator.
    pub fn random(m: usize, n: usize, seed: u64) -> Self {
        let mut rng = crate::sample::seeded_rng(seed);
        let points = crate::sample::uniform_vec(&mut rng, m * n, -2.0, 2.0);
        let multiplicands = crate::sample::uniform_vec(&mut rng, m * n, -1.0, 1.0);
        BatchData { m, n, points, multiplicands }
    }

    pub fn instances(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn point(&self, e: usize) -> &[f64] {
        &self.points[e * self.n..(e + 1) * self.n]
    }

    pub fn multiplicand(&self, e: usize) -> &[f64] {
        &self.multiplicands[e * self.n..(e + 1) * self.n]
    }
}

/// Default worker count: the machine's available parallelism.
pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1)
}

/// Split `total` task indices into at most `workers` contiguous ranges
/// covering every index exactly once.
pub(crate) fn partition(total: usize, workers: usize) -> Vec<Range<usize>> {
    let workers = workers.min(total).max(1);
    let base = total / workers;
    let extra = total % workers;
    let mut ranges = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < extra);
        ranges.push(start..start + len);
        start += len;
    }
    debug_assert_eq!(start, total);
    ranges
}

fn check_batch<F: DiffFn>(f: &F, batch: &BatchData, csize: usize, workers: usize) -> Result<()> {
    let n = f.dim();
    if batch.n != n {
        return Err(ChessfadError::Dimension { expected: n, got: batch.n });
    }
    if csize == 0 || (n > 0 && (csize > n || n % csize != 0)) {
        return Err(ChessfadError::ChunkSize { csize, n });
    }
    if workers == 0 {
        return Err(ChessfadError::NoWorkers);
    }
    Ok(())
}

/// Run `tasks` task indices over the pool; each worker maps its contiguous
/// range to a Vec of results, stitched back in range order.
fn run_tasks<T, G>(tasks: usize, workers: usize, gen: G) -> Vec<T>
where
    T: Send,
    G: Fn(Range<usize>) -> Vec<T> + Sync,
{
    let ranges = partition(tasks, workers);
    if ranges.len() <= 1 {
        return ranges.into_iter().flat_map(&gen).collect();
    }
    let gen = &gen;
    std::thread::scope(|s| {
        let handles: Vec<_> = ranges
            .into_iter()
            .map(|r| s.spawn(move || gen(r)))
            .collect();
        let mut out = Vec::with_capacity(tasks);
        for h in handles {
            out.extend(h.join().expect("batch worker panicked"));
        }
        out
    })
}

/// Sequential reference: loop the single-instance engine over the batch.
pub fn seq_batch_hvp<F: DiffFn, const C: usize>(f: &F, batch: &BatchData) -> Result<Vec<f64>> {
    check_batch(f, batch, C, 1)?;
    let n = batch.n;
    let mut out = Vec::with_capacity(batch.m * n);
    let mut y = vec![HDual::<f64, C>::zero(); n];
    for e in 0..batch.m {
        let (a, vin) = (batch.point(e), batch.multiplicand(e));
        for i in 0..n {
            out.push(hvp_row(f, a, vin, &mut y, i));
        }
    }
    Ok(out)
}

/// One task per instance.
pub fn l0_batch_hvp<F: DiffFn, const C: usize>(
    f: &F,
    batch: &BatchData,
    workers: usize,
) -> Result<Vec<f64>> {
    check_batch(f, batch, C, workers)?;
    let n = batch.n;
    Ok(run_tasks(batch.m, workers, |range| {
        let mut y = vec![HDual::<f64, C>::zero(); n];
        let mut local = Vec::with_capacity(range.len() * n);
        for e in range {
            let (a, vin) = (batch.point(e), batch.multiplicand(e));
            for i in 0..n {
                local.push(hvp_row(f, a, vin, &mut y, i));
            }
        }
        local
    }))
}

/// One task per (instance, row): task `t` computes `out[t]` directly.
pub fn l1_batch_hvp<F: DiffFn, const C: usize>(
    f: &F,
    batch: &BatchData,
    workers: usize,
) -> Result<Vec<f64>> {
    check_batch(f, batch, C, workers)?;
    let n = batch.n;
    Ok(run_tasks(batch.m * n, workers, |range| {
        let mut y = vec![HDual::<f64, C>::zero(); n];
        range
            .map(|t| {
                let (e, i) = (t / n, t % n);
                hvp_row(f, batch.point(e), batch.multiplicand(e), &mut y, i)
            })
            .collect()
    }))
}

/// One task per (instance, row, chunk): tasks fill a partial-result
/// buffer, then each row is reduced in ascending chunk order -- the same
/// order the sequential engine folds its partials in.
pub fn l2_batch_hvp<F: DiffFn, const C: usize>(
    f: &F,
    batch: &BatchData,
    workers: usize,
) -> Result<Vec<f64>> {
    check_batch(f, batch, C, workers)?;
    let n = batch.n;
    if batch.m == 0 || n == 0 {
        return Ok(vec![0.0; batch.m * n]);
    }
    let nchunk = n / C;
    let partials = run_tasks(batch.m * n * nchunk, workers, |range| {
        let mut y = vec![HDual::<f64, C>::zero(); n];
        range
            .map(|t| {
                let e = t / (n * nchunk);
                let rem = t % (n * nchunk);
                let (i, j) = (rem / nchunk, rem % nchunk);
                hvp_row_chunk(f, batch.point(e), batch.multiplicand(e), &mut y, i, j)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(batch.m * n);
    for row in partials.chunks(nchunk) {
        let mut res = 0.0;
        for &p in row {
            res += p;
        }
        out.push(res);
    }
    Ok(out)
}

macro_rules! dyn_level {
    ($(#[$doc:meta])* $name:ident => $inner:ident) => {
        $(#[$doc])*
        pub fn $name<F: DiffFn>(
            f: &F,
            batch: &BatchData,
            csize: usize,
            workers: usize,
        ) -> Result<Vec<f64>> {
            check_batch(f, batch, csize, workers)?;
            crate::with_csize!(csize, C => $inner::<F, C>(f, batch, workers))
        }
    };
}

dyn_level!(
    /// Runtime-chunk-size front end for [`l0_batch_hvp`].
    l0_batch_hvp_dyn => l0_batch_hvp
);
dyn_level!(
    /// Runtime-chunk-size front end for [`l1_batch_hvp`].
    l1_batch_hvp_dyn => l1_batch_hvp
);
dyn_level!(
    /// Runtime-chunk-size front end for [`l2_batch_hvp`].
    l2_batch_hvp_dyn => l2_batch_hvp
);

/// Runtime-chunk-size front end for [`seq_batch_hvp`].
pub fn seq_batch_hvp_dyn<F: DiffFn>(f: &F, batch: &BatchData, csize: usize) -> Result<Vec<f64>> {
    check_batch(f, batch, csize, 1)?;
    crate::with_csize!(csize, C => seq_batch_hvp::<F, C>(f, batch))
}
