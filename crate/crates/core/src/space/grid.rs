// Uniform cell grid for fixed-radius ball queries on coordinate spaces.
//
// Points are bucketed into axis-aligned cells (CSR layout). A query of radius
// r scans the cells overlapping the query box and the caller applies the
// exact distance test. On a flat torus the cell ranges wrap around, and a
// range wider than the torus collapses to the full axis so no cell is
// visited twice.

/// Cells per point targeted when choosing the cell width.
const POINTS_PER_CELL: f64 = 2.0;
/// Relative widening of the scanned box so rounding in the cell assignment
/// never drops a candidate; the exact test happens afterwards.
const SCAN_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct CellGrid {
    dim: usize,
    origin: Vec<f64>,
    width: Vec<f64>,
    counts: Vec<usize>,
    period: Option<Vec<f64>>,
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl CellGrid {
    pub(crate) fn build(coords: &[f64], dim: usize, period: Option<&[f64]>) -> Self {
        let n = coords.len() / dim;
        let (origin, extent): (Vec<f64>, Vec<f64>) = match period {
            Some(p) => (vec![0.0; dim], p.to_vec()),
            None => (0..dim)
                .map(|k| {
                    let (lo, hi) = (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
                        let c = coords[i * dim + k];
                        (lo.min(c), hi.max(c))
                    });
                    (lo, (hi - lo).max(0.0))
                })
                .unzip(),
        };

        let active: Vec<usize> = (0..dim).filter(|&k| extent[k] > 0.0).collect();
        let volume: f64 = active.iter().map(|&k| extent[k]).product();
        let target = if active.is_empty() {
            1.0
        } else {
            (volume * POINTS_PER_CELL / n.max(1) as f64).powf(1.0 / active.len() as f64)
        };
        let max_cells = 4 * n + 1;

        let mut counts = vec![1usize; dim];
        let mut width = vec![1.0; dim];
        for &k in &active {
            let c = match period {
                Some(_) => (extent[k] / target).floor().max(1.0),
                None => (extent[k] / target).ceil().max(1.0),
            };
            counts[k] = (c as usize).min(max_cells);
        }
        while counts.iter().product::<usize>() > max_cells {
            for &k in &active {
                counts[k] = (counts[k] / 2).max(1);
            }
        }
        for &k in &active {
            width[k] = extent[k] / counts[k] as f64;
        }

        let mut grid = Self {
            dim,
            origin,
            width,
            counts,
            period: period.map(|p| p.to_vec()),
            starts: Vec::new(),
            items: Vec::new(),
        };

        let cell_of: Vec<usize> = (0..n).map(|i| grid.cell_index(&coords[i * dim..(i + 1) * dim])).collect();
        let total: usize = grid.counts.iter().product();
        let mut starts = vec![0usize; total + 1];
        for &c in &cell_of {
            starts[c + 1] += 1;
        }
        for c in 0..total {
            starts[c + 1] += starts[c];
        }
        let mut fill = starts.clone();
        let mut items = vec![0u32; n];
        for (i, &c) in cell_of.iter().enumerate() {
            items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        grid.starts = starts;
        grid.items = items;
        grid
    }

    fn axis_cell(&self, k: usize, c: f64) -> i64 {
        let local = match &self.period {
            Some(p) => c.rem_euclid(p[k]),
            None => c - self.origin[k],
        };
        let cell = (local / self.width[k]).floor() as i64;
        cell.clamp(0, self.counts[k] as i64 - 1)
    }

    fn cell_index(&self, x: &[f64]) -> usize {
        let mut idx = 0usize;
        for k in 0..self.dim {
            idx = idx * self.counts[k] + self.axis_cell(k, x[k]) as usize;
        }
        idx
    }

    /// Visits every point stored in a cell overlapping the box of half-width
    /// `r` around `x`. Candidates are a superset of the true ball.
    pub(crate) fn for_each_candidate(&self, x: &[f64], r: f64, mut f: impl FnMut(usize)) {
        let reach = r * (1.0 + SCAN_SLACK) + f64::EPSILON;
        let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(self.dim);
        for k in 0..self.dim {
            let n_k = self.counts[k] as i64;
            let (lo, hi) = match &self.period {
                Some(p) => {
                    let local = x[k].rem_euclid(p[k]);
                    let lo = ((local - reach) / self.width[k]).floor() as i64;
                    let hi = ((local + reach) / self.width[k]).floor() as i64;
                    if hi - lo + 1 >= n_k {
                        (0, n_k - 1)
                    } else {
                        (lo, hi)
                    }
                }
                None => {
                    let local = x[k] - self.origin[k];
                    let lo = ((local - reach) / self.width[k]).floor() as i64;
                    let hi = ((local + reach) / self.width[k]).floor() as i64;
                    (lo.max(0), hi.min(n_k - 1))
                }
            };
            if lo > hi {
                return;
            }
            ranges.push((lo, hi));
        }

        let mut cursor: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            let mut idx = 0usize;
            for k in 0..self.dim {
                let n_k = self.counts[k] as i64;
                idx = idx * self.counts[k] + cursor[k].rem_euclid(n_k) as usize;
            }
            for &j in &self.items[self.starts[idx]..self.starts[idx + 1]] {
                f(j as usize);
            }
            // odometer increment, last axis fastest
            let mut k = self.dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cursor[k] < ranges[k].1 {
                    cursor[k] += 1;
                    break;
                }
                cursor[k] = ranges[k].0;
            }
        }
    }
}
