//! Exact Euclidean distance transform on uniform grids (lower envelope of parabolas).

use crate::grid::Mask;

fn edt_1d(f: &[f64], d: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(i) => i,
        None => {
            d.iter_mut().for_each(|x| *x = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and z[0] = -inf cannot happen
                unreachable!();
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, dq) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dx = q as f64 - p as f64;
        *dq = dx * dx + f[p];
    }
}

/// Squared distance, in grid units, from every node to the nearest set node of `mask`.
/// Nodes are at infinite distance when the mask is empty.
pub fn squared_distance(mask: &Mask) -> Vec<f64> {
    let g = &mask.grid;
    let mut dist: Vec<f64> = mask.values.iter().map(|&v| if v { 0.0 } else { f64::INFINITY }).collect();
    let nmax = g.shape[0].max(g.shape[1]).max(g.shape[2]);
    let mut f = vec![0.0; nmax];
    let mut d = vec![0.0; nmax];
    let mut v = vec![0usize; nmax];
    let mut z = vec![0.0; nmax + 1];
    for axis in 0..g.dim {
        let n = g.shape[axis];
        let stride = match axis {
            0 => 1,
            1 => g.shape[0],
            _ => g.shape[0] * g.shape[1],
        };
        for start in 0..g.len() {
            let c = g.coords(start);
            if c[axis] != 0 {
                continue;
            }
            for q in 0..n {
                f[q] = dist[start + q * stride];
            }
            edt_1d(&f[..n], &mut d[..n], &mut v[..n], &mut z[..n + 1]);
            for q in 0..n {
                dist[start + q * stride] = d[q];
            }
        }
    }
    dist
}

/// Physical distance from each node to the set.
pub fn distance(mask: &Mask) -> Vec<f64> {
    let h = mask.grid.h;
    squared_distance(mask).into_iter().map(|d2| d2.sqrt() * h).collect()
}
