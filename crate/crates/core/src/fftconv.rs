//! Zero-padded FFT convolution with a sampled radial kernel.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::Grid;

fn fft_axis(data: &mut [Complex64], shape: [usize; 3], axis: usize, inverse: bool, planner: &mut FftPlanner<f64>) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    let stride = match axis {
        0 => 1,
        1 => shape[0],
        _ => shape[0] * shape[1],
    };
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let total: usize = shape.iter().product();
    for start in 0..total {
        // `start` is a line origin when its coordinate along `axis` is zero
        if (start / stride) % n != 0 {
            continue;
        }
        for (m, b) in buf.iter_mut().enumerate() {
            *b = data[start + m * stride];
        }
        fft.process(&mut buf);
        for (m, b) in buf.iter().enumerate() {
            data[start + m * stride] = *b;
        }
    }
}

/// `out[x] = sum_y data[y] k(|x - y| h) h^d` with the kernel sampled at nodes within `rad`
/// cells and normalized to unit discrete mass.
pub fn convolve_radial(data: &[f64], grid: &Grid, rad: usize, k: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    if data.len() != grid.len() {
        return Err(Error::Numeric("convolution input does not match grid".into()));
    }
    let dim = grid.dim;
    let mut shape = [1usize; 3];
    for a in 0..dim {
        shape[a] = grid.shape[a] + 2 * rad + 1;
    }
    let total: usize = shape.iter().product();
    let zero = Complex64::new(0.0, 0.0);
    let mut a = vec![zero; total];
    let mut kern = vec![zero; total];
    let lin = |i: usize, j: usize, l: usize| i + shape[0] * (j + shape[1] * l);
    for idx in 0..grid.len() {
        let c = grid.coords(idx);
        a[lin(c[0], c[1], c[2])] = Complex64::new(data[idx], 0.0);
    }
    let r = rad as i64;
    let span = |ax: usize| if ax < dim { -r..=r } else { 0..=0 };
    let mut mass = 0.0;
    for dk in span(2) {
        for dj in span(1) {
            for di in span(0) {
                let rr = ((di * di + dj * dj + dk * dk) as f64).sqrt() * grid.h;
                let v = k(rr);
                if v == 0.0 {
                    continue;
                }
                mass += v;
                let wrap = |d: i64, n: usize| (d.rem_euclid(n as i64)) as usize;
                kern[lin(wrap(di, shape[0]), wrap(dj, shape[1]), wrap(dk, shape[2]))] = Complex64::new(v, 0.0);
            }
        }
    }
    if mass <= 0.0 {
        return Err(Error::Numeric("kernel has no mass on the grid".into()));
    }
    let mut planner = FftPlanner::new();
    for ax in 0..dim {
        fft_axis(&mut a, shape, ax, false, &mut planner);
        fft_axis(&mut kern, shape, ax, false, &mut planner);
    }
    for (x, y) in a.iter_mut().zip(&kern) {
        *x *= y;
    }
    for ax in 0..dim {
        fft_axis(&mut a, shape, ax, true, &mut planner);
    }
    let norm = 1.0 / (total as f64 * mass);
    Ok((0..grid.len())
        .map(|idx| {
            let c = grid.coords(idx);
            a[lin(c[0], c[1], c[2])].re * norm
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_sum() {
        let g = Grid::new(2, &[13, 9], 0.5, &[0.0, 0.0]).unwrap();
        let data: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 13) as f64).collect();
        let k = |r: f64| (1.5 - r).max(0.0);
        let out = convolve_radial(&data, &g, 3, k).unwrap();
        let mut mass = 0.0;
        for dj in -3i64..=3 {
            for di in -3i64..=3 {
                mass += k(((di * di + dj * dj) as f64).sqrt() * 0.5);
            }
        }
        for idx in 0..g.len() {
            let c = g.coords(idx);
            let mut s = 0.0;
            for other in 0..g.len() {
                let o = g.coords(other);
                let di = c[0] as f64 - o[0] as f64;
                let dj = c[1] as f64 - o[1] as f64;
                s += data[other] * k((di * di + dj * dj).sqrt() * 0.5);
            }
            assert!((out[idx] - s / mass).abs() < 1e-10);
        }
    }
}
