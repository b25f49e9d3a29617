//! Dense vertical transform matrices.
//!
//! The vertical basis is small (tens of levels), so every z-transform is a
//! dense matrix applied level-by-level across horizontal planes. Even fields
//! use the cosine series on the endpoint-inclusive nodes; odd fields use
//! `f(z) = f0 (1 - z) + f1 z + sum_m b_m sin(m pi z)` with the boundary values
//! stored in the first and last coefficient slots.

use std::f64::consts::PI;

use crate::par;

const BLOCK: usize = 512;

#[derive(Debug, Clone)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Mat {
    fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: f64) {
        self.a[r * self.cols + c] = v;
    }

    #[cfg(test)]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    /// `out[r] = sum_c a[r][c] * input[c]`, each index naming a plane of
    /// `plen` values.
    pub fn apply(&self, input: &[f64], plen: usize, out: &mut [f64]) {
        debug_assert_eq!(input.len(), self.cols * plen);
        debug_assert_eq!(out.len(), self.rows * plen);
        let nblocks = plen.div_ceil(BLOCK);
        let blocks = par::map_indexed(nblocks, |b| {
            let lo = b * BLOCK;
            let hi = (lo + BLOCK).min(plen);
            let w = hi - lo;
            let mut local = vec![0.0; self.rows * w];
            for r in 0..self.rows {
                let acc = &mut local[r * w..(r + 1) * w];
                let row = &self.a[r * self.cols..(r + 1) * self.cols];
                for (c, &m) in row.iter().enumerate() {
                    if m == 0.0 {
                        continue;
                    }
                    let src = &input[c * plen + lo..c * plen + hi];
                    for (o, s) in acc.iter_mut().zip(src) {
                        *o += m * s;
                    }
                }
            }
            local
        });
        for (b, local) in blocks.into_iter().enumerate() {
            let lo = b * BLOCK;
            let w = local.len() / self.rows;
            for r in 0..self.rows {
                out[r * plen + lo..r * plen + lo + w].copy_from_slice(&local[r * w..(r + 1) * w]);
            }
        }
    }
}

/// `sin(m pi j / n)` with exact zeros on the boundary nodes.
fn sin_node(m: usize, j: usize, n: usize) -> f64 {
    if j == 0 || j == n || m == 0 {
        0.0
    } else {
        (PI * (m * j) as f64 / n as f64).sin()
    }
}

fn cos_node(m: usize, j: usize, n: usize) -> f64 {
    (PI * (m * j) as f64 / n as f64).cos()
}

/// Cosine coefficients `m = 0..nz-1` from values on `nsrc + 1` nodes
/// (`nsrc >= nz`). Row `nz` (the Nyquist slot) stays zero.
pub(crate) fn even_forward(nz: usize, nsrc: usize) -> Mat {
    let mut m = Mat::zeros(nz + 1, nsrc + 1);
    for mode in 0..nz {
        let c = if mode == 0 { 1.0 } else { 2.0 } / nsrc as f64;
        for j in 0..=nsrc {
            let w = if j == 0 || j == nsrc { 0.5 } else { 1.0 };
            m.set(mode, j, c * w * cos_node(mode, j, nsrc));
        }
    }
    m
}

/// Values on `ndst + 1` nodes from cosine coefficients.
pub(crate) fn even_inverse(nz: usize, ndst: usize) -> Mat {
    let mut m = Mat::zeros(ndst + 1, nz + 1);
    for j in 0..=ndst {
        for mode in 0..nz {
            m.set(j, mode, cos_node(mode, j, ndst));
        }
    }
    m
}

/// Boundary values plus sine coefficients `m = 1..nz-1` of the remainder
/// after removing the affine boundary interpolant.
pub(crate) fn odd_forward(nz: usize, nsrc: usize) -> Mat {
    let mut m = Mat::zeros(nz + 1, nsrc + 1);
    m.set(0, 0, 1.0);
    m.set(nz, nsrc, 1.0);
    let scale = 2.0 / nsrc as f64;
    for mode in 1..nz {
        let mut lower = 0.0;
        let mut upper = 0.0;
        for j in 1..nsrc {
            let s = scale * sin_node(mode, j, nsrc);
            let z = j as f64 / nsrc as f64;
            m.set(mode, j, s);
            lower += (1.0 - z) * s;
            upper += z * s;
        }
        m.set(mode, 0, -lower);
        m.set(mode, nsrc, -upper);
    }
    m
}

pub(crate) fn odd_inverse(nz: usize, ndst: usize) -> Mat {
    let mut m = Mat::zeros(ndst + 1, nz + 1);
    for j in 0..=ndst {
        let z = j as f64 / ndst as f64;
        m.set(j, 0, 1.0 - z);
        m.set(j, nz, z);
        for mode in 1..nz {
            m.set(j, mode, sin_node(mode, j, ndst));
        }
    }
    m
}
