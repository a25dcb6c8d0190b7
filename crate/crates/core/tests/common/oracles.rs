//! Slow, independent reference routines used only to cross-check the library.
//! Everything works on plain nested vectors so no library code is involved.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<C64>>;

pub fn zeros(r: usize, c: usize) -> Dense {
    vec![vec![C64::new(0.0, 0.0); c]; r]
}

pub fn identity(n: usize) -> Dense {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

pub fn mul(a: &Dense, b: &Dense) -> Dense {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut s = C64::new(0.0, 0.0);
            for l in 0..k {
                s += a[i][l] * b[l][j];
            }
            out[i][j] = s;
        }
    }
    out
}

pub fn adjoint(a: &Dense) -> Dense {
    let mut out = zeros(a[0].len(), a.len());
    for (i, row) in a.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            out[j][i] = z.conj();
        }
    }
    out
}

pub fn random_hermitian(n: usize, seed: u64) -> Dense {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = zeros(n, n);
    for i in 0..n {
        m[i][i] = C64::new(rng.random_range(-2.0..2.0), 0.0);
        for j in i + 1..n {
            let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[i][j] = z;
            m[j][i] = z.conj();
        }
    }
    m
}

/// Eigenvalues of a complex Hermitian matrix via cyclic Jacobi rotations on
/// its real symmetric 2n x 2n embedding [[Re, -Im], [Im, Re]].
pub fn jacobi_eigenvalues(a: &Dense) -> Vec<f64> {
    let n = a.len();
    let m = 2 * n;
    let mut s = vec![vec![0.0f64; m]; m];
    for i in 0..n {
        for j in 0..n {
            s[i][j] = a[i][j].re;
            s[i + n][j + n] = a[i][j].re;
            s[i][j + n] = -a[i][j].im;
            s[i + n][j] = a[i][j].im;
        }
    }
    for _sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[i][j] * s[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if s[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (s[q][q] - s[p][p]) / (2.0 * s[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..m {
                    let (skp, skq) = (s[k][p], s[k][q]);
                    s[k][p] = c * skp - sn * skq;
                    s[k][q] = sn * skp + c * skq;
                }
                for k in 0..m {
                    let (spk, sqk) = (s[p][k], s[q][k]);
                    s[p][k] = c * spk - sn * sqk;
                    s[q][k] = sn * spk + c * sqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| s[i][i]).collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev.iter().step_by(2).copied().collect()
}

/// exp(-i 2 pi dt H) by scaling and squaring of a Taylor series.
pub fn expm_series(h: &Dense, dt: f64) -> Dense {
    let n = h.len();
    let norm: f64 =
        h.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max) * std::f64::consts::TAU * dt;
    let mut squarings = 0;
    while norm / 2f64.powi(squarings) > 0.25 {
        squarings += 1;
    }
    let scale = C64::new(0.0, -std::f64::consts::TAU * dt / 2f64.powi(squarings));
    let a: Dense = h.iter().map(|r| r.iter().map(|z| z * scale).collect()).collect();
    let mut result = identity(n);
    let mut term = identity(n);
    for k in 1..30 {
        term = mul(&term, &a);
        for row in term.iter_mut() {
            for z in row.iter_mut() {
                *z /= k as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                result[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        result = mul(&result, &result);
    }
    result
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| m[x][col].norm().total_cmp(&m[y][col].norm())).unwrap();
        m.swap(col, piv);
        inv.swap(col, piv);
        let d = m[col][col];
        for j in 0..n {
            m[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = m[r][col];
                for j in 0..n {
                    let (mc, ic) = (m[col][j], inv[col][j]);
                    m[r][j] -= f * mc;
                    inv[r][j] -= f * ic;
                }
            }
        }
    }
    inv
}

/// S^(-1/2) of a positive definite matrix by Denman-Beavers iteration.
pub fn inverse_sqrt(s: &Dense) -> Dense {
    let n = s.len();
    let mut y = s.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let yi = inverse(&y);
        let zi = inverse(&z);
        let mut delta = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let ny = 0.5 * (y[i][j] + zi[i][j]);
                let nz = 0.5 * (z[i][j] + yi[i][j]);
                delta = delta.max((nz - z[i][j]).norm());
                y[i][j] = ny;
                z[i][j] = nz;
            }
        }
        if delta < 1e-15 {
            break;
        }
    }
    z
}

/// Places `op` at `slot` of a three-factor tensor product by explicit
/// enumeration of multi-indices.
pub fn kron_embed(op: &Dense, slot: usize, dims: [usize; 3]) -> Dense {
    let total = dims[0] * dims[1] * dims[2];
    let mut out = zeros(total, total);
    for a in 0..dims[0] {
        for b in 0..dims[1] {
            for c in 0..dims[2] {
                for x in 0..dims[0] {
                    for y in 0..dims[1] {
                        for z in 0..dims[2] {
                            let row = [a, b, c];
                            let col = [x, y, z];
                            let others_equal = (0..3).filter(|&s| s != slot).all(|s| row[s] == col[s]);
                            if others_equal {
                                let i = (a * dims[1] + b) * dims[2] + c;
                                let j = (x * dims[1] + y) * dims[2] + z;
                                out[i][j] = op[row[slot]][col[slot]];
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Maximum total squared overlap over all injective label-to-column maps.
pub fn brute_force_assignment(overlaps: &[Vec<f64>]) -> Vec<usize> {
    fn go(rows: &[Vec<f64>], r: usize, used: &mut Vec<bool>, cur: &mut Vec<usize>, best: &mut (f64, Vec<usize>)) {
        if r == rows.len() {
            let total: f64 = cur.iter().enumerate().map(|(i, &c)| rows[i][c]).sum();
            if total > best.0 {
                *best = (total, cur.clone());
            }
            return;
        }
        for c in 0..rows[r].len() {
            if !used[c] {
                used[c] = true;
                cur.push(c);
                go(rows, r + 1, used, cur, best);
                cur.pop();
                used[c] = false;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    go(overlaps, 0, &mut vec![false; overlaps[0].len()], &mut Vec::new(), &mut best);
    best.1
}
