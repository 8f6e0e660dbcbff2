//! Small dense linear algebra. Everything here works on dimensions <= 4
//! (ambient and chart dimensions of the shipped targets), so plain slices
//! and row-major layouts are enough.

/// Euclidean inner product. Panics on length mismatch in debug builds.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Determinant of a 3x3 matrix given by rows.
pub fn det3(r0: &[f64], r1: &[f64], r2: &[f64]) -> f64 {
    r0[0] * (r1[1] * r2[2] - r1[2] * r2[1]) - r0[1] * (r1[0] * r2[2] - r1[2] * r2[0])
        + r0[2] * (r1[0] * r2[1] - r1[1] * r2[0])
}

/// Determinant of a 4x4 matrix given by rows, by cofactor expansion along the first row.
pub fn det4(r0: &[f64], r1: &[f64], r2: &[f64], r3: &[f64]) -> f64 {
    let minor = |c: usize| -> f64 {
        let cols: Vec<usize> = (0..4).filter(|&j| j != c).collect();
        det3(
            &[r1[cols[0]], r1[cols[1]], r1[cols[2]]],
            &[r2[cols[0]], r2[cols[1]], r2[cols[2]]],
            &[r3[cols[0]], r3[cols[1]], r3[cols[2]]],
        )
    };
    r0[0] * minor(0) - r0[1] * minor(1) + r0[2] * minor(2) - r0[3] * minor(3)
}

/// Solves the n x n system a * x = b by Gaussian elimination with partial
/// pivoting. Returns None if a pivot is exactly zero after row exchange.
pub fn solve_small(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))
            .unwrap();
        if m[pivot_row * n + col] == 0.0 {
            return None;
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        let pivot = m[col * n + col];
        for row in col + 1..n {
            let factor = m[row * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                m[row * n + j] -= factor * m[col * n + j];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = x[col];
        for j in col + 1..n {
            s -= m[col * n + j] * x[j];
        }
        x[col] = s / m[col * n + col];
    }
    Some(x)
}

/// Inverse of an n x n matrix, column by column through `solve_small`.
pub fn invert_small(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.fill(0.0);
        e[col] = 1.0;
        let x = solve_small(n, a, &e)?;
        for row in 0..n {
            inv[row * n + col] = x[row];
        }
    }
    Some(inv)
}

/// Smallest eigenvalue of a symmetric n x n matrix by cyclic Jacobi rotations.
/// Converges rapidly for the tiny matrices used here.
pub fn sym_eigen_min(n: usize, a: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    for _sweep in 0..64 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + norm(&m)) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
            }
        }
    }
    (0..n).map(|i| m[i * n + i]).fold(f64::INFINITY, f64::min)
}

/// Dense rank-3 array with all three indices of the same dimension n,
/// row-major in (i, j, k). Used for Christoffel symbols and the chart
/// components of the two-form homomorphism.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 { n, data: vec![0.0; n * n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(i * self.n + j) * self.n + k] = value;
    }

    pub fn add_scaled(&mut self, other: &Tensor3, factor: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += factor * b;
        }
    }

    /// w^i = sum_{j,k} T^i_{jk} u^j v^k
    pub fn contract2(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                let base = (i * n + j) * n;
                let uj = u[j];
                for k in 0..n {
                    s += self.data[base + k] * uj * v[k];
                }
            }
            out[i] = s;
        }
    }

    /// M^i_j = sum_k T^i_{jk} v^k, row-major n x n output.
    pub fn contract_last(&self, v: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let base = (i * n + j) * n;
                let mut s = 0.0;
                for k in 0..n {
                    s += self.data[base + k] * v[k];
                }
                out[i * n + j] = s;
            }
        }
    }

    /// M^i_k = sum_j T^i_{jk} u^j, row-major n x n output.
    pub fn contract_mid(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            for k in 0..n {
                let mut s = 0.0;
                for j in 0..n {
                    s += self.data[(i * n + j) * n + k] * u[j];
                }
                out[i * n + k] = s;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn solve_trivial_identity() {
        let a = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let b = [2.0, -3.0, 0.5];
        let x = solve_small(3, &a, &b).unwrap();
        assert_eq!(x, b.to_vec());
    }

    #[test]
    fn solve_known_3x3() {
        // a * [1, 2, 3] computed by hand
        let a = [2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0];
        let b = [4.0, 10.0, 8.0];
        let x = solve_small(3, &a, &b).unwrap();
        for (xi, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - want).abs() < 1e-12, "{xi} vs {want}");
        }
    }

    #[test]
    fn solve_reports_singular() {
        let a = [1.0, 2.0, 2.0, 4.0];
        assert!(solve_small(2, &a, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            for _ in 0..50 {
                // diagonally dominant, hence invertible
                let mut a = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        a[i * n + j] = rng.gen_range(-1.0..1.0);
                    }
                    a[i * n + i] += 4.0;
                }
                let inv = invert_small(n, &a).unwrap();
                for i in 0..n {
                    for j in 0..n {
                        let mut s = 0.0;
                        for k in 0..n {
                            s += inv[i * n + k] * a[k * n + j];
                        }
                        let want = if i == j { 1.0 } else { 0.0 };
                        assert!((s - want).abs() < 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn min_eigenvalue_of_conformal_metric() {
        // g = f * I has min eigenvalue f
        for f in [0.25, 1.0, 3.5] {
            let a = [f, 0.0, 0.0, 0.0, f, 0.0, 0.0, 0.0, f];
            assert!((sym_eigen_min(3, &a) - f).abs() < 1e-12);
        }
    }

    #[test]
    fn min_eigenvalue_2x2_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a11: f64 = rng.gen_range(0.5..3.0);
            let a22: f64 = rng.gen_range(0.5..3.0);
            let a12: f64 = rng.gen_range(-0.4..0.4);
            let m = [a11, a12, a12, a22];
            let tr = a11 + a22;
            let det = a11 * a22 - a12 * a12;
            let want = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
            assert!((sym_eigen_min(2, &m) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn det_oracles() {
        assert_eq!(det3(&[1., 0., 0.], &[0., 1., 0.], &[0., 0., 1.]), 1.0);
        // swapping two rows flips the sign
        assert_eq!(det3(&[0., 1., 0.], &[1., 0., 0.], &[0., 0., 1.]), -1.0);
        assert_eq!(
            det4(&[1., 0., 0., 0.], &[0., 1., 0., 0.], &[0., 0., 1., 0.], &[0., 0., 0., 1.]),
            1.0
        );
        // det4 against cofactor-free closed form on a hand matrix with known value
        let r0 = [2.0, 0.0, 0.0, 1.0];
        let r1 = [0.0, 3.0, 0.0, 0.0];
        let r2 = [0.0, 0.0, 4.0, 0.0];
        let r3 = [1.0, 0.0, 0.0, 2.0];
        // block determinant: (2*2 - 1*1) * 3 * 4 = 36
        assert!((det4(&r0, &r1, &r2, &r3) - 36.0).abs() < 1e-12);
    }

    #[test]
    fn cross3_right_handed() {
        let e1 = [1.0, 0.0, 0.0];
        let e2 = [0.0, 1.0, 0.0];
        assert_eq!(cross3(&e1, &e2), [0.0, 0.0, 1.0]);
    }

    #[test]
    fn tensor3_contractions_match_direct_sums() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 3;
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.set(i, j, k, rng.gen_range(-1.0..1.0));
                }
            }
        }
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let mut w = vec![0.0; n];
        t.contract2(&u, &v, &mut w);
        let mut m_last = vec![0.0; n * n];
        t.contract_last(&v, &mut m_last);
        let mut m_mid = vec![0.0; n * n];
        t.contract_mid(&u, &mut m_mid);

        for i in 0..n {
            let mut direct = 0.0;
            for j in 0..n {
                for k in 0..n {
                    direct += t.at(i, j, k) * u[j] * v[k];
                }
            }
            assert!((w[i] - direct).abs() < 1e-13);
            // contracting the remaining index of either matrix reproduces w
            let via_last: f64 = (0..n).map(|j| m_last[i * n + j] * u[j]).sum();
            let via_mid: f64 = (0..n).map(|k| m_mid[i * n + k] * v[k]).sum();
            assert!((via_last - direct).abs() < 1e-13);
            assert!((via_mid - direct).abs() < 1e-13);
        }
    }
}
