//! Small dense real-symmetric eigensolver (cyclic Jacobi rotations).
//!
//! The matrices in this crate are 4x4, so everything is stack allocated and
//! generic over the dimension. Two entry points exist: a cold start from the
//! identity and a warm start from a previously converged eigenbasis, which is
//! what the instantaneous-frame sweep uses (the field changes little between
//! time steps, so the rotated matrix is already nearly diagonal).

pub type Matrix<const N: usize> = [[f64; N]; N];

const MAX_SWEEPS: usize = 64;

/// Eigen-decomposition `a = V diag(values) Vᵀ`, eigenvectors stored as the
/// columns of `vectors`, values ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymEigen<const N: usize> {
    pub values: [f64; N],
    pub vectors: Matrix<N>,
}

impl<const N: usize> SymEigen<N> {
    /// Column `k` as an owned vector.
    pub fn vector(&self, k: usize) -> [f64; N] {
        let mut v = [0.0; N];
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = self.vectors[i][k];
        }
        v
    }

    pub fn flip_sign(&mut self, k: usize) {
        for row in self.vectors.iter_mut() {
            row[k] = -row[k];
        }
    }

    /// Makes the largest-magnitude component of every eigenvector positive.
    /// Ties are broken towards the lowest index.
    pub fn fix_signs_largest_positive(&mut self) {
        for k in 0..N {
            let mut best = 0;
            let mut best_abs = -1.0;
            for i in 0..N {
                let a = self.vectors[i][k].abs();
                // 1e-12 slack so near-equal components do not flip-flop between runs
                if a > best_abs + 1e-12 {
                    best = i;
                    best_abs = a;
                }
            }
            if self.vectors[best][k] < 0.0 {
                self.flip_sign(k);
            }
        }
    }
}

pub fn identity<const N: usize>() -> Matrix<N> {
    let mut m = [[0.0; N]; N];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn transpose<const N: usize>(a: &Matrix<N>) -> Matrix<N> {
    let mut t = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..N {
            t[j][i] = a[i][j];
        }
    }
    t
}

pub fn matmul<const N: usize>(a: &Matrix<N>, b: &Matrix<N>) -> Matrix<N> {
    let mut c = [[0.0; N]; N];
    for i in 0..N {
        for k in 0..N {
            let aik = a[i][k];
            for j in 0..N {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn matvec<const N: usize>(a: &Matrix<N>, v: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = (0..N).map(|j| a[i][j] * v[j]).sum();
    }
    out
}

pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn off_diagonal_norm<const N: usize>(a: &Matrix<N>) -> f64 {
    let mut s = 0.0;
    for i in 0..N {
        for j in (i + 1)..N {
            s += a[i][j] * a[i][j];
        }
    }
    s.sqrt()
}

fn frobenius<const N: usize>(a: &Matrix<N>) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// Diagonalizes `a` in place by cyclic Jacobi sweeps, accumulating the
/// rotations into `v` (so on return `a_in = v · diag(a) · vᵀ` when `v` started
/// as the identity).
fn jacobi_in_place<const N: usize>(a: &mut Matrix<N>, v: &mut Matrix<N>) {
    let scale = frobenius(a).max(f64::MIN_POSITIVE);
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(a) <= 1e-15 * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = a[p][q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..N {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..N {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
}

fn sorted<const N: usize>(a: &Matrix<N>, v: &Matrix<N>) -> SymEigen<N> {
    let mut order: [usize; N] = [0; N];
    for (i, o) in order.iter_mut().enumerate() {
        *o = i;
    }
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let mut out = SymEigen {
        values: [0.0; N],
        vectors: [[0.0; N]; N],
    };
    for (k, &src) in order.iter().enumerate() {
        out.values[k] = a[src][src];
        for i in 0..N {
            out.vectors[i][k] = v[i][src];
        }
    }
    out
}

/// Eigen-decomposition of a real symmetric matrix. Values ascending; vector
/// signs are whatever the rotations produced (callers fix a gauge).
pub fn eigh<const N: usize>(a: &Matrix<N>) -> SymEigen<N> {
    let mut work = *a;
    let mut v = identity();
    jacobi_in_place(&mut work, &mut v);
    sorted(&work, &v)
}

/// Same as [`eigh`] but starts from an orthogonal `guess` whose columns are
/// approximate eigenvectors. The returned vectors are ordered by value; signs
/// are inherited from the guess when the rotation is small.
pub fn eigh_warm<const N: usize>(a: &Matrix<N>, guess: &Matrix<N>) -> SymEigen<N> {
    let mut work = matmul(&transpose(guess), &matmul(a, guess));
    // symmetrize away rounding from the two products
    for i in 0..N {
        for j in (i + 1)..N {
            let m = 0.5 * (work[i][j] + work[j][i]);
            work[i][j] = m;
            work[j][i] = m;
        }
    }
    let mut w = identity();
    jacobi_in_place(&mut work, &mut w);
    let v = matmul(guess, &w);
    sorted(&work, &v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual<const N: usize>(a: &Matrix<N>, e: &SymEigen<N>) -> f64 {
        (0..N)
            .map(|k| {
                let v = e.vector(k);
                let av = matvec(a, &v);
                av.iter()
                    .zip(&v)
                    .map(|(x, y)| (x - e.values[k] * y).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn diagonal_input_is_sorted() {
        let a = [[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]];
        let e = eigh(&a);
        assert_eq!(e.values, [-1.0, 2.0, 3.0]);
        assert_eq!(e.vector(0), [0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        let a = [[1.0, 2.0], [2.0, -2.0]];
        let e = eigh(&a);
        // trace -1, det -6 -> (-1 ± 5)/2
        assert!((e.values[0] + 3.0).abs() < 1e-14);
        assert!((e.values[1] - 2.0).abs() < 1e-14);
        assert!(residual(&a, &e) < 1e-14);
    }

    #[test]
    fn warm_start_matches_cold_start() {
        let a = [
            [0.3, -1.0, 0.0, 0.0],
            [-1.0, 0.1, -0.02, 0.0],
            [0.0, -0.02, -0.1, -1.0],
            [0.0, 0.0, -1.0, -0.3],
        ];
        let cold = eigh(&a);
        let mut b = a;
        b[0][0] += 1e-3;
        let warm = eigh_warm(&b, &cold.vectors);
        let direct = eigh(&b);
        for k in 0..4 {
            assert!((warm.values[k] - direct.values[k]).abs() < 1e-13);
        }
        assert!(residual(&b, &warm) < 1e-13);
    }

    #[test]
    fn degenerate_pair_stays_orthonormal() {
        let a = [
            [0.0, -1.0, 0.0, 0.0],
            [-1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, -1.0, 0.0],
        ];
        let e = eigh(&a);
        let g = matmul(&transpose(&e.vectors), &e.vectors);
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - target).abs() < 1e-14);
            }
        }
        assert!(residual(&a, &e) < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn random_symmetric_residual(vals in proptest::collection::vec(-3.0f64..3.0, 10)) {
            let mut a = [[0.0; 4]; 4];
            let mut it = vals.into_iter();
            for i in 0..4 {
                for j in i..4 {
                    let x = it.next().unwrap();
                    a[i][j] = x;
                    a[j][i] = x;
                }
            }
            let e = eigh(&a);
            proptest::prop_assert!(residual(&a, &e) < 1e-12);
            for k in 1..4 {
                proptest::prop_assert!(e.values[k - 1] <= e.values[k]);
            }
        }
    }
}
