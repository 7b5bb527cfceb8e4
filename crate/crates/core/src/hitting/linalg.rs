use crate::scalar::Real;

/// In-place Cholesky factorisation of a dense row-major SPD matrix; the
/// lower triangle holds `L` afterwards. Returns `false` if a pivot is not
/// positive.
pub(crate) fn cholesky_in_place<F: Real>(a: &mut [F], n: usize) -> bool {
    for j in 0..n {
        let row_j = &mut a[j * n..(j + 1) * n];
        let diag = row_j[j] - row_j[..j].iter().map(|&v| v * v).sum::<F>();
        if diag <= F::zero() || !diag.is_finite() {
            return false;
        }
        let diag = diag.sqrt();
        row_j[j] = diag;
        let (head, tail) = a.split_at_mut((j + 1) * n);
        let row_j = &head[j * n..j * n + j];
        for row_i in tail.chunks_exact_mut(n) {
            let dot: F = row_i[..j].iter().zip(row_j).map(|(&u, &v)| u * v).sum();
            row_i[j] = (row_i[j] - dot) / diag;
        }
    }
    true
}

/// Solves `L L^T x = b` with a factor produced by [`cholesky_in_place`].
pub(crate) fn cholesky_solve<F: Real>(l: &[F], n: usize, b: &[F]) -> Vec<F> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= l[i * n + k] * y[k];
        }
        y[i] = v / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in i + 1..n {
            v -= l[k * n + i] * y[k];
        }
        y[i] = v / l[i * n + i];
    }
    y
}

pub(crate) fn mat_vec<F: Real>(a: &[F], n: usize, x: &[F]) -> Vec<F> {
    (0..n).map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(&m, &v)| m * v).sum()).collect()
}
