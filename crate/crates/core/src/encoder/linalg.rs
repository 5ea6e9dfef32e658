//! Slice kernels for the per-timestep recurrence.

/// `out += v · m` for row-major `m` with `v.len()` rows.
#[inline]
pub(crate) fn vec_mat_acc(v: &[f64], m: &[f64], out: &mut [f64]) {
    let cols = out.len();
    debug_assert_eq!(m.len(), v.len() * cols);
    for (vi, row) in v.iter().zip(m.chunks_exact(cols)) {
        if *vi != 0.0 {
            for (o, r) in out.iter_mut().zip(row) {
                *o += vi * r;
            }
        }
    }
}

/// `out += m · v` (that is, `v · mᵀ`) for row-major `m` with `v.len()` columns.
#[inline]
pub(crate) fn mat_vec_acc(m: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    debug_assert_eq!(m.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `m += a ⊗ b` for row-major `m` of shape `a.len() x b.len()`.
#[inline]
pub(crate) fn outer_acc(a: &[f64], b: &[f64], m: &mut [f64]) {
    let cols = b.len();
    for (ai, row) in a.iter().zip(m.chunks_exact_mut(cols)) {
        if *ai != 0.0 {
            for (r, bj) in row.iter_mut().zip(b) {
                *r += ai * bj;
            }
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
