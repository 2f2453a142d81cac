use alloc::vec::Vec;

use faer::Mat;

use crate::error::{Error, Result};

/// Symmetric eigendecomposition with eigenpairs sorted by descending
/// eigenvalue. Only the first `keep` pairs are returned; vectors are stored
/// column-major (`keep` columns of length n).
pub(crate) fn sym_eigen_desc(a: &Mat<f64>, keep: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = a.nrows();
    let evd = a
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::Decomposition)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    let keep = keep.min(n);
    let mut values = Vec::with_capacity(keep);
    let mut vectors = Vec::with_capacity(keep * n);
    for &k in &order[..keep] {
        if !s[k].is_finite() {
            return Err(Error::Decomposition);
        }
        values.push(s[k]);
        vectors.extend((0..n).map(|i| u[(i, k)]));
    }
    Ok((values, vectors))
}
