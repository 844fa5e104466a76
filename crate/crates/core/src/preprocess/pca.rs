use nalgebra::{DMatrix, SymmetricEigen};

use super::{Matrix, PreprocessError};

/// Principal components of a `[D][T]` matrix with time as observations.
#[derive(Debug, Clone)]
pub struct Pca {
    /// Eigenvalues of the population covariance, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors matching `eigenvalues`, first nonzero entry positive.
    pub components: Vec<Vec<f64>>,
    /// Per-feature means removed before projection.
    pub means: Vec<f64>,
}

impl Pca {
    /// Score series of component `k` over the centred input.
    pub fn scores(&self, m: &Matrix, k: usize) -> Vec<f64> {
        let v = &self.components[k];
        let mut out = vec![0.0; m.cols];
        for r in 0..m.rows {
            let w = v[r];
            if w == 0.0 {
                continue;
            }
            let mean = self.means[r];
            for (o, x) in out.iter_mut().zip(m.row(r)) {
                *o += w * (x - mean);
            }
        }
        out
    }
}

fn centred(m: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let t = m.cols as f64;
    let mut means = Vec::with_capacity(m.rows);
    let mut data = m.data.clone();
    for r in 0..m.rows {
        let row = &mut data[r * m.cols..(r + 1) * m.cols];
        let mean = row.iter().sum::<f64>() / t;
        row.iter_mut().for_each(|x| *x -= mean);
        means.push(mean);
    }
    (data, means)
}

/// Eigendecomposition of the `D x D` population covariance of `m`.
pub fn pca(m: &Matrix) -> Result<Pca, PreprocessError> {
    let (d, t) = (m.rows, m.cols);
    if d < 2 {
        return Err(PreprocessError::Domain(format!(
            "PCA needs >= 2 features, got {d}"
        )));
    }
    if t < 2 {
        return Err(PreprocessError::Domain(format!(
            "PCA needs >= 2 observations, got {t}"
        )));
    }
    if t < d {
        log::warn!("PCA with fewer observations ({t}) than features ({d})");
    }
    let (xc, means) = centred(m);
    let mut cov = vec![0.0f64; d * d];
    // cov = xc * xc^T / t
    unsafe {
        matrixmultiply::dgemm(
            d,
            t,
            d,
            1.0 / t as f64,
            xc.as_ptr(),
            t as isize,
            1,
            xc.as_ptr(),
            1,
            t as isize,
            0.0,
            cov.as_mut_ptr(),
            d as isize,
            1,
        );
    }
    // symmetrise against rounding before the solver sees it
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov[i * d + j] + cov[j * d + i]);
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &cov));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut components = Vec::with_capacity(d);
    for &k in &order {
        let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
        }
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
        components.push(v);
    }
    Ok(Pca {
        eigenvalues,
        components,
        means,
    })
}

/// Score series along the second principal component.
///
/// Fails with [`PreprocessError::Degenerate`] when the covariance has rank < 2.
pub fn pca_second_component(m: &Matrix) -> Result<Vec<f64>, PreprocessError> {
    let p = pca(m)?;
    let scale = p.eigenvalues[0].max(f64::MIN_POSITIVE);
    if p.eigenvalues[0] <= 0.0 || p.eigenvalues[1] <= 1e-12 * scale || p.eigenvalues[1] < 1e-300 {
        return Err(PreprocessError::Degenerate(format!(
            "covariance rank < 2 (eigenvalues {:.3e}, {:.3e})",
            p.eigenvalues[0], p.eigenvalues[1]
        )));
    }
    Ok(p.scores(m, 1))
}
