use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::{Error, Result};

/// Norms at or below this are treated as dead embeddings.
pub const NORM_EPS: f64 = 1e-12;

/// Projects `v` onto the unit sphere.
pub fn l2_normalize(v: &[f64]) -> Result<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > NORM_EPS) {
        return Err(Error::NearZeroNorm {
            what: "vector".into(),
            row: 0,
        });
    }
    Ok(v.iter().map(|x| x / norm).collect())
}

/// Row-wise L2 normalization with the norms kept for the backward pass.
#[derive(Debug, Clone)]
pub struct NormalizedRows {
    pub rows: Array2<f64>,
    norms: Array1<f64>,
}

impl NormalizedRows {
    pub fn new(x: ArrayView2<f64>, what: &str) -> Result<Self> {
        let norms = x.map_axis(Axis(1), |r| r.dot(&r).sqrt());
        if let Some(row) = norms.iter().position(|&n| !(n > NORM_EPS)) {
            return Err(Error::NearZeroNorm {
                what: what.to_string(),
                row,
            });
        }
        let rows = &x / &norms.view().insert_axis(Axis(1));
        Ok(NormalizedRows { rows, norms })
    }

    pub fn norms(&self) -> &Array1<f64> {
        &self.norms
    }

    /// `dL/dx = (dL/dy − y ⟨y, dL/dy⟩) / ‖x‖` row by row.
    pub fn backward(&self, grad: ArrayView2<f64>) -> Array2<f64> {
        let mut out = grad.to_owned();
        for ((mut g, y), &n) in out.rows_mut().into_iter().zip(self.rows.rows()).zip(&self.norms) {
            let proj = g.dot(&y);
            g.scaled_add(-proj, &y);
            g /= n;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn three_four_five() {
        let v = l2_normalize(&[3.0, 4.0]).unwrap();
        assert!((v[0] - 0.6).abs() < 1e-15 && (v[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn unit_vector_is_fixed() {
        let v = [0.0, 1.0, 0.0];
        assert_eq!(l2_normalize(&v).unwrap(), v.to_vec());
    }

    #[test]
    fn zero_vector_is_an_error() {
        let err = l2_normalize(&[0.0, 0.0]).unwrap_err();
        assert!(err.to_string().contains("near-zero norm"));
    }

    #[test]
    fn offending_row_is_named() {
        let x = array![[1.0, 0.0], [0.0, 0.0]];
        match NormalizedRows::new(x.view(), "item embeddings") {
            Err(Error::NearZeroNorm { what, row }) => {
                assert_eq!(row, 1);
                assert_eq!(what, "item embeddings");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rows_are_unit_and_scale_invariant() {
        let x = array![[1.0, 2.0, 2.0], [-0.1, 0.0, 0.0]];
        let a = NormalizedRows::new(x.view(), "x").unwrap();
        let b = NormalizedRows::new((&x * 7.0).view(), "x").unwrap();
        for r in a.rows.rows() {
            assert!((r.dot(&r) - 1.0).abs() < 1e-12);
        }
        assert!((&a.rows - &b.rows).iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x = array![[0.3, -1.2, 0.5], [2.0, 0.1, -0.7]];
        let w = array![[0.9, 0.2, -0.4], [-1.0, 0.5, 0.3]];
        let f = |x: &Array2<f64>| (NormalizedRows::new(x.view(), "x").unwrap().rows * &w).sum();
        let n = NormalizedRows::new(x.view(), "x").unwrap();
        let analytic = n.backward(w.view());
        let h = 1e-6;
        for i in 0..2 {
            for j in 0..3 {
                let mut p = x.clone();
                p[[i, j]] += h;
                let mut m = x.clone();
                m[[i, j]] -= h;
                let fd = (f(&p) - f(&m)) / (2.0 * h);
                assert!((fd - analytic[[i, j]]).abs() < 1e-8, "{fd} vs {}", analytic[[i, j]]);
            }
        }
    }
}
