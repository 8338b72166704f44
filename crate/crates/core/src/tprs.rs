//! Low-rank thin-plate regression splines over 2-D locations.
//!
//! The full thin-plate smoother for `m` distinct points has the radial
//! kernel `E_ij = η(|x_i − x_j|)`, `η(r) = r² log r / (8π)`, plus the
//! polynomial null space `T = [1, s1, s2]`, with coefficients constrained by
//! `Tᵀδ = 0` and penalty `δᵀEδ`. The rank-`k` version keeps the `k`
//! eigenvectors `U_k` of `E` with the largest absolute eigenvalues `D_k`,
//! writes `δ = U_k δ_k`, and absorbs the three constraints, which leaves
//! `k − 3` penalized directions plus the linear trend.
//!
//! Internally the penalized block is reparametrized by `γ = D_k δ_k`, so its
//! design columns are orthonormal and the penalty `γᵀD_k⁻¹γ` is then
//! diagonalized. This is a change of coefficients only: fitted values,
//! penalty values and therefore the meaning of λ are unchanged.

use std::collections::HashMap;

use faer::Mat;

use crate::error::{Error, Result};
use crate::field::LocationSet;
use crate::linalg::sym_eigen;
use crate::pls;

/// Thin-plate radial basis function in two dimensions.
pub fn thin_plate_eta(r: f64) -> f64 {
    if r <= 0.0 {
        0.0
    } else {
        r * r * r.ln() / (8.0 * std::f64::consts::PI)
    }
}

/// Eigendecomposition of the radial kernel of a location set. Bases of any
/// dimension up to the number of distinct points can be cut from it.
pub struct TprsKernel {
    locations: LocationSet,
    unique: Vec<[f64; 2]>,
    row_map: Vec<usize>,
    /// eigenvalues, ordered by decreasing absolute value
    values: Vec<f64>,
    /// matching eigenvectors as columns (m × m)
    vectors: Mat<f64>,
}

impl TprsKernel {
    pub fn new(locs: &LocationSet) -> Result<Self> {
        let mut index: HashMap<(u64, u64), usize> = HashMap::new();
        let mut unique = Vec::new();
        let mut row_map = Vec::with_capacity(locs.len());
        for p in locs.coords() {
            let key = (p[0].to_bits(), p[1].to_bits());
            let idx = *index.entry(key).or_insert_with(|| {
                unique.push(*p);
                unique.len() - 1
            });
            row_map.push(idx);
        }
        let m = unique.len();
        let e = Mat::<f64>::from_fn(m, m, |i, j| {
            let a = unique[i];
            let b = unique[j];
            thin_plate_eta(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt())
        });
        let (vals, vecs) = sym_eigen(e.as_ref(), "thin-plate kernel")?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| vals[b].abs().total_cmp(&vals[a].abs()).then(a.cmp(&b)));
        let values = order.iter().map(|&i| vals[i]).collect();
        let vectors = Mat::<f64>::from_fn(m, m, |i, j| vecs[(i, order[j])]);
        Ok(Self {
            locations: locs.clone(),
            unique,
            row_map,
            values,
            vectors,
        })
    }

    pub fn distinct(&self) -> usize {
        self.unique.len()
    }

    pub fn locations(&self) -> &LocationSet {
        &self.locations
    }

    /// Kernel eigenvalues ordered by decreasing magnitude.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Basis of dimension `k` (giving `k − 1` columns after the
    /// sum-to-zero constraint).
    pub fn basis(&self, k: usize) -> Result<TprsBasis> {
        let m = self.unique.len();
        if k < 4 {
            return Err(Error::Domain(format!(
                "basis dimension must be >= 4, got {k}"
            )));
        }
        if k > m {
            return Err(Error::RankDeficient { distinct: m, k });
        }
        let d = &self.values[..k];
        if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::RankDeficient { distinct: m, k });
        }
        let uk = self.vectors.as_ref().subcols(0, k);

        // constraint Tᵀ U_k D_k⁻¹ γ = 0 on the reparametrized coefficients
        let mut c = Mat::<f64>::zeros(k, 3);
        for j in 0..k {
            let (mut a0, mut a1, mut a2) = (0.0, 0.0, 0.0);
            for i in 0..m {
                let u = uk[(i, j)];
                a0 += u;
                a1 += u * self.unique[i][0];
                a2 += u * self.unique[i][1];
            }
            c[(j, 0)] = a0 / d[j];
            c[(j, 1)] = a1 / d[j];
            c[(j, 2)] = a2 / d[j];
        }
        let q = c.qr().compute_Q();
        let z = q.as_ref().subcols(3, k - 3);

        let pen0 = {
            let zd = Mat::<f64>::from_fn(k, k - 3, |i, j| z[(i, j)] / d[i]);
            let mut p = z.transpose() * &zd;
            crate::linalg::symmetrize(&mut p);
            p
        };
        let (lam, v) = sym_eigen(pen0.as_ref(), "thin-plate penalty")?;
        let rot = z * &v;
        let smooth_unique = uk * &rot;

        let n = self.row_map.len();
        let ncol = k - 1;
        let mut design = Mat::<f64>::zeros(n, ncol);
        for (r, &u) in self.row_map.iter().enumerate() {
            for j in 0..(k - 3) {
                design[(r, j)] = smooth_unique[(u, j)];
            }
            design[(r, k - 3)] = self.unique[u][0];
            design[(r, k - 2)] = self.unique[u][1];
        }
        for j in 0..ncol {
            let mean = (0..n).map(|r| design[(r, j)]).sum::<f64>() / n as f64;
            for r in 0..n {
                design[(r, j)] -= mean;
            }
        }
        let mut penalty = Mat::<f64>::zeros(ncol, ncol);
        for (j, l) in lam.iter().enumerate() {
            penalty[(j, j)] = *l;
        }
        Ok(TprsBasis {
            design,
            penalty,
            null_dim: 2,
            k,
            locations: self.locations.clone(),
        })
    }
}

/// Centered thin-plate regression spline design and penalty.
#[derive(Debug, Clone)]
pub struct TprsBasis {
    /// n × (k − 1) centered smooth columns: `k − 3` penalized, then `s1`, `s2`
    pub design: Mat<f64>,
    /// (k − 1) × (k − 1) penalty, diagonal, zero on the two linear columns
    pub penalty: Mat<f64>,
    /// number of unpenalized smooth directions (the linear trend)
    pub null_dim: usize,
    /// requested basis dimension K
    pub k: usize,
    pub locations: LocationSet,
}

impl TprsBasis {
    pub fn ncols(&self) -> usize {
        self.design.ncols()
    }

    pub fn nrows(&self) -> usize {
        self.design.nrows()
    }
}

/// Builds a rank-`k` thin-plate regression spline basis.
///
/// The full eigendecomposition of the `m × m` radial kernel is computed, so
/// this is intended for a few thousand distinct points. Much larger location
/// sets need a partial (Lanczos-type) eigensolver instead.
pub fn build_tprs(locs: &LocationSet, k: usize) -> Result<TprsBasis> {
    let distinct = {
        let mut seen = std::collections::HashSet::new();
        locs.coords()
            .iter()
            .filter(|p| seen.insert((p[0].to_bits(), p[1].to_bits())))
            .count()
    };
    if k >= 4 && k > distinct {
        return Err(Error::RankDeficient { distinct, k });
    }
    TprsKernel::new(locs)?.basis(k)
}

/// Trace of the influence matrix `X(XᵀWX + λS)⁻¹XᵀW` of a penalized fit on
/// `[other_design | basis]`.
pub fn effective_df(
    basis: &TprsBasis,
    other_design: &Mat<f64>,
    lambda: f64,
    weights: Option<&[f64]>,
) -> Result<f64> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!(
            "lambda must be finite and >= 0, got {lambda}"
        )));
    }
    if other_design.nrows() != basis.nrows() {
        return Err(Error::Dimension(
            "parametric design rows differ from basis rows".into(),
        ));
    }
    let x = pls::stack_design(other_design.as_ref(), Some(basis));
    let s = pls::stack_penalty(other_design.ncols(), Some(basis));
    pls::hat_trace(x.as_ref(), s.as_ref(), lambda, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::keyed_stream;

    fn locs(n: usize, seed: u64) -> LocationSet {
        LocationSet::uniform(n, &mut keyed_stream(seed, &[b"tprs-test"])).unwrap()
    }

    fn intercept(n: usize) -> Mat<f64> {
        Mat::<f64>::from_fn(n, 1, |_, _| 1.0)
    }

    #[test]
    fn minimum_basis_has_three_columns() {
        let b = build_tprs(&locs(30, 1), 4).unwrap();
        assert_eq!(b.ncols(), 3);
        assert_eq!(b.null_dim, 2);
        let zero_diag = (0..3).filter(|&j| b.penalty[(j, j)] == 0.0).count();
        assert_eq!(zero_diag, 2);
    }

    #[test]
    fn columns_are_centered_and_penalty_psd() {
        let b = build_tprs(&locs(120, 2), 30).unwrap();
        assert_eq!(b.ncols(), 29);
        for j in 0..b.ncols() {
            let s: f64 = (0..b.nrows()).map(|i| b.design[(i, j)]).sum();
            assert!(s.abs() < 1e-8);
        }
        let (vals, _) = sym_eigen(b.penalty.as_ref(), "p").unwrap();
        assert!(vals.iter().all(|v| *v >= -1e-10), "{vals:?}");
        // the two linear columns are the unpenalized ones
        assert_eq!(b.penalty[(27, 27)], 0.0);
        assert_eq!(b.penalty[(28, 28)], 0.0);
    }

    #[test]
    fn too_few_distinct_locations() {
        let mut pts = vec![[0.1, 0.1]; 10];
        pts[1] = [0.2, 0.9];
        pts[2] = [0.7, 0.4];
        pts[3] = [0.5, 0.5];
        let l = LocationSet::new(pts).unwrap();
        assert!(matches!(
            build_tprs(&l, 5),
            Err(Error::RankDeficient { distinct: 4, k: 5 })
        ));
        assert!(build_tprs(&l, 4).is_ok());
    }

    #[test]
    fn duplicate_rows_share_basis_values() {
        let mut pts: Vec<[f64; 2]> = locs(20, 3).coords().to_vec();
        pts.push(pts[4]);
        pts.push(pts[9]);
        let l = LocationSet::new(pts).unwrap();
        let b = build_tprs(&l, 10).unwrap();
        for j in 0..b.ncols() {
            assert_eq!(b.design[(20, j)], b.design[(4, j)]);
            assert_eq!(b.design[(21, j)], b.design[(9, j)]);
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let l = locs(60, 4);
        let a = build_tprs(&l, 15).unwrap();
        let b = build_tprs(&l, 15).unwrap();
        assert_eq!(a.design, b.design);
        assert_eq!(a.penalty, b.penalty);
    }

    #[test]
    fn full_rank_design() {
        let l = locs(80, 5);
        let b = build_tprs(&l, 25).unwrap();
        let x = pls::stack_design(intercept(80).as_ref(), Some(&b));
        let g = crate::linalg::gram(x.as_ref(), None);
        let (vals, _) = sym_eigen(g.as_ref(), "g").unwrap();
        assert!(vals[0] > 1e-10 * vals[vals.len() - 1]);
    }

    #[test]
    fn edf_limits() {
        let l = locs(50, 6);
        let b = build_tprs(&l, 12).unwrap();
        let p = intercept(50);
        let e0 = effective_df(&b, &p, 0.0, None).unwrap();
        assert!((e0 - 12.0).abs() < 1e-8, "{e0}");
        let einf = effective_df(&b, &p, 1e12, None).unwrap();
        assert!((einf - 3.0).abs() < 1e-3, "{einf}");
        assert!(effective_df(&b, &p, -1.0, None).is_err());
    }

    #[test]
    fn edf_monotone_in_lambda() {
        let l = locs(60, 7);
        let b = build_tprs(&l, 20).unwrap();
        let p = intercept(60);
        let mut prev = f64::INFINITY;
        for i in 0..40 {
            let lam = 10f64.powf(-8.0 + 0.4 * i as f64);
            let e = effective_df(&b, &p, lam, None).unwrap();
            assert!(e <= prev + 1e-9);
            prev = e;
        }
    }

    #[test]
    fn larger_basis_fits_at_least_as_well() {
        let l = locs(70, 8);
        let y: Vec<f64> = l
            .coords()
            .iter()
            .map(|p| (6.0 * p[0]).sin() * (4.0 * p[1]).cos())
            .collect();
        let kernel = TprsKernel::new(&l).unwrap();
        let mut prev = f64::INFINITY;
        for k in [5, 10, 20, 40] {
            let b = kernel.basis(k).unwrap();
            let x = pls::stack_design(intercept(70).as_ref(), Some(&b));
            let g = crate::linalg::gram(x.as_ref(), None);
            let c = crate::linalg::Cholesky::factor(g.as_ref(), "g").unwrap();
            let beta = c.solve_vec(&crate::linalg::xt_wv(x.as_ref(), None, &y));
            let fit = crate::linalg::mat_vec(x.as_ref(), &beta);
            let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(rss <= prev + 1e-10);
            prev = rss;
        }
    }
}
