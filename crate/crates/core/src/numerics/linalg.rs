use std::fmt;

use crate::error::{Error, Result};

/// Dense symmetric matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    order: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

/// Eigenvalues in ascending order with the matching unit eigenvectors
/// (`vectors[k]` belongs to `values[k]`).
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

const SYMMETRY_TOL: f64 = 1e-12;
const JACOBI_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;
const PD_RELATIVE: f64 = 1e-10;

impl SymMatrix {
    pub fn zeros(order: usize) -> Self {
        SymMatrix {
            order,
            data: vec![0.0; order * order],
        }
    }

    pub fn identity(order: usize) -> Self {
        let mut m = Self::zeros(order);
        for i in 0..order {
            m.data[i * order + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    /// Builds a matrix from rows, rejecting non-square or asymmetric input.
    /// The stored matrix is the exact symmetrisation `(A + Aᵀ) / 2`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if let Some(r) = rows.iter().position(|r| r.len() != k) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {k}",
                r + 1,
                rows[r].len()
            )));
        }
        let scale = rows
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        let mut m = Self::zeros(k);
        for i in 0..k {
            for j in i..k {
                let (a, b) = (rows[i][j], rows[j][i]);
                if (a - b).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Domain(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
                m.set_sym(i, j, 0.5 * (a + b));
            }
        }
        Ok(m)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.order + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.order + j] = v;
        self.data[j * self.order + i] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.order.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        SymMatrix {
            order: self.order,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.order).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.order, "vector length must match matrix order");
        self.data
            .chunks(self.order)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A v`.
    pub fn quad_form(&self, v: &[f64]) -> f64 {
        self.mul_vec(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// Principal submatrix on `idx` (in the given order).
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let mut m = Self::zeros(idx.len());
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate().skip(a) {
                m.set_sym(a, b, self.get(i, j));
            }
        }
        m
    }

    /// Symmetric eigendecomposition by cyclic Jacobi rotations.
    ///
    /// Iterates until the off-diagonal Frobenius mass drops below `1e-14` of
    /// the total Frobenius norm.
    pub fn eigen(&self) -> SymEigen {
        let k = self.order;
        let mut a = self.rows();
        let mut v: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let total: f64 = self.data.iter().map(|x| x * x).sum::<f64>();

        for _ in 0..JACOBI_MAX_SWEEPS {
            let off: f64 = (0..k)
                .flat_map(|i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i][j] * a[i][j])
                .sum();
            if off <= JACOBI_TOL * JACOBI_TOL * total || off == 0.0 {
                break;
            }
            for p in 0..k {
                for q in p + 1..k {
                    let apq = a[p][q];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for r in 0..k {
                        let (arp, arq) = (a[r][p], a[r][q]);
                        a[r][p] = c * arp - s * arq;
                        a[r][q] = s * arp + c * arq;
                    }
                    for r in 0..k {
                        let (apr, aqr) = (a[p][r], a[q][r]);
                        a[p][r] = c * apr - s * aqr;
                        a[q][r] = s * apr + c * aqr;
                    }
                    for row in v.iter_mut() {
                        let (vp, vq) = (row[p], row[q]);
                        row[p] = c * vp - s * vq;
                        row[q] = s * vp + c * vq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
        SymEigen {
            values: order.iter().map(|&i| a[i][i]).collect(),
            vectors: order
                .iter()
                .map(|&i| (0..k).map(|r| v[r][i]).collect())
                .collect(),
        }
    }

    /// Eigen-decomposition that fails unless every eigenvalue exceeds
    /// `1e-10 · max(λ_max, 1)`.
    pub fn eigen_pd(&self) -> Result<SymEigen> {
        let eig = self.eigen();
        let largest = eig.values.last().copied().unwrap_or(0.0);
        let threshold = PD_RELATIVE * largest.max(1.0);
        let smallest = eig.values.first().copied().unwrap_or(0.0);
        if !(smallest > threshold) {
            return Err(Error::SingularMatrix {
                eigenvalue: smallest,
                threshold,
                context: String::new(),
            });
        }
        Ok(eig)
    }

    pub fn inverse(&self) -> Result<Self> {
        Ok(self.eigen_pd()?.compose(|l| 1.0 / l))
    }

    pub fn inv_sqrt(&self) -> Result<Self> {
        Ok(self.eigen_pd()?.compose(|l| 1.0 / l.sqrt()))
    }

    /// Ratio of the extreme eigenvalues (infinite for singular matrices).
    pub fn condition_number(&self) -> f64 {
        let eig = self.eigen();
        let (lo, hi) = (eig.values[0], eig.values[eig.values.len() - 1]);
        if lo <= 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }

    /// `ln det A` for positive-definite `A`.
    pub fn ln_det(&self) -> Result<f64> {
        Ok(self.eigen_pd()?.values.iter().map(|l| l.ln()).sum())
    }

    /// Ordinary matrix product; the result is returned as plain rows since
    /// products of symmetric matrices need not be symmetric.
    pub fn matmul(&self, other: &SymMatrix) -> Vec<Vec<f64>> {
        let k = self.order;
        assert_eq!(k, other.order, "matrix orders must agree");
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).map(|l| self.get(i, l) * other.get(l, j)).sum())
                    .collect()
            })
            .collect()
    }
}

impl SymEigen {
    /// `V f(Λ) Vᵀ`.
    pub fn compose(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let k = self.values.len();
        let fl: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = SymMatrix::zeros(k);
        for i in 0..k {
            for j in i..k {
                let s: f64 = (0..k)
                    .map(|e| self.vectors[e][i] * fl[e] * self.vectors[e][j])
                    .sum();
                out.set_sym(i, j, s);
            }
        }
        out
    }
}

/// Kronecker product: `(A⊗B)[u·k₂ + v, u'·k₂ + v'] = A[u,u']·B[v,v']`
/// (0-based indices, `k₂` = order of `b`).
pub fn kronecker(a: &SymMatrix, b: &SymMatrix) -> SymMatrix {
    let (ka, kb) = (a.order, b.order);
    let mut out = SymMatrix::zeros(ka * kb);
    for u in 0..ka {
        for u2 in 0..ka {
            let auu = a.get(u, u2);
            for v in 0..kb {
                for v2 in 0..kb {
                    out.data[(u * kb + v) * ka * kb + u2 * kb + v2] = auu * b.get(v, v2);
                }
            }
        }
    }
    out
}
