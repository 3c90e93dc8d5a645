use super::scalar::{Ring, Scalar};
use crate::error::{Error, Result};

/// Dense row-major matrix over a [`Scalar`] field.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize, ctx: &S::Ctx) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![S::zero(ctx); rows * cols],
        }
    }

    pub fn identity(n: usize, ctx: &S::Ctx) -> Self {
        let mut m = Self::zeros(n, n, ctx);
        for i in 0..n {
            m.set(i, i, S::one(ctx));
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_columns(cols: &[Vec<S>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        assert!(cols.iter().all(|col| col.len() == r), "ragged columns");
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            for col in cols {
                data.push(col[i].clone());
            }
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<S> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<S>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn entries(&self) -> &[S] {
        &self.data
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product size mismatch");
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = self.get(i, 0).mul(other.get(0, j));
                for k in 1..self.cols {
                    acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
                }
                data.push(acc);
            }
        }
        Matrix {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// Covector times matrix, `h·A`.
    pub fn covec_mul(&self, h: &[S]) -> Vec<S> {
        assert_eq!(self.rows, h.len());
        (0..self.cols)
            .map(|j| {
                let mut acc = h[0].mul(self.get(0, j));
                for i in 1..self.rows {
                    acc = acc.add(&h[i].mul(self.get(i, j)));
                }
                acc
            })
            .collect()
    }

    pub fn scale(&self, s: &S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.mul(s)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.sub(b)).collect(),
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.data.iter().map(Scalar::magnitude).fold(0.0, f64::max)
    }

    /// Determinant by Gaussian elimination (partial pivoting on floats).
    pub fn det(&self) -> S {
        assert!(self.is_square(), "determinant of a non-square matrix");
        let n = self.rows;
        let mut a = self.to_rows();
        let ctx = self.data.first().map(Scalar::ctx);
        let Some(ctx) = ctx else {
            panic!("determinant of an empty matrix");
        };
        let mut det = S::one(&ctx);
        for col in 0..n {
            let Some(p) = pick_pivot(&a, col, col) else {
                return S::zero(&ctx);
            };
            if p != col {
                a.swap(p, col);
                det = det.neg();
            }
            let pivot = a[col][col].clone();
            det = det.mul(&pivot);
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].div(&pivot);
                for c in col..n {
                    let t = f.mul(&a[col][c]);
                    a[r][c] = a[r][c].sub(&t);
                }
            }
        }
        det
    }

    /// Solves `A x = b`. Singular (or, on floats, numerically singular)
    /// systems are reported as degenerate.
    pub fn solve(&self, b: &[S]) -> Result<Vec<S>> {
        assert!(self.is_square());
        let n = self.rows;
        assert_eq!(b.len(), n);
        let scale = self.max_magnitude();
        let mut a: Vec<Vec<S>> = self
            .to_rows()
            .into_iter()
            .zip(b)
            .map(|(mut row, bi)| {
                row.push(bi.clone());
                row
            })
            .collect();
        for col in 0..n {
            let p = pick_pivot(&a, col, col)
                .filter(|&p| !a[p][col].is_negligible(scale))
                .ok_or_else(|| Error::degenerate(None, "singular linear system"))?;
            a.swap(p, col);
            let pivot = a[col][col].clone();
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].div(&pivot);
                for c in col..=n {
                    let t = f.mul(&a[col][c]);
                    a[r][c] = a[r][c].sub(&t);
                }
            }
        }
        Ok((0..n).map(|i| a[i][n].div(&a[i][i])).collect())
    }

    pub fn inverse(&self) -> Result<Self> {
        assert!(self.is_square());
        let n = self.rows;
        let ctx = self.data[0].ctx();
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = vec![S::zero(&ctx); n];
            e[j] = S::one(&ctx);
            cols.push(self.solve(&e)?);
        }
        Ok(Matrix::from_columns(&cols))
    }

    /// Rank with the backend's negligibility rule relative to the largest
    /// entry.
    pub fn rank(&self) -> usize {
        let scale = self.max_magnitude();
        let mut a = self.to_rows();
        let mut rank = 0;
        for col in 0..self.cols {
            if rank == self.rows {
                break;
            }
            let Some(p) = pick_pivot(&a, rank, col).filter(|&p| !a[p][col].is_negligible(scale)) else {
                continue;
            };
            a.swap(p, rank);
            let pivot = a[rank][col].clone();
            for r in rank + 1..self.rows {
                if a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].div(&pivot);
                for c in col..self.cols {
                    let t = f.mul(&a[rank][c]);
                    a[r][c] = a[r][c].sub(&t);
                }
            }
            rank += 1;
        }
        rank
    }
}

fn pick_pivot<S: Scalar>(a: &[Vec<S>], from_row: usize, col: usize) -> Option<usize> {
    if S::EXACT {
        (from_row..a.len()).find(|&r| !a[r][col].is_zero())
    } else {
        let mut best: Option<(usize, f64)> = None;
        for (r, row) in a.iter().enumerate().skip(from_row) {
            let m = row[col].magnitude();
            if m > 0.0 && best.is_none_or(|(_, bm)| m > bm) {
                best = Some((r, m));
            }
        }
        best.map(|(r, _)| r)
    }
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    assert_eq!(a.len(), b.len());
    let mut acc = a[0].mul(&b[0]);
    for i in 1..a.len() {
        acc = acc.add(&a[i].mul(&b[i]));
    }
    acc
}

pub fn norm2(v: &[impl Scalar]) -> f64 {
    v.iter().map(|x| x.magnitude().powi(2)).sum::<f64>().sqrt()
}

/// General-position predicate for `k` vectors in `k`-space: exact nonzero
/// determinant, or `|det| > tol * prod ||v_i||` on floats.
pub fn independent<S: Scalar>(columns: &[Vec<S>]) -> bool {
    let det = Matrix::from_columns(columns).det();
    let scale: f64 = columns.iter().map(|c| norm2(c)).product();
    !det.is_negligible(scale)
}

/// Covector vanishing on `d` vectors of `(d+1)`-space: the signed maximal
/// minors, so that `h·x = det(v_1, …, v_d, x)`. The rational backend
/// returns the content-reduced integer representative.
pub fn nullspace_covector<S: Scalar>(points: &[Vec<S>]) -> Result<Vec<S>> {
    let d = points.len();
    if d == 0 || points.iter().any(|p| p.len() != d + 1) {
        return Err(Error::contract(format!(
            "nullspace_covector needs d vectors of length d+1, got {} vectors",
            d
        )));
    }
    let ctx = points[0][0].ctx();
    let h: Vec<S> = (0..=d)
        .map(|skip| {
            let minor: Vec<Vec<S>> = (0..=d)
                .filter(|&i| i != skip)
                .map(|i| points.iter().map(|p| p[i].clone()).collect())
                .collect();
            let m = Matrix::from_rows(minor).det();
            if (skip + d) % 2 == 1 {
                m.neg()
            } else {
                m
            }
        })
        .collect();
    let scale: f64 = points.iter().map(|p| norm2(p)).product();
    let degenerate = if S::EXACT {
        h.iter().all(Ring::is_zero)
    } else {
        norm2(&h) <= S::tol(&ctx) * scale
    };
    if degenerate {
        return Err(Error::degenerate(None, "input vectors are linearly dependent"));
    }
    Ok(S::reduce_content(h))
}
