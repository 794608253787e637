//! Dense matrices over a [`Field`] with exact Gaussian elimination.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gf::{Felt, Field};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("matrices belong to different fields")]
    FieldMismatch,
    #[error("matrix is singular")]
    Singular,
    #[error("linear system is inconsistent")]
    Inconsistent,
    #[error("invalid block shape: {0}")]
    BlockShape(String),
}

/// Uniform partition of a matrix into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockShape {
    pub block_rows: usize,
    pub block_cols: usize,
    pub height: usize,
    pub width: usize,
}

impl BlockShape {
    pub fn new(block_rows: usize, block_cols: usize, height: usize, width: usize) -> Self {
        BlockShape { block_rows, block_cols, height, width }
    }

    fn check(&self, m: &Mat) -> Result<(), MatError> {
        if self.block_rows * self.height != m.rows || self.block_cols * self.width != m.cols {
            return Err(MatError::BlockShape(format!(
                "{}x{} blocks of {}x{} do not tile {}x{}",
                self.block_rows, self.block_cols, self.height, self.width, m.rows, m.cols
            )));
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<Felt>,
    field: Field,
}

impl std::fmt::Debug for Mat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Mat {}x{}", self.rows, self.cols)?;
        f.write_str(&self.hex_dump())
    }
}

impl Mat {
    pub fn zeros(field: &Field, rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![Felt::ZERO; rows * cols], field: field.clone() }
    }

    pub fn identity(field: &Field, n: usize) -> Mat {
        let mut m = Mat::zeros(field, n, n);
        for i in 0..n {
            m.set(i, i, Felt::ONE);
        }
        m
    }

    pub fn from_vec(field: &Field, rows: usize, cols: usize, data: Vec<Felt>) -> Result<Mat, MatError> {
        if data.len() != rows * cols {
            return Err(MatError::Shape(format!("{} entries for {rows}x{cols}", data.len())));
        }
        Ok(Mat { rows, cols, data, field: field.clone() })
    }

    pub fn column(field: &Field, v: &[Felt]) -> Mat {
        Mat { rows: v.len(), cols: 1, data: v.to_vec(), field: field.clone() }
    }

    pub fn from_fn(field: &Field, rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Felt) -> Mat {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data, field: field.clone() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn data(&self) -> &[Felt] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Felt> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Felt {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Felt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn same_field(&self, other: &Mat) -> Result<(), MatError> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(MatError::FieldMismatch)
        }
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(&self.field, self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, b: &Mat) -> Result<Mat, MatError> {
        self.same_field(b)?;
        if self.cols != b.rows {
            return Err(MatError::Shape(format!("{}x{} times {}x{}", self.rows, self.cols, b.rows, b.cols)));
        }
        let f = &self.field;
        let mut out = Mat::zeros(f, self.rows, b.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let brow = &b.data[k * b.cols..(k + 1) * b.cols];
                for (o, &x) in orow.iter_mut().zip(brow) {
                    if !x.is_zero() {
                        *o = f.add(*o, f.mul(a, x));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, b: &Mat) -> Result<Mat, MatError> {
        self.same_field(b)?;
        if self.shape() != b.shape() {
            return Err(MatError::Shape(format!("{:?} plus {:?}", self.shape(), b.shape())));
        }
        let f = &self.field;
        let data = self.data.iter().zip(&b.data).map(|(&x, &y)| f.add(x, y)).collect();
        Ok(Mat { data, ..self.clone() })
    }

    pub fn sub(&self, b: &Mat) -> Result<Mat, MatError> {
        self.add(&b.neg())
    }

    pub fn neg(&self) -> Mat {
        let f = &self.field;
        Mat { data: self.data.iter().map(|&x| f.neg(x)).collect(), ..self.clone() }
    }

    pub fn scale(&self, c: Felt) -> Mat {
        let f = &self.field;
        Mat { data: self.data.iter().map(|&x| f.mul(c, x)).collect(), ..self.clone() }
    }

    pub fn hconcat(field: &Field, parts: &[&Mat]) -> Result<Mat, MatError> {
        let rows = parts.first().map_or(0, |m| m.rows);
        for m in parts {
            if m.rows != rows {
                return Err(MatError::Shape(format!("hconcat of {} and {} rows", rows, m.rows)));
            }
            if &m.field != field {
                return Err(MatError::FieldMismatch);
            }
        }
        let cols = parts.iter().map(|m| m.cols).sum();
        let mut out = Mat::zeros(field, rows, cols);
        let mut off = 0;
        for m in parts {
            for i in 0..rows {
                out.data[i * cols + off..i * cols + off + m.cols]
                    .copy_from_slice(&m.data[i * m.cols..(i + 1) * m.cols]);
            }
            off += m.cols;
        }
        Ok(out)
    }

    pub fn vconcat(field: &Field, parts: &[&Mat]) -> Result<Mat, MatError> {
        let cols = parts.first().map_or(0, |m| m.cols);
        let mut data = Vec::new();
        for m in parts {
            if m.cols != cols {
                return Err(MatError::Shape(format!("vconcat of {} and {} columns", cols, m.cols)));
            }
            if &m.field != field {
                return Err(MatError::FieldMismatch);
            }
            data.extend_from_slice(&m.data);
        }
        let rows = parts.iter().map(|m| m.rows).sum();
        Ok(Mat { rows, cols, data, field: field.clone() })
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Mat, MatError> {
        if rows.iter().any(|&i| i >= self.rows) || cols.iter().any(|&j| j >= self.cols) {
            return Err(MatError::Shape("submatrix index out of range".into()));
        }
        Ok(Mat::from_fn(&self.field, rows.len(), cols.len(), |i, j| self.get(rows[i], cols[j])))
    }

    pub fn kron(&self, b: &Mat) -> Result<Mat, MatError> {
        self.same_field(b)?;
        let f = &self.field;
        Ok(Mat::from_fn(f, self.rows * b.rows, self.cols * b.cols, |i, j| {
            f.mul(self.get(i / b.rows, j / b.cols), b.get(i % b.rows, j % b.cols))
        }))
    }

    /// A ⊠ B: block (i,j) of the result is A ⊗ B_{i,j} under `shape`.
    pub fn boxtimes(&self, b: &Mat, shape: BlockShape) -> Result<Mat, MatError> {
        self.same_field(b)?;
        shape.check(b)?;
        let f = &self.field;
        let (ar, ac) = self.shape();
        let (bh, bw) = (ar * shape.height, ac * shape.width);
        Ok(Mat::from_fn(f, shape.block_rows * bh, shape.block_cols * bw, |i, j| {
            let (bi, bj) = (i / bh, j / bw);
            let (ii, jj) = (i % bh, j % bw);
            let a = self.get(ii / shape.height, jj / shape.width);
            f.mul(a, b.get(bi * shape.height + ii % shape.height, bj * shape.width + jj % shape.width))
        }))
    }

    /// Row echelon reduction of [self | rhs]; returns pivot columns.
    fn eliminate(a: &mut Mat, mut rhs: Option<&mut Mat>, reduced: bool) -> Vec<usize> {
        let f = a.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| !a.get(i, c).is_zero()) else { continue };
            if p != r {
                a.swap_rows(p, r);
                if let Some(b) = rhs.as_deref_mut() {
                    b.swap_rows(p, r);
                }
            }
            let inv = f.inv(a.get(r, c)).expect("nonzero pivot");
            a.scale_row(r, inv);
            if let Some(b) = rhs.as_deref_mut() {
                b.scale_row(r, inv);
            }
            let start = if reduced { 0 } else { r + 1 };
            for i in start..a.rows {
                if i == r {
                    continue;
                }
                let factor = a.get(i, c);
                if factor.is_zero() {
                    continue;
                }
                let nf = f.neg(factor);
                a.axpy_row(i, r, nf);
                if let Some(b) = rhs.as_deref_mut() {
                    b.axpy_row(i, r, nf);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    fn scale_row(&mut self, i: usize, s: Felt) {
        let Mat { cols, data, field, .. } = self;
        for x in &mut data[i * *cols..(i + 1) * *cols] {
            *x = field.mul(*x, s);
        }
    }

    /// row[dst] += s · row[src]
    fn axpy_row(&mut self, dst: usize, src: usize, s: Felt) {
        let Mat { cols, data, field, .. } = self;
        let c = *cols;
        for k in 0..c {
            let v = data[src * c + k];
            if !v.is_zero() {
                data[dst * c + k] = field.add(data[dst * c + k], field.mul(s, v));
            }
        }
    }

    pub fn rank(&self) -> usize {
        let mut a = self.clone();
        Mat::eliminate(&mut a, None, false).len()
    }

    pub fn det(&self) -> Result<Felt, MatError> {
        if !self.is_square() {
            return Err(MatError::Shape(format!("det of {}x{}", self.rows, self.cols)));
        }
        let f = self.field.clone();
        let mut a = self.clone();
        let mut det = Felt::ONE;
        for c in 0..a.cols {
            let Some(p) = (c..a.rows).find(|&i| !a.get(i, c).is_zero()) else { return Ok(Felt::ZERO) };
            if p != c {
                a.swap_rows(p, c);
                det = f.neg(det);
            }
            let piv = a.get(c, c);
            det = f.mul(det, piv);
            let inv = f.inv(piv).expect("nonzero pivot");
            for i in c + 1..a.rows {
                let factor = a.get(i, c);
                if !factor.is_zero() {
                    a.axpy_row(i, c, f.neg(f.mul(factor, inv)));
                }
            }
        }
        Ok(det)
    }

    pub fn is_invertible(&self) -> bool {
        self.is_square() && self.rank() == self.rows
    }

    pub fn inverse(&self) -> Result<Mat, MatError> {
        if !self.is_square() {
            return Err(MatError::Shape(format!("inverse of {}x{}", self.rows, self.cols)));
        }
        self.solve(&Mat::identity(&self.field, self.rows))
    }

    /// Unique solution X of A·X = B. A may be tall; the system must then be
    /// consistent and A must have full column rank.
    pub fn solve(&self, b: &Mat) -> Result<Mat, MatError> {
        self.same_field(b)?;
        if b.rows != self.rows {
            return Err(MatError::Shape(format!("solve {}x{} against {} rows", self.rows, self.cols, b.rows)));
        }
        let mut a = self.clone();
        let mut x = b.clone();
        let pivots = Mat::eliminate(&mut a, Some(&mut x), true);
        if pivots.len() < self.cols {
            return Err(MatError::Singular);
        }
        if (pivots.len()..x.rows).any(|i| (0..x.cols).any(|j| !x.get(i, j).is_zero())) {
            return Err(MatError::Inconsistent);
        }
        let rows: Vec<usize> = (0..self.cols).collect();
        let cols: Vec<usize> = (0..x.cols).collect();
        x.submatrix(&rows, &cols)
    }

    /// Row-major hex dump of polynomial-basis element indices.
    pub fn hex_dump(&self) -> String {
        let width = format!("{:x}", self.field.q() - 1).len();
        let mut s = String::new();
        for i in 0..self.rows {
            let line: Vec<String> =
                (0..self.cols).map(|j| format!("{:0width$x}", self.field.index(self.get(i, j)))).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}
