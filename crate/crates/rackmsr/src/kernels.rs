//! Structured matrix builders: moment vectors, kernel maps φ_b, blow-ups Ψ,
//! selection matrices R_{a,z} and row projections Q_w.

use thiserror::Error;

use crate::gf::{Felt, Field};
use crate::matrix::{BlockShape, Mat, MatError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("{what} index {got} out of range (limit {limit})")]
    Index { what: &'static str, got: usize, limit: usize },
    #[error("expected {want} evaluation points, got {got}")]
    Points { want: usize, got: usize },
    #[error("invalid kernel context: {0}")]
    Context(String),
    #[error("inconsistent projection parameters u={u}, v={v}, r={r}")]
    Projection { u: usize, v: usize, r: usize },
    #[error(transparent)]
    Mat(#[from] MatError),
}

fn check_index(what: &'static str, got: usize, limit: usize) -> Result<(), KernelError> {
    if got < limit {
        Ok(())
    } else {
        Err(KernelError::Index { what, got, limit })
    }
}

/// (1, x, …, x^{t−1})ᵀ
pub fn moment_vector(field: &Field, x: Felt, t: usize) -> Mat {
    let mut v = Vec::with_capacity(t);
    let mut cur = Felt::ONE;
    for _ in 0..t {
        v.push(cur);
        cur = field.mul(cur, x);
    }
    Mat::column(field, &v)
}

/// φ_b^{(t)}(x_0..x_{s−1}) as an st × s matrix of t×1 blocks.
///
/// Block (j,j) is L(x_j). For b < s, block (b,j) is −L(x_j) for j ≠ b.
/// b = s gives the block-diagonal variant.
pub fn phi(field: &Field, b: usize, t: usize, xs: &[Felt]) -> Result<Mat, KernelError> {
    let s = xs.len();
    check_index("phi row", b, s + 1)?;
    let mut out = Mat::zeros(field, s * t, s);
    for (j, &x) in xs.iter().enumerate() {
        let l = moment_vector(field, x, t);
        for k in 0..t {
            out.set(j * t + k, j, l.get(k, 0));
            if b < s && j != b {
                out.set(b * t + k, j, field.neg(l.get(k, 0)));
            }
        }
    }
    Ok(out)
}

/// s × s diagonal matrix with the given entries.
pub fn diag(field: &Field, xs: &[Felt]) -> Mat {
    let mut m = Mat::zeros(field, xs.len(), xs.len());
    for (i, &x) in xs.iter().enumerate() {
        m.set(i, i, x);
    }
    m
}

/// Sub-packetization context: digits in base s̄, ñ of them.
#[derive(Debug, Clone)]
pub struct KernelCtx {
    pub s: usize,
    pub n_tilde: usize,
    pub l: usize,
    pub l_bar: usize,
    pub field: Field,
}

impl KernelCtx {
    pub fn new(field: &Field, s: usize, n_tilde: usize) -> Result<KernelCtx, KernelError> {
        if s == 0 || n_tilde == 0 {
            return Err(KernelError::Context(format!("s̄={s}, ñ={n_tilde}")));
        }
        let l = s
            .checked_pow(n_tilde as u32)
            .filter(|&l| l <= 1 << 16)
            .ok_or_else(|| KernelError::Context(format!("l = {s}^{n_tilde} is too large")))?;
        Ok(KernelCtx { s, n_tilde, l, l_bar: l / s, field: field.clone() })
    }

    /// Digit `a` of coordinate `i`, least significant first.
    pub fn digit(&self, i: usize, a: usize) -> usize {
        i / self.s.pow(a as u32) % self.s
    }

    /// Ψ_{ñ,a}(U) = I_{s^{ñ−a−1}} ⊗ (I_{s^a} ⊠ U) for an s×s block matrix U.
    pub fn blowup(&self, a: usize, u: &Mat) -> Result<Mat, KernelError> {
        check_index("digit", a, self.n_tilde)?;
        let s = self.s;
        if !u.rows().is_multiple_of(s) || !u.cols().is_multiple_of(s) {
            return Err(
                MatError::BlockShape(format!("{}x{} is not an {s}x{s} block matrix", u.rows(), u.cols())).into()
            );
        }
        let shape = BlockShape::new(s, s, u.rows() / s, u.cols() / s);
        let f = &self.field;
        let inner = Mat::identity(f, s.pow(a as u32)).boxtimes(u, shape)?;
        Ok(Mat::identity(f, s.pow((self.n_tilde - a - 1) as u32)).kron(&inner)?)
    }

    /// Ψ_{ñ,a}(diag(xs)).
    pub fn blowup_diag(&self, a: usize, xs: &[Felt]) -> Result<Mat, KernelError> {
        if xs.len() != self.s {
            return Err(KernelError::Points { want: self.s, got: xs.len() });
        }
        self.blowup(a, &diag(&self.field, xs))
    }

    /// Diagonal of Ψ_{ñ,a}(diag(xs)) without building the matrix.
    pub fn blowup_diag_entries(&self, a: usize, xs: &[Felt]) -> Vec<Felt> {
        (0..self.l).map(|i| xs[self.digit(i, a)]).collect()
    }

    /// Horizontal concatenation of Ψ_{ñ,a}(φ_b^{(m)}(points)) over `terms`.
    pub fn concat_blowup(&self, a: usize, m: usize, terms: &[(usize, Vec<Felt>)]) -> Result<Mat, KernelError> {
        let blocks =
            terms.iter().map(|(b, xs)| self.blowup(a, &phi(&self.field, *b, m, xs)?)).collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&Mat> = blocks.iter().collect();
        Ok(Mat::hconcat(&self.field, &refs)?)
    }

    /// R_{a,z}: l̄ × l. For z < s it keeps coordinates whose digit a equals z;
    /// z = s sums over that digit.
    pub fn repair_matrix(&self, a: usize, z: usize) -> Result<Mat, KernelError> {
        check_index("digit", a, self.n_tilde)?;
        check_index("selector", z, self.s + 1)?;
        let f = &self.field;
        let s = self.s;
        let mut e = Mat::zeros(f, 1, s);
        for j in 0..s {
            if z == s || j == z {
                e.set(0, j, Felt::ONE);
            }
        }
        let low = e.kron(&Mat::identity(f, s.pow(a as u32)))?;
        Ok(Mat::identity(f, s.pow((self.n_tilde - a - 1) as u32)).kron(&low)?)
    }

    /// Ψ̄: the blow-up one digit shorter, used after R_{a,·} removes digit a.
    pub fn reduced(&self) -> Result<KernelCtx, KernelError> {
        KernelCtx::new(&self.field, self.s, self.n_tilde - 1)
    }
}

/// Horizontal concatenation of φ_b^{(m)}(points) over `terms`.
pub fn concat_phi(field: &Field, m: usize, terms: &[(usize, Vec<Felt>)]) -> Result<Mat, KernelError> {
    let blocks = terms.iter().map(|(b, xs)| phi(field, *b, m, xs)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&Mat> = blocks.iter().collect();
    Ok(Mat::hconcat(field, &refs)?)
}

/// Rows kept by Q_w: r̄ for w < u−v, r̄−1 otherwise.
pub fn projection_height(u: usize, r: usize, w: usize) -> usize {
    (w..r).step_by(u).count()
}

/// Q_w: rows w, u+w, 2u+w, … of I_r.
pub fn projection(field: &Field, u: usize, v: usize, r: usize, w: usize) -> Result<Mat, KernelError> {
    if u == 0 || v >= u || !(r + v).is_multiple_of(u) || r + v < u {
        return Err(KernelError::Projection { u, v, r });
    }
    check_index("projection", w, u)?;
    let rows: Vec<usize> = (w..r).step_by(u).collect();
    Ok(Mat::identity(field, r).submatrix(&rows, &(0..r).collect::<Vec<_>>())?)
}
