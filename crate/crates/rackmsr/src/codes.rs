//! Parity-check assembly, systematic encoding, erasure decoding and folding.

use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{Felt, Field, FieldSpec};
use crate::kernels::{phi, KernelCtx, KernelError};
use crate::lambdas::{verify_lambdas, LambdaError, LambdaSet};
use crate::matrix::{Mat, MatError};
use crate::params::CodeParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodeError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Lambda(#[from] LambdaError),
    #[error("coefficients failed verification: {0}")]
    Unverified(String),
    #[error("word shape mismatch: {0}")]
    Shape(String),
    #[error("{got} erasures exceed r = {r}")]
    TooManyErasures { got: usize, r: usize },
    #[error("node {0} is not an exposed node")]
    BadNode(usize),
    #[error("fold index w={w} outside [0, {u})")]
    BadFold { w: usize, u: usize },
    #[error("parity submatrix for nodes {0:?} is singular")]
    Singular(Vec<usize>),
    #[error("codeword file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword {
    /// n nodes of l symbols each.
    pub nodes: Vec<Vec<Felt>>,
}

impl Codeword {
    pub fn zeros(params: &CodeParams) -> Codeword {
        Codeword { nodes: vec![vec![Felt::ZERO; params.l]; params.n] }
    }

    pub fn rack(&self, u: usize, rack: usize) -> &[Vec<Felt>] {
        &self.nodes[rack * u..(rack + 1) * u]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldedView {
    pub w: usize,
    /// One folded vector c̄_i(w) per exposed rack.
    pub nodes: Vec<Vec<Felt>>,
    /// Folded parity blocks H̄_i, r̄·l × l or (r̄−1)·l × l.
    pub parity: Vec<Mat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepMode {
    Exhaustive,
    Sample { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub total_patterns: u128,
    pub checked: usize,
    pub failures: Vec<Vec<usize>>,
}

impl SweepReport {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

pub struct RackCode {
    pub params: CodeParams,
    pub field: Field,
    pub lambdas: LambdaSet,
    pub ctx: KernelCtx,
    /// Parent-code parity blocks; only the first n are exposed.
    blocks: Vec<Mat>,
    encoder: OnceLock<Result<Mat, CodeError>>,
}

impl std::fmt::Debug for RackCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RackCode").field("params", &self.params).field("field", &self.field).finish()
    }
}

fn binom(n: usize, k: usize) -> u128 {
    crate::params::binom(n as u64, k as u64)
}

/// All k-subsets of [n] in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else { break };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
    out
}

fn patterns(n: usize, k: usize, mode: SweepMode) -> Vec<Vec<usize>> {
    match mode {
        SweepMode::Sample { count, seed } if binom(n, k) > count as u128 => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count)
                .map(|_| {
                    let mut v = sample(&mut rng, n, k).into_vec();
                    v.sort_unstable();
                    v
                })
                .collect()
        }
        _ => subsets(n, k),
    }
}

impl RackCode {
    pub fn build(params: &CodeParams, field: &Field, lambdas: &LambdaSet) -> Result<RackCode, CodeError> {
        let verified = verify_lambdas(params, field, lambdas)?;
        if !verified.all() {
            return Err(CodeError::Unverified(format!("{verified:?}")));
        }
        RackCode::build_unchecked(params, field, lambdas)
    }

    /// Assembles the parity blocks without checking the coefficients. Used to
    /// inspect how a bad coefficient set fails.
    pub fn build_unchecked(params: &CodeParams, field: &Field, lambdas: &LambdaSet) -> Result<RackCode, CodeError> {
        let need = params.parent_n_bar * params.s;
        if lambdas.lambdas.len() != need {
            return Err(CodeError::Shape(format!("{} coefficients, expected {need}", lambdas.lambdas.len())));
        }
        let ctx = KernelCtx::new(field, params.s, params.n_tilde)?;
        let mut blocks = Vec::with_capacity(params.parent_n_bar * params.u);
        for rack in 0..params.parent_n_bar {
            let (a, b) = params.rack_position(rack);
            let xs = lambdas.rack(params.s, rack);
            for g in 0..params.u {
                let tg = field.pow(lambdas.theta, g as i64).expect("nonzero θ");
                let pts: Vec<Felt> = xs.iter().map(|&x| field.mul(tg, x)).collect();
                blocks.push(ctx.blowup(a, &phi(field, b, params.r, &pts)?)?);
            }
        }
        Ok(RackCode {
            params: params.clone(),
            field: field.clone(),
            lambdas: lambdas.clone(),
            ctx,
            blocks,
            encoder: OnceLock::new(),
        })
    }

    /// Parity block H_i of an exposed node.
    pub fn block(&self, node: usize) -> &Mat {
        &self.blocks[node]
    }

    pub fn blocks(&self) -> &[Mat] {
        &self.blocks[..self.params.n]
    }

    pub fn check_word(&self, word: &Codeword) -> Result<(), CodeError> {
        if word.nodes.len() != self.params.n || word.nodes.iter().any(|c| c.len() != self.params.l) {
            return Err(CodeError::Shape(format!("expected {} nodes of {} symbols", self.params.n, self.params.l)));
        }
        Ok(())
    }

    fn accumulate(&self, acc: &mut [Felt], h: &Mat, c: &[Felt]) {
        let f = &self.field;
        let cols = h.cols();
        for (i, a) in acc.iter_mut().enumerate() {
            let row = &h.data()[i * cols..(i + 1) * cols];
            for (&x, &y) in row.iter().zip(c) {
                if !x.is_zero() && !y.is_zero() {
                    *a = f.add(*a, f.mul(x, y));
                }
            }
        }
    }

    /// Σ H_i c_i over exposed nodes.
    pub fn parity_residual(&self, word: &Codeword) -> Result<Mat, CodeError> {
        self.check_word(word)?;
        let mut acc = vec![Felt::ZERO; self.params.r * self.params.l];
        for (h, c) in self.blocks().iter().zip(&word.nodes) {
            self.accumulate(&mut acc, h, c);
        }
        Ok(Mat::column(&self.field, &acc))
    }

    pub fn is_codeword(&self, word: &Codeword) -> Result<bool, CodeError> {
        Ok(self.parity_residual(word)?.is_zero())
    }

    fn encoder(&self) -> Result<&Mat, CodeError> {
        self.encoder
            .get_or_init(|| {
                let nodes: Vec<usize> = (self.params.k..self.params.n).collect();
                let refs: Vec<&Mat> = nodes.iter().map(|&i| &self.blocks[i]).collect();
                let p = Mat::hconcat(&self.field, &refs)?;
                p.inverse().map_err(|e| match e {
                    MatError::Singular => CodeError::Singular(nodes),
                    e => e.into(),
                })
            })
            .as_ref()
            .map_err(Clone::clone)
    }

    /// Systematic encoding: the message fills nodes 0..k.
    pub fn encode(&self, message: &[Felt]) -> Result<Codeword, CodeError> {
        let (k, l) = (self.params.k, self.params.l);
        if message.len() != k * l {
            return Err(CodeError::Shape(format!("message has {} symbols, expected {}", message.len(), k * l)));
        }
        let mut acc = vec![Felt::ZERO; self.params.r * l];
        for (i, chunk) in message.chunks(l).enumerate() {
            self.accumulate(&mut acc, &self.blocks[i], chunk);
        }
        let rhs = Mat::column(&self.field, &acc).neg();
        let parity = self.encoder()?.matmul(&rhs)?.into_data();
        let mut nodes: Vec<Vec<Felt>> = message.chunks(l).map(<[Felt]>::to_vec).collect();
        nodes.extend(parity.chunks(l).map(<[Felt]>::to_vec));
        Ok(Codeword { nodes })
    }

    pub fn message(&self, word: &Codeword) -> Vec<Felt> {
        word.nodes[..self.params.k].concat()
    }

    pub fn random_message(&self, rng: &mut impl rand::Rng) -> Vec<Felt> {
        let q = self.field.q();
        (0..self.params.k * self.params.l).map(|_| self.field.from_index(rng.gen_range(0..q)).unwrap()).collect()
    }

    fn check_nodes(&self, nodes: &[usize]) -> Result<Vec<usize>, CodeError> {
        let mut f = nodes.to_vec();
        f.sort_unstable();
        f.dedup();
        if let Some(&bad) = f.iter().find(|&&i| i >= self.params.n) {
            return Err(CodeError::BadNode(bad));
        }
        Ok(f)
    }

    /// Recovers the erased nodes from the survivors.
    pub fn erase_decode(&self, word: &Codeword, erased: &[usize]) -> Result<Codeword, CodeError> {
        self.check_word(word)?;
        let erased = self.check_nodes(erased)?;
        if erased.len() > self.params.r {
            return Err(CodeError::TooManyErasures { got: erased.len(), r: self.params.r });
        }
        if erased.is_empty() {
            return Ok(word.clone());
        }
        let l = self.params.l;
        let mut acc = vec![Felt::ZERO; self.params.r * l];
        for i in (0..self.params.n).filter(|i| !erased.contains(i)) {
            self.accumulate(&mut acc, &self.blocks[i], &word.nodes[i]);
        }
        let refs: Vec<&Mat> = erased.iter().map(|&i| &self.blocks[i]).collect();
        let a = Mat::hconcat(&self.field, &refs)?;
        let x = a.solve(&Mat::column(&self.field, &acc).neg()).map_err(|e| match e {
            MatError::Singular => CodeError::Singular(erased.clone()),
            e => e.into(),
        })?;
        let mut out = word.clone();
        for (j, &i) in erased.iter().enumerate() {
            out.nodes[i] = x.data()[j * l..(j + 1) * l].to_vec();
        }
        Ok(out)
    }

    /// Invertibility of [H_i]_{i∈F} for r-subsets F of exposed nodes.
    pub fn mds_sweep(&self, mode: SweepMode) -> SweepReport {
        let (n, r) = (self.params.n, self.params.r);
        let pats = patterns(n, r, mode);
        let failures = pats
            .par_iter()
            .filter(|f| {
                let refs: Vec<&Mat> = f.iter().map(|&i| &self.blocks[i]).collect();
                !Mat::hconcat(&self.field, &refs).map(|m| m.is_invertible()).unwrap_or(false)
            })
            .cloned()
            .collect();
        SweepReport { total_patterns: binom(n, r), checked: pats.len(), failures }
    }

    fn check_w(&self, w: usize) -> Result<(), CodeError> {
        if w >= self.params.u {
            return Err(CodeError::BadFold { w, u: self.params.u });
        }
        Ok(())
    }

    /// H̄_i for an exposed rack at fold index w.
    pub fn folded_block(&self, rack: usize, w: usize) -> Result<Mat, CodeError> {
        self.check_w(w)?;
        let f = &self.field;
        let (a, b) = self.params.rack_position(rack);
        let pts: Vec<Felt> =
            self.lambdas.rack(self.params.s, rack).iter().map(|&x| f.pow(x, self.params.u as i64).unwrap()).collect();
        Ok(self.ctx.blowup(a, &phi(f, b, self.params.folded_rows(w), &pts)?)?)
    }

    /// Diagonal of Ψ_a(diag(λ_rack^w)).
    pub fn fold_scaling(&self, rack: usize, w: usize) -> Vec<Felt> {
        let (a, _) = self.params.rack_position(rack);
        let pts: Vec<Felt> =
            self.lambdas.rack(self.params.s, rack).iter().map(|&x| self.field.pow(x, w as i64).unwrap()).collect();
        self.ctx.blowup_diag_entries(a, &pts)
    }

    /// Σ_g θ^{gw} c_{rack·u+g}
    pub fn twisted_sum(&self, nodes: &[Vec<Felt>], w: usize) -> Vec<Felt> {
        let f = &self.field;
        let mut acc = vec![Felt::ZERO; self.params.l];
        for (g, c) in nodes.iter().enumerate() {
            let coef = f.pow(self.lambdas.theta, (g * w) as i64).unwrap();
            for (a, &x) in acc.iter_mut().zip(c) {
                *a = f.add(*a, f.mul(coef, x));
            }
        }
        acc
    }

    pub fn fold(&self, word: &Codeword, w: usize) -> Result<FoldedView, CodeError> {
        self.check_word(word)?;
        self.check_w(w)?;
        let u = self.params.u;
        let mut nodes = Vec::with_capacity(self.params.n_bar);
        let mut parity = Vec::with_capacity(self.params.n_bar);
        for rack in 0..self.params.n_bar {
            let sum = self.twisted_sum(word.rack(u, rack), w);
            let scale = self.fold_scaling(rack, w);
            nodes.push(sum.iter().zip(&scale).map(|(&x, &d)| self.field.mul(x, d)).collect());
            parity.push(self.folded_block(rack, w)?);
        }
        Ok(FoldedView { w, nodes, parity })
    }

    pub fn folded_residual(&self, view: &FoldedView) -> Mat {
        let rows = view.parity.first().map_or(0, Mat::rows);
        let mut acc = vec![Felt::ZERO; rows];
        for (h, c) in view.parity.iter().zip(&view.nodes) {
            self.accumulate(&mut acc, h, c);
        }
        Mat::column(&self.field, &acc)
    }

    /// Invertibility of every r̄- (or (r̄−1)-) subset of folded parity blocks.
    pub fn folded_mds_check(&self, w: usize, mode: SweepMode) -> Result<SweepReport, CodeError> {
        let n_bar = self.params.n_bar;
        let size = self.params.folded_rows(w);
        let blocks = (0..n_bar).map(|i| self.folded_block(i, w)).collect::<Result<Vec<_>, _>>()?;
        if size == 0 {
            return Ok(SweepReport { total_patterns: 0, checked: 0, failures: vec![] });
        }
        let pats = patterns(n_bar, size, mode);
        let failures = pats
            .par_iter()
            .filter(|f| {
                let refs: Vec<&Mat> = f.iter().map(|&i| &blocks[i]).collect();
                !Mat::hconcat(&self.field, &refs).map(|m| m.is_invertible()).unwrap_or(false)
            })
            .cloned()
            .collect();
        Ok(SweepReport { total_patterns: binom(n_bar, size), checked: pats.len(), failures })
    }

    /// SHA-256 over the exposed parity blocks' element indices.
    pub fn parity_hash(&self) -> String {
        let mut h = Sha256::new();
        for b in self.blocks() {
            h.update((b.rows() as u32).to_le_bytes());
            h.update((b.cols() as u32).to_le_bytes());
            for &x in b.data() {
                h.update(self.field.index(x).to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    pub fn params_hash(&self) -> String {
        let json = serde_json::to_vec(&self.params.raw()).expect("params serialize");
        hex::encode(&Sha256::digest(json)[..8])
    }

    /// Header line, then one line of hex element indices per node.
    pub fn write_codeword(&self, word: &Codeword) -> Result<String, CodeError> {
        self.check_word(word)?;
        let spec = serde_json::to_string(&self.field.spec()).expect("field spec");
        let mut out = format!("rackmsr-codeword v1 params={} field={}\n", self.params_hash(), spec);
        for node in &word.nodes {
            let line: Vec<String> = node.iter().map(|&x| format!("{:x}", self.field.index(x))).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        Ok(out)
    }

    pub fn read_codeword(&self, text: &str) -> Result<Codeword, CodeError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| CodeError::Format("empty input".into()))?;
        let rest =
            header.strip_prefix("rackmsr-codeword v1 params=").ok_or_else(|| CodeError::Format("bad header".into()))?;
        let (hash, field) = rest.split_once(" field=").ok_or_else(|| CodeError::Format("bad header".into()))?;
        if hash != self.params_hash() {
            return Err(CodeError::Format("params hash mismatch".into()));
        }
        let spec: FieldSpec = serde_json::from_str(field).map_err(|e| CodeError::Format(e.to_string()))?;
        if spec != self.field.spec() {
            return Err(CodeError::Format("field mismatch".into()));
        }
        let nodes = lines
            .map(|line| {
                line.split_whitespace()
                    .map(|tok| {
                        let v = u32::from_str_radix(tok, 16).map_err(|e| CodeError::Format(e.to_string()))?;
                        self.field.from_index(v).map_err(|e| CodeError::Format(e.to_string()))
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let word = Codeword { nodes };
        self.check_word(&word)?;
        Ok(word)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lambdas::explicit_lambdas;
    use crate::params::Theorem;

    fn example() -> RackCode {
        let p = CodeParams::derive(8, 4, 2, 3, Theorem::T1).unwrap();
        let f = Field::new(3, 3, Some(&[1, 2, 0, 1])).unwrap();
        let lam = explicit_lambdas(&p, &f).unwrap();
        RackCode::build(&p, &f, &lam).unwrap()
    }

    #[test]
    fn subsets_enumerate() {
        assert_eq!(subsets(4, 2).len(), 6);
        assert_eq!(subsets(8, 4).len(), 70);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
    }

    #[test]
    fn zero_message_encodes_to_zero() {
        let code = example();
        let w = code.encode(&[Felt::ZERO; 16]).unwrap();
        assert_eq!(w, Codeword::zeros(&code.params));
    }

    #[test]
    fn flipped_symbol_breaks_parity() {
        let code = example();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let msg = code.random_message(&mut rng);
        let mut w = code.encode(&msg).unwrap();
        assert!(code.is_codeword(&w).unwrap());
        assert_eq!(code.message(&w), msg);
        w.nodes[5][2] = code.field.add(w.nodes[5][2], Felt::ONE);
        assert!(!code.is_codeword(&w).unwrap());
    }

    #[test]
    fn decode_named_pattern() {
        let code = example();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = code.encode(&code.random_message(&mut rng)).unwrap();
        let mut damaged = w.clone();
        for &i in &[0, 3, 4, 5] {
            damaged.nodes[i] = vec![Felt::ZERO; 4];
        }
        assert_eq!(code.erase_decode(&damaged, &[0, 3, 4, 5]).unwrap(), w);
        assert_eq!(code.erase_decode(&w, &[]).unwrap(), w);
        assert!(matches!(code.erase_decode(&w, &[0, 1, 2, 3, 4]), Err(CodeError::TooManyErasures { .. })));
    }

    #[test]
    fn codeword_file_round_trip() {
        let code = example();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = code.encode(&code.random_message(&mut rng)).unwrap();
        let text = code.write_codeword(&w).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert_eq!(code.read_codeword(&text).unwrap(), w);
    }
}
