//! Randomized checks of the structural identities the construction relies on.
//!
//! Each suite draws its own instances from a seeded generator and reports
//! every mismatch by a short description of the instance.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codes::RackCode;
use crate::gf::{Felt, Field};
use crate::kernels::{concat_phi, diag, moment_vector, phi, projection, KernelCtx, KernelError};
use crate::matrix::{BlockShape, Mat};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub cases: usize,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str) -> SuiteReport {
        SuiteReport { name: name.to_string(), cases: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }
}

fn fields() -> Vec<Field> {
    [(7, 1), (13, 1), (3, 3), (5, 2), (2, 4)]
        .iter()
        .map(|&(p, m)| Field::new(p, m, None).expect("small field"))
        .collect()
}

fn random_elem(f: &Field, rng: &mut ChaCha8Rng) -> Felt {
    f.from_index(rng.gen_range(0..f.q())).expect("in range")
}

fn random_nonzero(f: &Field, rng: &mut ChaCha8Rng) -> Felt {
    f.xi_pow(rng.gen_range(0..f.q() as i64 - 1))
}

fn random_mat(f: &Field, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat {
    Mat::from_fn(f, rows, cols, |_, _| random_elem(f, rng))
}

fn random_points(f: &Field, s: usize, rng: &mut ChaCha8Rng) -> Vec<Felt> {
    (0..s).map(|_| random_nonzero(f, rng)).collect()
}

/// Random (field, ctx) with s̄ ∈ [1,3], ñ ∈ [min_n, 3].
fn random_ctx(fields: &[Field], min_s: usize, min_n: usize, rng: &mut ChaCha8Rng) -> KernelCtx {
    let f = fields.choose(rng).expect("nonempty");
    let s = rng.gen_range(min_s..=3);
    let n = rng.gen_range(min_n..=3);
    KernelCtx::new(f, s, n).expect("small context")
}

fn block(m: &Mat, shape: BlockShape, i: usize, j: usize) -> Mat {
    let rows: Vec<usize> = (i * shape.height..(i + 1) * shape.height).collect();
    let cols: Vec<usize> = (j * shape.width..(j + 1) * shape.width).collect();
    m.submatrix(&rows, &cols).expect("block in range")
}

/// Block (i,j) of Ψ_a(U) is U(i_a, j_a) when the other digits agree, else 0.
pub fn blowup_entries(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("blowup_entries");
    for _ in 0..instances {
        let ctx = random_ctx(&fields, 1, 1, &mut rng);
        let (s, f) = (ctx.s, ctx.field.clone());
        let a = rng.gen_range(0..ctx.n_tilde);
        let (bh, bw) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
        let u = random_mat(&f, s * bh, s * bw, &mut rng);
        let big = ctx.blowup(a, &u)?;
        let ushape = BlockShape::new(s, s, bh, bw);
        let bshape = BlockShape::new(ctx.l, ctx.l, bh, bw);
        let zero = Mat::zeros(&f, bh, bw);
        let mut ok = true;
        for i in 0..ctx.l {
            for j in 0..ctx.l {
                let others_agree = (0..ctx.n_tilde).all(|z| z == a || ctx.digit(i, z) == ctx.digit(j, z));
                let want =
                    if others_agree { block(&u, ushape, ctx.digit(i, a), ctx.digit(j, a)) } else { zero.clone() };
                ok &= block(&big, bshape, i, j) == want;
            }
        }
        rep.record(ok, || format!("s={s} n={} a={a} block={bh}x{bw} q={}", ctx.n_tilde, f.q()));
    }
    Ok(rep)
}

/// Ψ_a(U₀)Ψ_a(U₁) = Ψ_a(U₀U₁).
pub fn blowup_product(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("blowup_product");
    for _ in 0..instances {
        let ctx = random_ctx(&fields, 1, 1, &mut rng);
        let (s, f) = (ctx.s, ctx.field.clone());
        let a = rng.gen_range(0..ctx.n_tilde);
        let (h, m, w) = (rng.gen_range(1..=2), rng.gen_range(1..=2), rng.gen_range(1..=2));
        let u0 = random_mat(&f, s * h, s * m, &mut rng);
        let u1 = random_mat(&f, s * m, s * w, &mut rng);
        let lhs = ctx.blowup(a, &u0)?.matmul(&ctx.blowup(a, &u1)?)?;
        let rhs = ctx.blowup(a, &u0.matmul(&u1)?)?;
        rep.record(lhs == rhs, || format!("s={s} n={} a={a} blocks {h}x{m}x{w} q={}", ctx.n_tilde, f.q()));
    }
    Ok(rep)
}

fn moments(ctx: &KernelCtx, x: Felt, t: usize) -> Result<Mat, KernelError> {
    Ok(Mat::identity(&ctx.field, ctx.l_bar).kron(&moment_vector(&ctx.field, x, t))?)
}

fn sandwich(ctx: &KernelCtx, a: usize, row_z: usize, t: usize, m: &Mat, z: usize) -> Result<Mat, KernelError> {
    let rows = ctx.repair_matrix(a, row_z)?.kron(&Mat::identity(&ctx.field, t))?;
    Ok(rows.matmul(m)?.matmul(&ctx.repair_matrix(a, z)?.transpose())?)
}

/// Digit a removed: e above a shifts down by one.
fn reduced_digit(a: usize, e: usize) -> usize {
    if e < a {
        e
    } else {
        e - 1
    }
}

/// Row selection R_{a,b} against kernels at the same digit and at other digits.
pub fn select_same_digit(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("select_same_digit");
    for i in 0..instances {
        let part = i % 3;
        let ctx = random_ctx(&fields, 1, if part == 2 { 2 } else { 1 }, &mut rng);
        let (s, f) = (ctx.s, ctx.field.clone());
        let t = rng.gen_range(1..=3);
        let a = rng.gen_range(0..ctx.n_tilde);
        let b = rng.gen_range(0..s);
        let z = rng.gen_range(0..s);
        let xs = random_points(&f, s, &mut rng);
        let (got, want, desc) = match part {
            0 => {
                let got = sandwich(&ctx, a, b, t, &ctx.blowup(a, &phi(&f, b, t, &xs)?)?, z)?;
                let want = if z == b { moments(&ctx, xs[b], t)? } else { moments(&ctx, xs[z], t)?.neg() };
                (got, want, format!("own kernel s={s} n={} a={a} b={b} z={z} t={t}", ctx.n_tilde))
            }
            1 => {
                let h = (0..=s).filter(|&h| h != b).collect::<Vec<_>>()[rng.gen_range(0..s)];
                let got = sandwich(&ctx, a, b, t, &ctx.blowup(a, &phi(&f, h, t, &xs)?)?, z)?;
                let want = if z == b { moments(&ctx, xs[b], t)? } else { Mat::zeros(&f, ctx.l_bar * t, ctx.l_bar) };
                (got, want, format!("other kernel s={s} n={} a={a} b={b} h={h} z={z} t={t}", ctx.n_tilde))
            }
            _ => {
                let e = (0..ctx.n_tilde).filter(|&e| e != a).collect::<Vec<_>>()[rng.gen_range(0..ctx.n_tilde - 1)];
                let h = rng.gen_range(0..=s);
                let u = phi(&f, h, t, &xs)?;
                let got = sandwich(&ctx, a, b, t, &ctx.blowup(e, &u)?, z)?;
                let want = if z == b {
                    ctx.reduced()?.blowup(reduced_digit(a, e), &u)?
                } else {
                    Mat::zeros(&f, ctx.l_bar * t, ctx.l_bar)
                };
                (got, want, format!("other digit s={s} n={} a={a} e={e} b={b} h={h} z={z} t={t}", ctx.n_tilde))
            }
        };
        rep.record(got == want, || desc);
    }
    Ok(rep)
}

/// Row summation R_{a,s̄} against kernels at the same digit and at other digits.
pub fn select_sum(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("select_sum");
    for i in 0..instances {
        let part = i % 3;
        let ctx = random_ctx(&fields, 1, if part == 2 { 2 } else { 1 }, &mut rng);
        let (s, f) = (ctx.s, ctx.field.clone());
        let t = rng.gen_range(1..=3);
        let a = rng.gen_range(0..ctx.n_tilde);
        let z = rng.gen_range(0..s);
        let xs = random_points(&f, s, &mut rng);
        let (got, want, desc) = match part {
            0 => {
                let got = sandwich(&ctx, a, s, t, &ctx.blowup(a, &phi(&f, s, t, &xs)?)?, z)?;
                (got, moments(&ctx, xs[z], t)?, format!("diagonal kernel s={s} n={} a={a} z={z} t={t}", ctx.n_tilde))
            }
            1 => {
                let b = rng.gen_range(0..s);
                let got = sandwich(&ctx, a, s, t, &ctx.blowup(a, &phi(&f, b, t, &xs)?)?, z)?;
                let want = if z == b { moments(&ctx, xs[b], t)? } else { Mat::zeros(&f, ctx.l_bar * t, ctx.l_bar) };
                (got, want, format!("row kernel s={s} n={} a={a} b={b} z={z} t={t}", ctx.n_tilde))
            }
            _ => {
                let e = (0..ctx.n_tilde).filter(|&e| e != a).collect::<Vec<_>>()[rng.gen_range(0..ctx.n_tilde - 1)];
                let h = rng.gen_range(0..=s);
                let u = phi(&f, h, t, &xs)?;
                let got = sandwich(&ctx, a, s, t, &ctx.blowup(e, &u)?, z)?;
                let want = ctx.reduced()?.blowup(reduced_digit(a, e), &u)?;
                (got, want, format!("other digit s={s} n={} a={a} e={e} h={h} z={z} t={t}", ctx.n_tilde))
            }
        };
        rep.record(got == want, || desc);
    }
    Ok(rep)
}

/// Σ_z R_{a,z}ᵀR_{a,z} = I_l and Σ_z R_{a,z} = R_{a,s̄}.
pub fn selector_partition(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("selector_partition");
    for _ in 0..instances {
        let ctx = random_ctx(&fields, 1, 1, &mut rng);
        let f = ctx.field.clone();
        let a = rng.gen_range(0..ctx.n_tilde);
        let mut gram = Mat::zeros(&f, ctx.l, ctx.l);
        let mut total = Mat::zeros(&f, ctx.l_bar, ctx.l);
        for z in 0..ctx.s {
            let r = ctx.repair_matrix(a, z)?;
            gram = gram.add(&r.transpose().matmul(&r)?)?;
            total = total.add(&r)?;
        }
        let ok = gram == Mat::identity(&f, ctx.l) && total == ctx.repair_matrix(a, ctx.s)?;
        rep.record(ok, || format!("s={} n={} a={a}", ctx.s, ctx.n_tilde));
    }
    Ok(rep)
}

/// det(φ_B(θ^G ⊙ x)) ≠ 0 ⇔ det(Ψ_a(φ_B(θ^G ⊙ x))) ≠ 0.
///
/// Half of the instances reuse points across kernels so that singular cases
/// are exercised too.
pub fn blowup_invertibility(seed: u64, instances: usize) -> Result<SuiteReport, KernelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields = fields();
    let mut rep = SuiteReport::new("blowup_invertibility");
    for i in 0..instances {
        let ctx = random_ctx(&fields, 1, 1, &mut rng);
        let (s, f) = (ctx.s, ctx.field.clone());
        let divisors: Vec<usize> = (1..=3).filter(|u| (f.q() as usize - 1).is_multiple_of(*u)).collect();
        let u = *divisors.choose(&mut rng).expect("u=1 divides");
        let theta = f.element_of_order(u as u64).expect("order divides q-1");
        let a = rng.gen_range(0..ctx.n_tilde);
        let mut racks: Vec<usize> = (0..=s).filter(|_| rng.gen_bool(0.5)).collect();
        if racks.is_empty() {
            racks.push(rng.gen_range(0..=s));
        }
        let base = random_points(&f, s, &mut rng);
        let mut terms = Vec::new();
        for &b in &racks {
            let xs = if i % 2 == 0 { base.clone() } else { random_points(&f, s, &mut rng) };
            let k = rng.gen_range(1..=u);
            let mut gs: Vec<usize> = (0..u).collect();
            gs.shuffle(&mut rng);
            for &g in &gs[..k] {
                let tw = f.pow(theta, g as i64).expect("nonzero");
                terms.push((b, xs.iter().map(|&x| f.mul(tw, x)).collect::<Vec<_>>()));
            }
        }
        let m = terms.len();
        let small = concat_phi(&f, m, &terms)?.is_invertible();
        let big = ctx.concat_blowup(a, m, &terms)?.is_invertible();
        rep.record(small == big, || {
            format!("s={s} n={} a={a} B={racks:?} delta={m} small={small} big={big}", ctx.n_tilde)
        });
    }
    Ok(rep)
}

/// Q_w row selection of a node's parity block equals the folded kernel
/// times the diagonal scaling: (I_l ⊗ Q_w)H_{ju+g} = θ^{gw} H̄_j(w) Ψ(diag(λ_j^w)).
pub fn fold_projection(code: &RackCode) -> Result<SuiteReport, KernelError> {
    let p = &code.params;
    let f = &code.field;
    let mut rep = SuiteReport::new("fold_projection");
    for w in 0..p.u {
        let q = Mat::identity(f, p.l).kron(&projection(f, p.u, p.v, p.r, w)?)?;
        for j in 0..p.n_bar {
            let scale = diag(f, &code.fold_scaling(j, w));
            let folded = code.folded_block(j, w).map_err(|e| KernelError::Context(e.to_string()))?;
            let rhs_base = folded.matmul(&scale)?;
            for g in 0..p.u {
                let lhs = q.matmul(code.block(j * p.u + g))?;
                let tw = f.pow(code.lambdas.theta, (g * w) as i64).expect("nonzero");
                let rhs = rhs_base.scale(tw);
                rep.record(lhs == rhs, || format!("node={} w={w}", j * p.u + g));
            }
        }
    }
    Ok(rep)
}

/// All randomized suites with `instances` cases each.
pub fn run_all(seed: u64, instances: usize) -> Result<Vec<SuiteReport>, KernelError> {
    Ok(vec![
        blowup_entries(seed, instances)?,
        blowup_product(seed.wrapping_add(1), instances)?,
        select_same_digit(seed.wrapping_add(2), instances)?,
        select_sum(seed.wrapping_add(3), instances)?,
        selector_partition(seed.wrapping_add(4), instances)?,
        blowup_invertibility(seed.wrapping_add(5), instances)?,
    ])
}
