#![allow(dead_code)]

use rackmsr::codes::{Codeword, RackCode};
use rackmsr::config::{build_code, RunConfig};
use rackmsr::gf::{Felt, Field};
use rackmsr::kernels::moment_vector;
use rackmsr::lambdas::explicit_lambdas;
use rackmsr::matrix::Mat;
use rackmsr::params::{CodeParams, Theorem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn example() -> RackCode {
    let p = CodeParams::derive(8, 4, 2, 3, Theorem::T1).unwrap();
    let f = Field::new(3, 3, Some(&[1, 2, 0, 1])).unwrap();
    let lam = explicit_lambdas(&p, &f).unwrap();
    RackCode::build(&p, &f, &lam).unwrap()
}

pub fn from_config(name: &str) -> RackCode {
    let path = format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    build_code(&RunConfig::from_json(&text).unwrap()).unwrap()
}

/// Built with the default field search and automatic coefficients.
pub fn searched(n: usize, k: usize, u: usize, d_bar: usize, theorem: Theorem) -> RackCode {
    let t = match theorem {
        Theorem::T1 => "T1",
        Theorem::T2 => "T2",
    };
    let json = format!(
        r#"{{"params":{{"n":{n},"k":{k},"u":{u},"d_bar":{d_bar},"theorem":"{t}"}},"lambdas":{{"mode":"auto"}}}}"#
    );
    build_code(&RunConfig::from_json(&json).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_word(code: &RackCode, rng: &mut ChaCha8Rng) -> Codeword {
    code.encode(&code.random_message(rng)).unwrap()
}

/// Arbitrary vectors, not necessarily a codeword.
pub fn noise(code: &RackCode, rng: &mut ChaCha8Rng) -> Codeword {
    let q = code.field.q();
    let nodes = (0..code.params.n)
        .map(|_| (0..code.params.l).map(|_| code.field.from_index(rng.gen_range(0..q)).unwrap()).collect())
        .collect();
    Codeword { nodes }
}

pub fn random_elem(f: &Field, rng: &mut ChaCha8Rng) -> Felt {
    f.from_index(rng.gen_range(0..f.q())).unwrap()
}

/// Random d̄-subset of racks other than `host`.
pub fn random_helpers(code: &RackCode, host: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut others: Vec<usize> = (0..code.params.n_bar).filter(|&r| r != host).collect();
    others.shuffle(rng);
    let mut h = others[..code.params.d_bar].to_vec();
    h.sort_unstable();
    h
}

/// 16×4 matrix of 4×1 blocks; each entry is (block row, block col, sign, λ index).
fn transcribe(f: &Field, negate_points: bool, entries: &[(usize, usize, bool, usize)]) -> Mat {
    let mut m = Mat::zeros(f, 16, 4);
    for &(i, j, minus, idx) in entries {
        let mut x = f.xi_pow(idx as i64);
        if negate_points {
            x = f.neg(x);
        }
        let col = moment_vector(f, x, 4);
        for t in 0..4 {
            let v = col.get(t, 0);
            m.set(i * 4 + t, j, if minus { f.neg(v) } else { v });
        }
    }
    m
}

/// The displayed parity blocks, written out by position.
pub fn displayed_blocks(f: &Field) -> Vec<Mat> {
    let h0 = [(0, 0, false, 0), (0, 1, true, 1), (1, 1, false, 1), (2, 2, false, 0), (2, 3, true, 1), (3, 3, false, 1)];
    let h2 = [(0, 0, false, 2), (1, 0, true, 2), (1, 1, false, 3), (2, 2, false, 2), (3, 2, true, 2), (3, 3, false, 3)];
    let h4 = [(0, 0, false, 4), (0, 2, true, 5), (1, 1, false, 4), (1, 3, true, 5), (2, 2, false, 5), (3, 3, false, 5)];
    let h6 = [(0, 0, false, 6), (1, 1, false, 6), (2, 0, true, 6), (2, 2, false, 7), (3, 1, true, 6), (3, 3, false, 7)];
    let mut out = Vec::new();
    for e in [&h0[..], &h2[..], &h4[..], &h6[..]] {
        out.push(transcribe(f, false, e));
        out.push(transcribe(f, true, e));
    }
    out
}
