//! The (n,k,u,d̄) = (8,4,2,3) code over F₂₇ with λ_i = ξ^i and θ = −1.

mod common;

use common::displayed_blocks;
use rackmsr::codes::{Codeword, RackCode, SweepMode};
use rackmsr::config::{build_code, Bundle, RunConfig};
use rackmsr::gf::{Felt, Field};
use rackmsr::kernels::{concat_phi, projection, KernelCtx};
use rackmsr::lambdas::{explicit_lambdas, verify_lambdas, LambdaSet};
use rackmsr::matrix::Mat;
use rackmsr::params::{CodeParams, Theorem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_PARITY_HASH: &str = "0cda470fa440f6e32f5fea548be9923795e1e48248ead1a1d7bcd92e57d6a213";

fn f27() -> Field {
    Field::new(3, 3, Some(&[1, 2, 0, 1])).unwrap()
}

fn example() -> RackCode {
    let p = CodeParams::derive(8, 4, 2, 3, Theorem::T1).unwrap();
    let f = f27();
    let lam = explicit_lambdas(&p, &f).unwrap();
    RackCode::build(&p, &f, &lam).unwrap()
}

#[test]
fn parity_blocks_match_display() {
    let code = example();
    let want = displayed_blocks(&code.field);
    for (i, w) in want.iter().enumerate() {
        assert_eq!(code.block(i), w, "H_{i}");
    }
}

#[test]
fn spot_entries() {
    let code = example();
    let f = &code.field;
    let h0 = code.block(0);
    for t in 0..4 {
        assert_eq!(h0.get(t, 0), Felt::ONE);
    }
    // H₁ evaluates at −λ₀ = −1
    assert_eq!(code.block(1).get(1, 0), f.neg(Felt::ONE));
    assert_eq!(code.lambdas.theta, f.neg(Felt::ONE));
}

#[test]
fn parity_hash_is_frozen() {
    assert_eq!(example().parity_hash(), GOLDEN_PARITY_HASH);
}

#[test]
fn shipped_config_reproduces_the_code() {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example_f27.json")).unwrap();
    let code = build_code(&RunConfig::from_json(&text).unwrap()).unwrap();
    assert_eq!(code.parity_hash(), GOLDEN_PARITY_HASH);
    assert_eq!(Bundle::from_code(&code).to_json(), Bundle::from_code(&example()).to_json());
}

#[test]
fn all_seventy_erasure_patterns_decode() {
    let code = example();
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let word = code.encode(&code.random_message(&mut rng)).unwrap();
    let mut count = 0;
    for erased in rackmsr::codes::subsets(8, 4) {
        let mut damaged = word.clone();
        for &i in &erased {
            damaged.nodes[i] = vec![Felt::ZERO; 4];
        }
        assert_eq!(code.erase_decode(&damaged, &erased).unwrap(), word, "{erased:?}");
        count += 1;
    }
    assert_eq!(count, 70);
    let rep = code.mds_sweep(SweepMode::Exhaustive);
    assert_eq!((rep.checked, rep.failures.len()), (70, 0));
}

#[test]
fn named_decode_pattern() {
    let code = example();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let word = code.encode(&code.random_message(&mut rng)).unwrap();
    let mut damaged = word.clone();
    for i in [0, 3, 4, 5] {
        damaged.nodes[i] = vec![Felt::ZERO; 4];
    }
    assert_eq!(code.erase_decode(&damaged, &[0, 3, 4, 5]).unwrap(), word);
    assert_eq!(code.erase_decode(&word, &[]).unwrap(), word);
}

#[test]
fn first_twisted_case_is_invertible() {
    let f = f27();
    let x: Vec<Felt> = (0..4).map(|i| f.xi_pow(i)).collect();
    let theta = f.neg(Felt::ONE);
    let twisted: Vec<Felt> = x[2..4].iter().map(|&v| f.mul(theta, v)).collect();
    let m = concat_phi(&f, 2, &[(0, x[0..2].to_vec()), (1, twisted)]).unwrap();
    assert_eq!(m.shape(), (4, 4));
    assert!(m.is_invertible());
}

#[test]
fn folded_rack_zero_matches_display() {
    let code = example();
    let f = &code.field;
    let ctx = KernelCtx::new(f, 2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let word = code.encode(&code.random_message(&mut rng)).unwrap();
    for w in 0..2 {
        let view = code.fold(&word, w).unwrap();
        let sign = f.pow(f.neg(Felt::ONE), w as i64).unwrap();
        let sum: Vec<Felt> = (0..4).map(|c| f.add(word.nodes[0][c], f.mul(sign, word.nodes[1][c]))).collect();
        let scale = ctx.blowup_diag(0, &[f.xi_pow(0), f.pow(f.xi(), w as i64).unwrap()]).unwrap();
        assert_eq!(view.nodes[0], scale.matmul(&Mat::column(f, &sum)).unwrap().into_data());
        assert!(code.folded_residual(&view).is_zero());
    }
}

#[test]
fn row_projection_shape() {
    let f = f27();
    let q = projection(&f, 2, 0, 4, 1).unwrap();
    assert_eq!(q, Mat::identity(&f, 4).submatrix(&[1, 3], &[0, 1, 2, 3]).unwrap());
}

#[test]
fn mutated_coefficient_is_caught() {
    let code = example();
    let mut bad = code.lambdas.lambdas.clone();
    bad[4] = bad[0];
    let set = LambdaSet { lambdas: bad, ..code.lambdas.clone() };
    let v = verify_lambdas(&code.params, &code.field, &set).unwrap();
    assert!(!v.all());
    assert!(RackCode::build(&code.params, &code.field, &set).is_err());
}

#[test]
fn zero_message_gives_zero_word() {
    let code = example();
    let word = code.encode(&[Felt::ZERO; 16]).unwrap();
    assert_eq!(word, Codeword::zeros(&code.params));
}

#[test]
fn mutated_coefficient_breaks_mds() {
    let code = example();
    let mut bad = code.lambdas.lambdas.clone();
    bad[4] = bad[0];
    let set = LambdaSet { lambdas: bad, ..code.lambdas.clone() };
    let broken = RackCode::build_unchecked(&code.params, &code.field, &set).unwrap();
    assert!(!broken.mds_sweep(SweepMode::Exhaustive).pass());
    let folded = broken.folded_mds_check(0, SweepMode::Exhaustive).unwrap();
    assert!(!folded.pass());
}
