//! Choice of the evaluation coefficients λ and the twist θ.
//!
//! Each group of racks carries its own local invertibility constraints, so
//! groups are searched one after another from a shared pool
//! Q = {ξ^α : α < (q−1)/u}.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Felt, Field, GfError};
use crate::kernels::{concat_phi, KernelError};
use crate::params::CodeParams;

/// Enumeration is exponential in group·u; beyond this it is refused.
pub const MAX_GROUP_U: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LambdaError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("pool has {have} elements but {need} are required; increase q")]
    PoolTooSmall { need: usize, have: usize },
    #[error("no valid coefficients for group {group} after {tries} attempts; increase q or tries")]
    Exhausted { group: usize, tries: usize },
    #[error("group·u = {0} exceeds the enumeration cap {MAX_GROUP_U}")]
    TooManyCases(usize),
    #[error("constraint failed in group {}: {case}", case.group)]
    ConstraintFailure { case: ConstraintCase },
    #[error("coefficient collision: {0}")]
    Collision(String),
    #[error("lambda set does not match params: {0}")]
    Mismatch(String),
}

impl LambdaError {
    pub fn is_exhaustion(&self) -> bool {
        matches!(self, LambdaError::PoolTooSmall { .. } | LambdaError::Exhausted { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Twisted,
    PowerU,
}

/// One local invertibility condition inside a group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintCase {
    pub group: usize,
    /// In-group rack positions B, ascending.
    pub racks: Vec<usize>,
    /// θ-exponent set G_b for each entry of `racks`; `[0]` for the power-u family.
    pub exps: Vec<Vec<usize>>,
    pub family: Family,
}

impl ConstraintCase {
    pub fn delta(&self) -> usize {
        self.exps.iter().map(Vec::len).sum()
    }

    /// Height of each φ block: δ for the twisted family, |B| for power-u.
    pub fn height(&self) -> usize {
        match self.family {
            Family::Twisted => self.delta(),
            Family::PowerU => self.racks.len(),
        }
    }
}

impl std::fmt::Display for ConstraintCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?} B={:?} G={:?}", self.family, self.racks, self.exps)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LambdaMode {
    Explicit,
    Greedy,
    Random { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verified {
    pub orbits_distinct: bool,
    pub powers_distinct: bool,
    pub in_pool: bool,
    pub twisted: bool,
    pub power_u: bool,
}

impl Verified {
    pub fn all(&self) -> bool {
        self.orbits_distinct && self.powers_distinct && self.in_pool && self.twisted && self.power_u
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaSet {
    /// parent_n̄·s̄ coefficients; rack i owns indices i·s̄ .. i·s̄+s̄.
    pub lambdas: Vec<Felt>,
    pub theta: Felt,
    pub mode: LambdaMode,
    pub verified: Verified,
}

/// Serialized form: discrete-log indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaRecord {
    #[serde(flatten)]
    pub mode: LambdaMode,
    pub theta: u32,
    pub lambdas: Vec<u32>,
}

impl LambdaSet {
    pub fn rack(&self, s: usize, rack: usize) -> &[Felt] {
        &self.lambdas[rack * s..(rack + 1) * s]
    }

    pub fn record(&self) -> LambdaRecord {
        LambdaRecord {
            mode: self.mode.clone(),
            theta: self.theta.log().unwrap_or(0),
            lambdas: self.lambdas.iter().map(|x| x.log().unwrap_or(u32::MAX)).collect(),
        }
    }

    /// Rebuilds a set from its record and re-verifies it.
    pub fn from_record(params: &CodeParams, field: &Field, rec: &LambdaRecord) -> Result<LambdaSet, LambdaError> {
        let lambdas: Vec<Felt> = rec.lambdas.iter().map(|&i| field.xi_pow(i as i64)).collect();
        let set = LambdaSet {
            lambdas,
            theta: field.xi_pow(rec.theta as i64),
            mode: rec.mode.clone(),
            verified: Verified {
                orbits_distinct: false,
                powers_distinct: false,
                in_pool: false,
                twisted: false,
                power_u: false,
            },
        };
        let verified = verify_lambdas(params, field, &set)?;
        Ok(LambdaSet { verified, ..set })
    }
}

fn nonempty_subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (1u32..(1 << n)).map(move |mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect())
}

/// Local constraint cases of one group.
pub fn group_cases(params: &CodeParams, group: usize) -> Vec<ConstraintCase> {
    let mut out = Vec::new();
    for racks in nonempty_subsets(params.group) {
        let mut assignments: Vec<Vec<Vec<usize>>> = vec![vec![]];
        for _ in &racks {
            assignments = assignments
                .into_iter()
                .flat_map(|prefix| {
                    nonempty_subsets(params.u).map(move |g| {
                        let mut p = prefix.clone();
                        p.push(g);
                        p
                    })
                })
                .collect();
        }
        for exps in assignments {
            out.push(ConstraintCase { group, racks: racks.clone(), exps, family: Family::Twisted });
        }
    }
    for racks in nonempty_subsets(params.group) {
        let exps = vec![vec![0]; racks.len()];
        out.push(ConstraintCase { group, racks, exps, family: Family::PowerU });
    }
    out
}

/// All local constraint cases of every group of the (parent) code.
pub fn enumerate_constraints(params: &CodeParams) -> Vec<ConstraintCase> {
    (0..params.n_tilde).flat_map(|a| group_cases(params, a)).collect()
}

/// Square matrix whose determinant must be nonzero for `case`, built from
/// one group's group·s̄ coefficients.
pub fn case_matrix(
    params: &CodeParams,
    field: &Field,
    theta: Felt,
    group_lambdas: &[Felt],
    case: &ConstraintCase,
) -> Result<crate::matrix::Mat, LambdaError> {
    let s = params.s;
    let mut terms = Vec::new();
    for (b, exps) in case.racks.iter().zip(&case.exps) {
        let xs = &group_lambdas[b * s..(b + 1) * s];
        match case.family {
            Family::Twisted => {
                for &g in exps {
                    let tg = field.pow(theta, g as i64)?;
                    terms.push((*b, xs.iter().map(|&x| field.mul(tg, x)).collect()));
                }
            }
            Family::PowerU => {
                let pts = xs.iter().map(|&x| field.pow(x, params.u as i64)).collect::<Result<_, _>>()?;
                terms.push((*b, pts));
            }
        }
    }
    Ok(concat_phi(field, case.height(), &terms)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintCheck {
    pub pass: bool,
    pub checked: usize,
    pub first_failure: Option<ConstraintCase>,
}

fn check_cases<'a>(
    params: &CodeParams,
    field: &Field,
    theta: Felt,
    cand: &[Felt],
    cases: impl Iterator<Item = &'a ConstraintCase>,
) -> Result<ConstraintCheck, LambdaError> {
    let mut checked = 0;
    for case in cases {
        checked += 1;
        let m = case_matrix(params, field, theta, cand, case)?;
        if m.det().map_err(KernelError::from)?.is_zero() {
            return Ok(ConstraintCheck { pass: false, checked, first_failure: Some(case.clone()) });
        }
    }
    Ok(ConstraintCheck { pass: true, checked, first_failure: None })
}

fn check_cap(params: &CodeParams) -> Result<(), LambdaError> {
    if params.group * params.u > MAX_GROUP_U {
        return Err(LambdaError::TooManyCases(params.group * params.u));
    }
    Ok(())
}

/// Evaluates every local case of one group on `candidate` (group·s̄ values).
pub fn check_constraints(
    params: &CodeParams,
    field: &Field,
    candidate: &[Felt],
    theta: Felt,
) -> Result<ConstraintCheck, LambdaError> {
    check_cap(params)?;
    if candidate.len() != params.group * params.s {
        return Err(LambdaError::Mismatch(format!(
            "{} values for a group of {}",
            candidate.len(),
            params.group * params.s
        )));
    }
    let cases = group_cases(params, 0);
    check_cases(params, field, theta, candidate, cases.iter())
}

fn pool(params: &CodeParams, field: &Field) -> Result<Vec<Felt>, LambdaError> {
    let qm1 = (field.q() - 1) as usize;
    if !qm1.is_multiple_of(params.u) {
        return Err(GfError::NotDivisor { u: params.u as u64, qm1: qm1 as u64 }.into());
    }
    Ok((0..qm1 / params.u).map(|a| field.xi_pow(a as i64)).collect())
}

/// Global checks plus every group's local cases.
pub fn verify_lambdas(params: &CodeParams, field: &Field, set: &LambdaSet) -> Result<Verified, LambdaError> {
    check_cap(params)?;
    let need = params.parent_n_bar * params.s;
    if set.lambdas.len() != need {
        return Err(LambdaError::Mismatch(format!("{} coefficients, expected {need}", set.lambdas.len())));
    }
    let qm1 = (field.q() - 1) as usize;
    if !qm1.is_multiple_of(params.u) || field.order(set.theta) != Some(params.u as u64) {
        return Err(LambdaError::Mismatch("θ does not have order u".into()));
    }
    let span = qm1 / params.u;
    let logs: Vec<Option<u32>> = set.lambdas.iter().map(|x| x.log()).collect();
    let mut seen = std::collections::HashSet::new();
    let orbits_distinct = logs.iter().all(|l| l.is_some_and(|l| seen.insert(l as usize % span)));
    let powers: std::collections::HashSet<Felt> =
        set.lambdas.iter().map(|&x| field.pow(x, params.u as i64).unwrap()).collect();
    let powers_distinct = powers.len() == need;
    let in_pool = logs.iter().all(|l| l.is_some_and(|l| (l as usize) < span));
    let mut twisted = true;
    let mut power_u = true;
    let group_len = params.group * params.s;
    for a in 0..params.n_tilde {
        let cand = &set.lambdas[a * group_len..(a + 1) * group_len];
        let cases = group_cases(params, a);
        let t = check_cases(params, field, set.theta, cand, cases.iter().filter(|c| c.family == Family::Twisted))?;
        let p = check_cases(params, field, set.theta, cand, cases.iter().filter(|c| c.family == Family::PowerU))?;
        twisted &= t.pass;
        power_u &= p.pass;
    }
    Ok(Verified { orbits_distinct, powers_distinct, in_pool, twisted, power_u })
}

fn first_failure(params: &CodeParams, field: &Field, set: &LambdaSet) -> Result<Option<LambdaError>, LambdaError> {
    let group_len = params.group * params.s;
    for a in 0..params.n_tilde {
        let cand = &set.lambdas[a * group_len..(a + 1) * group_len];
        let cases = group_cases(params, a);
        if let Some(case) = check_cases(params, field, set.theta, cand, cases.iter())?.first_failure {
            return Ok(Some(LambdaError::ConstraintFailure { case }));
        }
    }
    Ok(None)
}

/// λ_i = ξ^i, accepted only after full verification.
pub fn explicit_lambdas(params: &CodeParams, field: &Field) -> Result<LambdaSet, LambdaError> {
    check_cap(params)?;
    let theta = field.element_of_order(params.u as u64)?;
    let need = params.parent_n_bar * params.s;
    let span = (field.q() - 1) as usize / params.u;
    if need > span {
        return Err(LambdaError::Collision(format!("ξ^i for i < {need} repeat θ-orbits modulo {span}")));
    }
    let set = LambdaSet {
        lambdas: (0..need).map(|i| field.xi_pow(i as i64)).collect(),
        theta,
        mode: LambdaMode::Explicit,
        verified: Verified {
            orbits_distinct: false,
            powers_distinct: false,
            in_pool: false,
            twisted: false,
            power_u: false,
        },
    };
    if let Some(err) = first_failure(params, field, &set)? {
        return Err(err);
    }
    let verified = verify_lambdas(params, field, &set)?;
    Ok(LambdaSet { verified, ..set })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case")]
pub enum Strategy {
    Greedy {
        #[serde(default = "default_budget")]
        budget: usize,
    },
    Random {
        seed: u64,
        #[serde(default = "default_budget")]
        max_tries: usize,
    },
}

fn default_budget() -> usize {
    20_000
}

impl Strategy {
    pub fn greedy() -> Strategy {
        Strategy::Greedy { budget: default_budget() }
    }

    pub fn random(seed: u64) -> Strategy {
        Strategy::Random { seed, max_tries: default_budget() }
    }
}

struct Dfs<'a> {
    params: &'a CodeParams,
    field: &'a Field,
    theta: Felt,
    pool: &'a [Felt],
    used: Vec<bool>,
    chosen: Vec<usize>,
    /// cases grouped by the largest rack position they involve
    by_last: Vec<Vec<ConstraintCase>>,
    budget: usize,
    spent: usize,
}

impl Dfs<'_> {
    fn run(&mut self) -> Result<bool, LambdaError> {
        let s = self.params.s;
        let pos = self.chosen.len();
        if pos == self.params.group * s {
            return Ok(true);
        }
        // within a rack, pool indices increase; racks start anywhere
        let start = if pos.is_multiple_of(s) { 0 } else { self.chosen[pos - 1] + 1 };
        for idx in start..self.pool.len() {
            if self.used[idx] {
                continue;
            }
            self.used[idx] = true;
            self.chosen.push(idx);
            let mut ok = true;
            if (pos + 1).is_multiple_of(s) {
                self.spent += 1;
                if self.spent > self.budget {
                    return Ok(false);
                }
                let rack = pos / s;
                let cand: Vec<Felt> = self.chosen.iter().map(|&i| self.pool[i]).collect();
                let mut padded = cand.clone();
                padded.resize(self.params.group * s, Felt::ONE);
                ok = check_cases(self.params, self.field, self.theta, &padded, self.by_last[rack].iter())?.pass;
            }
            if ok && self.run()? {
                return Ok(true);
            }
            if self.spent > self.budget {
                return Ok(false);
            }
            self.chosen.pop();
            self.used[idx] = false;
        }
        Ok(false)
    }
}

/// Picks group·s̄ fresh pool elements per group that pass every local case.
pub fn search_lambdas(params: &CodeParams, field: &Field, strategy: Strategy) -> Result<LambdaSet, LambdaError> {
    check_cap(params)?;
    let theta = field.element_of_order(params.u as u64)?;
    let mut remaining = pool(params, field)?;
    let need = params.parent_n_bar * params.s;
    if remaining.len() < need {
        return Err(LambdaError::PoolTooSmall { need, have: remaining.len() });
    }
    let group_len = params.group * params.s;
    let cases = group_cases(params, 0);
    let mut rng = match strategy {
        Strategy::Random { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
        Strategy::Greedy { .. } => None,
    };
    let mut lambdas = Vec::with_capacity(need);
    for a in 0..params.n_tilde {
        let picked: Vec<Felt> = match (&strategy, rng.as_mut()) {
            (Strategy::Greedy { budget }, _) => {
                let mut by_last = vec![Vec::new(); params.group];
                for c in &cases {
                    by_last[*c.racks.last().unwrap()].push(c.clone());
                }
                let mut dfs = Dfs {
                    params,
                    field,
                    theta,
                    pool: &remaining,
                    used: vec![false; remaining.len()],
                    chosen: Vec::new(),
                    by_last,
                    budget: *budget,
                    spent: 0,
                };
                if !dfs.run()? {
                    return Err(LambdaError::Exhausted { group: a, tries: dfs.spent.min(*budget) });
                }
                dfs.chosen.iter().map(|&i| remaining[i]).collect()
            }
            (Strategy::Random { max_tries, .. }, Some(rng)) => {
                let mut found = None;
                for _ in 0..*max_tries {
                    let cand: Vec<Felt> = remaining.choose_multiple(rng, group_len).copied().collect();
                    if check_cases(params, field, theta, &cand, cases.iter())?.pass {
                        found = Some(cand);
                        break;
                    }
                }
                found.ok_or(LambdaError::Exhausted { group: a, tries: *max_tries })?
            }
            (Strategy::Random { .. }, None) => unreachable!(),
        };
        remaining.retain(|x| !picked.contains(x));
        lambdas.extend(picked);
    }
    let mode = match strategy {
        Strategy::Greedy { .. } => LambdaMode::Greedy,
        Strategy::Random { seed, .. } => LambdaMode::Random { seed },
    };
    let mut set = LambdaSet {
        lambdas,
        theta,
        mode,
        verified: Verified {
            orbits_distinct: false,
            powers_distinct: false,
            in_pool: false,
            twisted: false,
            power_u: false,
        },
    };
    set.verified = verify_lambdas(params, field, &set)?;
    if !set.verified.all() {
        return Err(LambdaError::Collision(format!("search result failed verification: {:?}", set.verified)));
    }
    Ok(set)
}
