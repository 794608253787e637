//! Repair of several failed nodes inside one rack.
//!
//! For each fold index w the host downloads l̄ symbols from every scheduled
//! helper rack, solves a punctured parity system for its own folded vector
//! c̄_host(w), and finally unfolds the h folded vectors with a Vandermonde
//! solve in the θ-powers of the failed positions.

use std::collections::{BTreeMap, BTreeSet};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codes::{CodeError, Codeword, RackCode};
use crate::gf::Felt;
use crate::kernels::KernelError;
use crate::matrix::{Mat, MatError};
use crate::params::ParamError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RepairError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Mat(#[from] MatError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("rack {0} is not an exposed rack")]
    BadRack(usize),
    #[error("no failed nodes given")]
    NoFailures,
    #[error("failed position {0} is not in [0, u)")]
    BadFailed(usize),
    #[error("h={h} exceeds h_max={h_max}")]
    HExceedsMax { h: usize, h_max: usize },
    #[error("{got} helper racks given, d̄={want} required")]
    HelperCount { got: usize, want: usize },
    #[error("helper rack {0} is the host or not an exposed rack")]
    BadHelper(usize),
    #[error("h={h} > u-v={uv} needs one extra helper rack")]
    MissingExtra { h: usize, uv: usize },
    #[error("extra helper given but h={h} <= u-v={uv}")]
    UnusedExtra { h: usize, uv: usize },
    #[error("extra helper rack {0} is the host, a helper, or not exposed")]
    BadExtra(usize),
    #[error("rack {rack} is not scheduled at w={w}")]
    Unscheduled { rack: usize, w: usize },
    #[error("payload from rack {rack} at w={w} is missing")]
    MissingPayload { rack: usize, w: usize },
    #[error("punctured system at w={w} is singular")]
    Singular { w: usize },
}

/// How a helper rack compresses its folded vector: keep digit a = z, or sum
/// over digit a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    Digit(usize),
    Sum,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairPlan {
    pub host: usize,
    /// Group digit of the host rack.
    pub a: usize,
    /// In-group position of the host rack.
    pub b: usize,
    pub failed: Vec<usize>,
    pub local: Vec<usize>,
    pub helpers: Vec<usize>,
    pub extra: Option<usize>,
    /// (w, racks downloading at w)
    pub schedule: Vec<(usize, Vec<usize>)>,
    /// Host sits at the extra in-group position of a width-(s̄+1) group.
    pub last_position: bool,
    /// Helpers sharing the host's group, when `last_position`.
    pub in_group: Vec<usize>,
    /// Helpers outside the host's group, when `last_position`.
    pub out_group: Vec<usize>,
}

impl RepairPlan {
    pub fn h(&self) -> usize {
        self.failed.len()
    }

    pub fn scheduled(&self, w: usize) -> Option<&[usize]> {
        self.schedule.iter().find(|(x, _)| *x == w).map(|(_, r)| r.as_slice())
    }
}

fn sorted_unique(v: &[usize]) -> Option<Vec<usize>> {
    let set: BTreeSet<usize> = v.iter().copied().collect();
    (set.len() == v.len()).then(|| set.into_iter().collect())
}

/// Smallest surviving rack outside host and helpers.
pub fn default_extra(code: &RackCode, host: usize, helpers: &[usize]) -> Option<usize> {
    (0..code.params.n_bar).find(|r| *r != host && !helpers.contains(r))
}

pub fn plan(
    code: &RackCode,
    host: usize,
    failed: &[usize],
    helpers: &[usize],
    extra: Option<usize>,
) -> Result<RepairPlan, RepairError> {
    let p = &code.params;
    if host >= p.n_bar {
        return Err(RepairError::BadRack(host));
    }
    if failed.is_empty() {
        return Err(RepairError::NoFailures);
    }
    let failed = sorted_unique(failed).ok_or(RepairError::BadFailed(failed[0]))?;
    if let Some(&g) = failed.iter().find(|&&g| g >= p.u) {
        return Err(RepairError::BadFailed(g));
    }
    let h = failed.len();
    if h > p.h_max {
        return Err(RepairError::HExceedsMax { h, h_max: p.h_max });
    }
    if helpers.len() != p.d_bar {
        return Err(RepairError::HelperCount { got: helpers.len(), want: p.d_bar });
    }
    let helpers = sorted_unique(helpers).ok_or(RepairError::HelperCount { got: helpers.len(), want: p.d_bar })?;
    if let Some(&bad) = helpers.iter().find(|&&j| j == host || j >= p.n_bar) {
        return Err(RepairError::BadHelper(bad));
    }
    let uv = p.u - p.v;
    match (h > uv, extra) {
        (true, None) => return Err(RepairError::MissingExtra { h, uv }),
        (false, Some(_)) => return Err(RepairError::UnusedExtra { h, uv }),
        (true, Some(e)) if e == host || e >= p.n_bar || helpers.contains(&e) => return Err(RepairError::BadExtra(e)),
        _ => {}
    }
    let schedule = (0..h)
        .map(|w| {
            let mut racks = helpers.clone();
            if w >= uv {
                racks.extend(extra);
                racks.sort_unstable();
            }
            (w, racks)
        })
        .collect();
    let (a, b) = p.rack_position(host);
    let last_position = b == p.s;
    let everyone: Vec<usize> = helpers.iter().copied().chain(extra).collect();
    let (in_group, out_group) =
        if last_position { everyone.iter().partition(|&&j| p.rack_position(j).0 == a) } else { (vec![], vec![]) };
    Ok(RepairPlan {
        host,
        a,
        b,
        local: (0..p.u).filter(|g| !failed.contains(g)).collect(),
        failed,
        helpers,
        extra,
        schedule,
        last_position,
        in_group,
        out_group,
    })
}

/// Selector used for rack `rack`'s contribution in `plan`.
pub fn selector(code: &RackCode, plan: &RepairPlan, rack: usize) -> Selector {
    let p = &code.params;
    if !plan.last_position {
        return Selector::Digit(plan.b);
    }
    let (e, pos) = p.rack_position(rack);
    if e == plan.a {
        Selector::Digit(pos)
    } else {
        Selector::Sum
    }
}

fn selector_matrix(code: &RackCode, a: usize, sel: Selector) -> Result<Mat, RepairError> {
    let z = match sel {
        Selector::Digit(z) => z,
        Selector::Sum => code.params.s,
    };
    Ok(code.ctx.repair_matrix(a, z)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Payload {
    pub rack: usize,
    pub w: usize,
    pub symbols: Vec<Felt>,
    /// Coordinates read from each of the rack's u nodes.
    pub coords: Vec<usize>,
}

/// R_sel · Ψ(diag(λ_j^w)) · Σ_g θ^{gw} c_{ju+g}
pub fn helper_payload(
    code: &RackCode,
    word: &Codeword,
    rack: usize,
    plan: &RepairPlan,
    w: usize,
) -> Result<Payload, RepairError> {
    if !plan.scheduled(w).is_some_and(|r| r.contains(&rack)) {
        return Err(RepairError::Unscheduled { rack, w });
    }
    code.check_word(word)?;
    let f = &code.field;
    let sel = selector_matrix(code, plan.a, selector(code, plan, rack))?;
    let scale = code.fold_scaling(rack, w);
    let m = Mat::from_fn(f, sel.rows(), sel.cols(), |i, c| f.mul(sel.get(i, c), scale[c]));
    let coords = (0..m.cols()).filter(|&c| (0..m.rows()).any(|i| !m.get(i, c).is_zero())).collect();
    let sum = code.twisted_sum(word.rack(code.params.u, rack), w);
    let symbols = m.matmul(&Mat::column(f, &sum))?.into_data();
    Ok(Payload { rack, w, symbols, coords })
}

/// Solves the punctured system at fold index w for c̄_host(w).
pub fn recover_folded(
    code: &RackCode,
    plan: &RepairPlan,
    w: usize,
    payloads: &[Payload],
) -> Result<Vec<Felt>, RepairError> {
    let p = &code.params;
    let f = &code.field;
    let scheduled = plan.scheduled(w).ok_or(RepairError::Unscheduled { rack: plan.host, w })?;
    let rows = p.folded_rows(w);
    let row_sel = if plan.last_position { Selector::Sum } else { Selector::Digit(plan.b) };
    let srow = selector_matrix(code, plan.a, row_sel)?.kron(&Mat::identity(f, rows))?;

    let project = |rack: usize, z: usize| -> Result<Mat, RepairError> {
        let hb = code.folded_block(rack, w)?;
        let rz = code.ctx.repair_matrix(plan.a, z)?;
        Ok(srow.matmul(&hb)?.matmul(&rz.transpose())?)
    };

    let mut unknown_cols: Vec<Mat> = Vec::new();
    for z in 0..p.s {
        unknown_cols.push(project(plan.host, z)?);
    }
    let mut rhs = vec![Felt::ZERO; rows * p.l_bar];
    for rack in (0..p.n_bar).filter(|&r| r != plan.host) {
        let z = match selector(code, plan, rack) {
            Selector::Digit(z) => z,
            Selector::Sum => 0,
        };
        let ht = project(rack, z)?;
        if scheduled.contains(&rack) {
            let pl =
                payloads.iter().find(|x| x.rack == rack && x.w == w).ok_or(RepairError::MissingPayload { rack, w })?;
            let contrib = ht.matmul(&Mat::column(f, &pl.symbols))?;
            for (r, &c) in rhs.iter_mut().zip(contrib.data()) {
                *r = f.sub(*r, c);
            }
        } else {
            unknown_cols.push(ht);
        }
    }
    let refs: Vec<&Mat> = unknown_cols.iter().collect();
    let a = Mat::hconcat(f, &refs)?;
    let x = a.solve(&Mat::column(f, &rhs)).map_err(|e| match e {
        MatError::Singular | MatError::Inconsistent => RepairError::Singular { w },
        e => e.into(),
    })?;
    let mut out = vec![Felt::ZERO; p.l];
    for z in 0..p.s {
        let piece = &x.data()[z * p.l_bar..(z + 1) * p.l_bar];
        let back = code.ctx.repair_matrix(plan.a, z)?.transpose().matmul(&Mat::column(f, piece))?;
        for (o, &v) in out.iter_mut().zip(back.data()) {
            *o = f.add(*o, v);
        }
    }
    Ok(out)
}

/// Unfolds c̄_host(w), w ∈ [h], into the failed nodes' contents.
pub fn finish(
    code: &RackCode,
    plan: &RepairPlan,
    folded: &[Vec<Felt>],
    local: &[(usize, Vec<Felt>)],
) -> Result<Vec<(usize, Vec<Felt>)>, RepairError> {
    let p = &code.params;
    let f = &code.field;
    let h = plan.h();
    if folded.len() != h {
        return Err(RepairError::MissingPayload { rack: plan.host, w: folded.len() });
    }
    let theta = code.lambdas.theta;
    let tp = |e: usize| f.pow(theta, e as i64).expect("nonzero θ");
    let mut eta = Mat::zeros(f, h, p.l);
    for (w, cbar) in folded.iter().enumerate() {
        let scale = code.fold_scaling(plan.host, w);
        for c in 0..p.l {
            let mut v = f.div(cbar[c], scale[c]).expect("nonzero λ");
            for (g, node) in local {
                v = f.sub(v, f.mul(tp(g * w), node[c]));
            }
            eta.set(w, c, v);
        }
    }
    let vander = Mat::from_fn(f, h, h, |w, i| tp(plan.failed[i] * w));
    let sol = vander.solve(&eta).map_err(|_| RepairError::Singular { w: h })?;
    Ok(plan
        .failed
        .iter()
        .enumerate()
        .map(|(i, &g)| (plan.host * p.u + g, sol.data()[i * p.l..(i + 1) * p.l].to_vec()))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairResult {
    pub recovered: Vec<(usize, Vec<Felt>)>,
    pub bandwidth: usize,
    pub access: usize,
    pub per_rack_alpha: BTreeMap<usize, usize>,
    pub bound_bw: usize,
    pub bound_access: Ratio<u64>,
    pub optimal_bw: bool,
    pub optimal_access: bool,
    /// bandwidth / bound_bw
    pub ratio: Ratio<u64>,
    /// Recovered contents equal the originals.
    pub exact: bool,
}

/// JSON view of a [`RepairResult`] ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepairLedger {
    pub bandwidth: usize,
    pub access: usize,
    pub per_rack_alpha: BTreeMap<usize, usize>,
    pub bound_bw: usize,
    pub bound_access: String,
    pub optimal_bw: bool,
    pub optimal_access: bool,
    pub ratio: String,
    pub ratio_value: f64,
    pub exact: bool,
}

pub fn ratio_string(r: &Ratio<u64>) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl RepairResult {
    pub fn ledger(&self) -> RepairLedger {
        RepairLedger {
            bandwidth: self.bandwidth,
            access: self.access,
            per_rack_alpha: self.per_rack_alpha.clone(),
            bound_bw: self.bound_bw,
            bound_access: ratio_string(&self.bound_access),
            optimal_bw: self.optimal_bw,
            optimal_access: self.optimal_access,
            ratio: ratio_string(&self.ratio),
            ratio_value: *self.ratio.numer() as f64 / *self.ratio.denom() as f64,
            exact: self.exact,
        }
    }
}

/// Runs the whole scheme on `word`, treating the planned nodes as lost.
pub fn repair(code: &RackCode, word: &Codeword, plan: &RepairPlan) -> Result<RepairResult, RepairError> {
    let p = &code.params;
    code.check_word(word)?;
    let mut survivors = word.clone();
    for &g in &plan.failed {
        survivors.nodes[plan.host * p.u + g] = vec![Felt::ZERO; p.l];
    }
    let mut per_rack_alpha = BTreeMap::new();
    let mut read: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut bandwidth = 0;
    let mut folded = Vec::with_capacity(plan.h());
    for (w, racks) in &plan.schedule {
        let mut payloads = Vec::with_capacity(racks.len());
        for &j in racks {
            let pl = helper_payload(code, &survivors, j, plan, *w)?;
            bandwidth += pl.symbols.len();
            *per_rack_alpha.entry(j).or_insert(0) += pl.symbols.len();
            for g in 0..p.u {
                read.extend(pl.coords.iter().map(|&c| (j * p.u + g, c)));
            }
            payloads.push(pl);
        }
        folded.push(recover_folded(code, plan, *w, &payloads)?);
    }
    let local: Vec<(usize, Vec<Felt>)> =
        plan.local.iter().map(|&g| (g, survivors.nodes[plan.host * p.u + g].clone())).collect();
    let recovered = finish(code, plan, &folded, &local)?;
    let exact = recovered.iter().all(|(i, c)| &word.nodes[*i] == c);
    let bound_bw = p.bandwidth_bound(plan.h())?;
    let bound_access = p.access_bound(plan.h())?;
    let access = read.len();
    Ok(RepairResult {
        recovered,
        bandwidth,
        access,
        per_rack_alpha,
        bound_bw,
        bound_access,
        optimal_bw: bandwidth == bound_bw,
        optimal_access: Ratio::from_integer(access as u64) == bound_access,
        ratio: Ratio::new(bandwidth as u64, bound_bw as u64),
        exact,
    })
}
