//! Per-bundle summary rows with measured repair ratios.

use clap::ValueEnum;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use rackmsr::codes::RackCode;
use rackmsr::repair::{self, ratio_string, RepairError};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub theorem: String,
    pub n: usize,
    pub k: usize,
    pub u: usize,
    pub d_bar: usize,
    pub s: usize,
    pub l: usize,
    pub q: u32,
    pub h: usize,
    pub bandwidth: usize,
    pub access: usize,
    pub bandwidth_ratio: String,
    pub access_ratio: String,
}

pub const COLUMNS: [&str; 13] =
    ["theorem", "n", "k", "u", "d_bar", "s", "l", "q", "h", "bandwidth", "access", "bandwidth_ratio", "access_ratio"];

/// Repairs h = u−v nodes of rack 0 from the next d̄ racks on a seeded
/// random codeword and compares against the bounds.
pub fn measure(code: &RackCode, seed: u64) -> Result<Row, RepairError> {
    let p = &code.params;
    let h = p.u - p.v;
    let failed: Vec<usize> = (0..h).collect();
    let helpers: Vec<usize> = (1..=p.d_bar).collect();
    let plan = repair::plan(code, 0, &failed, &helpers, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = code.encode(&code.random_message(&mut rng))?;
    let res = repair::repair(code, &word, &plan)?;
    Ok(Row {
        theorem: format!("{:?}", p.theorem),
        n: p.n,
        k: p.k,
        u: p.u,
        d_bar: p.d_bar,
        s: p.s,
        l: p.l,
        q: code.field.q(),
        h,
        bandwidth: res.bandwidth,
        access: res.access,
        bandwidth_ratio: ratio_string(&res.ratio),
        access_ratio: ratio_string(&(Ratio::from_integer(res.access as u64) / res.bound_access)),
    })
}

fn cells(r: &Row) -> [String; 13] {
    [
        r.theorem.clone(),
        r.n.to_string(),
        r.k.to_string(),
        r.u.to_string(),
        r.d_bar.to_string(),
        r.s.to_string(),
        r.l.to_string(),
        r.q.to_string(),
        r.h.to_string(),
        r.bandwidth.to_string(),
        r.access.to_string(),
        r.bandwidth_ratio.clone(),
        r.access_ratio.clone(),
    ]
}

/// Whitespace-aligned table, header first.
pub fn render_text(rows: &[Row]) -> String {
    let body: Vec<[String; 13]> = rows.iter().map(cells).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|c| body.iter().map(|r| r[c].len()).chain([COLUMNS[c].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(COLUMNS.to_vec());
    for r in &body {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}
