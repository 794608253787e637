//! Code parameters, their derivation, and closed-form bounds.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    T1,
    T2,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamError {
    #[error("u must be at least 1")]
    ZeroU,
    #[error("u={u} does not divide n={n}")]
    UDoesNotDivideN { n: usize, u: usize },
    #[error("k={k} must satisfy 1 <= k < n={n}")]
    BadK { n: usize, k: usize },
    #[error("u={u} exceeds k={k}")]
    UExceedsK { u: usize, k: usize },
    #[error("u={u} exceeds n-k={r}")]
    UExceedsR { u: usize, r: usize },
    #[error("d̄={d_bar} must be at least k̄+1={min}")]
    DBarTooSmall { d_bar: usize, min: usize },
    #[error("d̄={d_bar} must be at most n̄-1={max}")]
    DBarTooLarge { d_bar: usize, max: usize },
    #[error("sub-packetization {s}^{n_tilde} is too large")]
    SubPacketization { s: usize, n_tilde: usize },
    #[error("h={h} outside [1, {h_max}]")]
    HOutOfRange { h: usize, h_max: usize },
}

impl ParamError {
    /// Stable numeric code per violated invariant.
    pub fn code(&self) -> u32 {
        match self {
            ParamError::ZeroU => 10,
            ParamError::UDoesNotDivideN { .. } => 11,
            ParamError::BadK { .. } => 12,
            ParamError::UExceedsK { .. } => 13,
            ParamError::UExceedsR { .. } => 14,
            ParamError::DBarTooSmall { .. } => 15,
            ParamError::DBarTooLarge { .. } => 16,
            ParamError::SubPacketization { .. } => 17,
            ParamError::HOutOfRange { .. } => 18,
        }
    }
}

/// Raw inputs, as they appear in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawParams {
    pub n: usize,
    pub k: usize,
    pub u: usize,
    pub d_bar: usize,
    pub theorem: Theorem,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub u: usize,
    pub n_bar: usize,
    pub k_bar: usize,
    pub v: usize,
    pub d_bar: usize,
    pub s: usize,
    pub r: usize,
    pub r_bar: usize,
    pub theorem: Theorem,
    /// Racks per group: s̄ for T1, s̄+1 for T2.
    pub group: usize,
    pub n_tilde: usize,
    pub l: usize,
    pub l_bar: usize,
    /// Rack count of the unshortened parent code.
    pub parent_n_bar: usize,
    pub h_max: usize,
}

const MAX_L: usize = 1 << 12;

impl CodeParams {
    pub fn derive(n: usize, k: usize, u: usize, d_bar: usize, theorem: Theorem) -> Result<CodeParams, ParamError> {
        if u == 0 {
            return Err(ParamError::ZeroU);
        }
        if k == 0 || k >= n {
            return Err(ParamError::BadK { n, k });
        }
        if u > n - k {
            return Err(ParamError::UExceedsR { u, r: n - k });
        }
        if u > k {
            return Err(ParamError::UExceedsK { u, k });
        }
        if !n.is_multiple_of(u) {
            return Err(ParamError::UDoesNotDivideN { n, u });
        }
        let n_bar = n / u;
        let (k_bar, v) = (k / u, k % u);
        if d_bar < k_bar + 1 {
            return Err(ParamError::DBarTooSmall { d_bar, min: k_bar + 1 });
        }
        if d_bar > n_bar - 1 {
            return Err(ParamError::DBarTooLarge { d_bar, max: n_bar - 1 });
        }
        let s = d_bar - k_bar + 1;
        let group = match theorem {
            Theorem::T1 => s,
            Theorem::T2 => s + 1,
        };
        let n_tilde = n_bar.div_ceil(group);
        let l =
            s.checked_pow(n_tilde as u32).filter(|&l| l <= MAX_L).ok_or(ParamError::SubPacketization { s, n_tilde })?;
        Ok(CodeParams {
            n,
            k,
            u,
            n_bar,
            k_bar,
            v,
            d_bar,
            s,
            r: n - k,
            r_bar: n_bar - k_bar,
            theorem,
            group,
            n_tilde,
            l,
            l_bar: l / s,
            parent_n_bar: group * n_tilde,
            h_max: u.min(s * u - v),
        })
    }

    pub fn from_raw(raw: &RawParams) -> Result<CodeParams, ParamError> {
        CodeParams::derive(raw.n, raw.k, raw.u, raw.d_bar, raw.theorem)
    }

    pub fn raw(&self) -> RawParams {
        RawParams { n: self.n, k: self.k, u: self.u, d_bar: self.d_bar, theorem: self.theorem }
    }

    pub fn is_shortened(&self) -> bool {
        self.parent_n_bar > self.n_bar
    }

    /// Group digit and in-group position of a rack.
    pub fn rack_position(&self, rack: usize) -> (usize, usize) {
        (rack / self.group, rack % self.group)
    }

    /// Folded parity height factor at w: r̄ for w < u−v, r̄−1 after.
    pub fn folded_rows(&self, w: usize) -> usize {
        if w < self.u - self.v {
            self.r_bar
        } else {
            self.r_bar - 1
        }
    }

    fn check_h(&self, h: usize) -> Result<(), ParamError> {
        if h == 0 || h > self.h_max {
            return Err(ParamError::HOutOfRange { h, h_max: self.h_max });
        }
        Ok(())
    }

    /// d̄·h·l/s̄
    pub fn bandwidth_bound(&self, h: usize) -> Result<usize, ParamError> {
        self.check_h(h)?;
        Ok(self.d_bar * h * self.l_bar)
    }

    /// d̄·h·u·l/(s̄(u−v)) as an exact fraction.
    pub fn access_bound(&self, h: usize) -> Result<Ratio<u64>, ParamError> {
        self.check_h(h)?;
        let num = (self.d_bar * h * self.u * self.l) as u64;
        Ok(Ratio::new(num, (self.s * (self.u - self.v)) as u64))
    }

    /// Bandwidth the scheme itself uses: the bound, plus one extra rack's
    /// l̄ symbols for every w in [u−v, h).
    pub fn scheme_bandwidth(&self, h: usize) -> Result<usize, ParamError> {
        let extra = h.saturating_sub(self.u - self.v);
        Ok(self.bandwidth_bound(h)? + extra * self.l_bar)
    }

    /// Sufficient field size from the existence argument.
    pub fn field_threshold(&self) -> u128 {
        let (n, s, u) = (self.n as u128, self.s as u64, self.u as u64);
        let tail = match self.theorem {
            Theorem::T1 => omega(s, u) + (s as u128 - 1) * (1u128 << (s - 2)),
            Theorem::T2 => omega(s + 1, u) + s as u128 * (1u128 << (s - 1)),
        };
        n * s as u128 + u as u128 * tail
    }
}

pub(crate) fn binom(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Ω(s̄,u) = ½ Σ_{t=1}^{s̄} Σ_{δ=t}^{ut} C(s̄−1,t−1) C(ut,δ) C(δ−1,t−1) (δ−t+1)(δ+t−2).
pub fn omega(s: u64, u: u64) -> u128 {
    let mut total = 0u128;
    for t in 1..=s {
        for delta in t..=u * t {
            total += binom(s - 1, t - 1)
                * binom(u * t, delta)
                * binom(delta - 1, t - 1)
                * (delta - t + 1) as u128
                * (delta + t - 2) as u128;
        }
    }
    total / 2
}
