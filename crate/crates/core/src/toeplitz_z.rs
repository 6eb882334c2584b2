//! Williams' inductive Toeplitz construction over Z.

use serde::Serialize;

use crate::array::{Cell, Family, Patch, Symbol, ToeplitzArray, Window};
use crate::error::{Error, Result};
use crate::lattice::{Chain, GroupElement, GroupSpec};
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WilliamsParams {
    pub m: usize,
    pub periods: Vec<i64>,
}

impl WilliamsParams {
    pub fn new(m: usize, periods: Vec<i64>) -> Result<Self> {
        let p = WilliamsParams { m, periods };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 || self.m > 255 {
            return Err(Error::spec(format!("alphabet size must be in 2..=255, got {}", self.m)));
        }
        let p = &self.periods;
        if p.is_empty() {
            return Err(Error::spec("need at least one period"));
        }
        if p[0] < 3 {
            return Err(Error::spec(format!("p_1 must be at least 3, got {}", p[0])));
        }
        for w in p.windows(2) {
            if w[1] % w[0] != 0 || w[1] / w[0] < 3 {
                return Err(Error::spec(format!("p_i = {} must divide p_(i+1) = {} with ratio ≥ 3", w[0], w[1])));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.periods.len()
    }

    /// α_i = i mod m.
    pub fn symbol(&self, level: usize) -> Symbol {
        (level % self.m) as Symbol
    }
}

#[derive(Clone, Debug)]
pub struct WilliamsArray {
    params: WilliamsParams,
    chain: Chain,
}

impl WilliamsArray {
    pub fn new(params: WilliamsParams) -> Result<Self> {
        params.validate()?;
        let moduli = params.periods.iter().map(|&p| vec![p]).collect();
        let chain = Chain::centered(GroupSpec::lattice(1)?, moduli, false)?;
        Ok(WilliamsArray { params, chain })
    }

    pub fn params(&self) -> &WilliamsParams {
        &self.params
    }

    /// Defining step of position n, if it is reached within the configured periods.
    pub fn level(&self, n: i64) -> Option<usize> {
        let p = &self.params.periods;
        let r = n.rem_euclid(p[0]);
        if r == 0 || r == p[0] - 1 {
            return Some(1);
        }
        for i in 1..p.len() {
            let ratio = p[i] / p[i - 1];
            let k = n.div_euclid(p[i - 1]).rem_euclid(ratio);
            if k == 0 || k == ratio - 1 {
                return Some(i + 1);
            }
        }
        None
    }

    pub fn value(&self, n: i64) -> Option<Symbol> {
        self.level(n).map(|l| self.params.symbol(l))
    }
}

impl ToeplitzArray for WilliamsArray {
    fn chain(&self) -> &Chain {
        &self.chain
    }

    fn alphabet(&self) -> Vec<Symbol> {
        (0..self.params.m as Symbol).collect()
    }

    fn step_symbols(&self) -> Vec<Symbol> {
        self.alphabet()
    }

    fn cell(&self, g: &GroupElement) -> Option<Cell> {
        self.level(g.v[0]).map(|l| Cell { symbol: self.params.symbol(l), level: l as u32 })
    }

    fn family(&self) -> Family {
        Family::Williams
    }
}

/// η on [-n, n], filled step by step exactly as the construction prescribes.
pub fn williams_generate(params: &WilliamsParams, n: i64) -> Result<Patch> {
    params.validate()?;
    if n < params.periods[0] {
        return Err(Error::Config(format!("window radius {n} must be at least p_1 = {}", params.periods[0])));
    }
    let window = Window::interval(n);
    let mut cells: Vec<Option<Cell>> = vec![None; window.len()];
    let idx = |x: i64| (x + n) as usize;
    let p = &params.periods;
    let fill = |x: i64, level: usize, cells: &mut Vec<Option<Cell>>| -> Result<()> {
        if x < -n || x > n {
            return Ok(());
        }
        let slot = &mut cells[idx(x)];
        if slot.is_none() {
            *slot = Some(Cell { symbol: params.symbol(level), level: level as u32 });
        } else if level == 1 {
            return Err(Error::invariant(format!("step 1 revisits position {x}")));
        }
        Ok(())
    };
    // Step 1: n ≡ 0 or -1 mod p_1.
    for x in -n..=n {
        let r = x.rem_euclid(p[0]);
        if r == 0 || r == p[0] - 1 {
            fill(x, 1, &mut cells)?;
        }
    }
    // Step i+1: undefined positions of J(i,k) = [k p_i + 1, (k+1) p_i - 1) with k ≡ 0, -1 mod p_{i+1}/p_i.
    for i in 1..p.len() {
        let (pi, ratio) = (p[i - 1], p[i] / p[i - 1]);
        let k_lo = (-n).div_euclid(pi) - 1;
        let k_hi = n.div_euclid(pi) + 1;
        for k in k_lo..=k_hi {
            let km = k.rem_euclid(ratio);
            if km != 0 && km != ratio - 1 {
                continue;
            }
            for x in k * pi + 1..(k + 1) * pi - 1 {
                fill(x, i + 1, &mut cells)?;
            }
        }
    }
    Ok(Patch { window, cells })
}

/// Partial sums of Σ p_i / p_{i+1}.
pub fn convergence_diag(params: &WilliamsParams) -> Vec<Rational> {
    let mut acc = Rational::from_integer(0);
    params
        .periods
        .windows(2)
        .map(|w| {
            acc += Rational::new(w[0] as i128, w[1] as i128);
            acc
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ZSummary {
    pub radius: i64,
    pub undefined: usize,
    pub undefined_bound: Rational,
    pub level_counts: Vec<usize>,
    pub partial_sums: Vec<Rational>,
    pub aperiodic_shift_free: bool,
}

pub fn summarize(params: &WilliamsParams, patch: &Patch) -> ZSummary {
    let n = patch.window.upper()[0] - 1;
    let mut level_counts = vec![0; params.depth()];
    for c in patch.cells.iter().flatten() {
        level_counts[c.level as usize - 1] += 1;
    }
    let pk = *params.periods.last().unwrap();
    let blocks = (n.div_euclid(pk) - (-n).div_euclid(pk) + 1) as i128;
    let undefined_bound = Rational::new(2 * blocks * (pk as i128 - 2), (2 * n + 1) as i128);
    ZSummary {
        radius: n,
        undefined: patch.undefined_count(),
        undefined_bound,
        level_counts,
        partial_sums: convergence_diag(params),
        aperiodic_shift_free: shift_free(patch, n / 2),
    }
}

/// True when no shift 0 < t ≤ max_shift fixes the patch on its overlap (defined pairs only).
pub fn shift_free(patch: &Patch, max_shift: i64) -> bool {
    let syms = patch.symbols();
    let len = syms.len();
    (1..=max_shift as usize).all(|t| {
        (0..len.saturating_sub(t)).any(|k| matches!((syms[k], syms[k + t]), (Some(a), Some(b)) if a != b))
    })
}
