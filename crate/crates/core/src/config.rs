//! Experiment decks: a single TOML file fixes the group, the chain, the construction and the
//! run parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::{Family, ToeplitzArray};
use crate::error::{Error, Result};
use crate::homomorphism::HomSpec;
use crate::lattice::{Chain, DomainChain, GroupSpec, Matrix, SubgroupChain};
use crate::toeplitz_g::{GroupToeplitz, Variant};
use crate::toeplitz_z::{WilliamsArray, WilliamsParams};

pub const BUNDLED: &[(&str, &str)] = &[
    ("williams-m2", include_str!("../decks/williams-m2.toml")),
    ("williams-m3", include_str!("../decks/williams-m3.toml")),
    ("z2-m2", include_str!("../decks/z2-m2.toml")),
    ("dihedral-m2", include_str!("../decks/dihedral-m2.toml")),
    ("swap-m2", include_str!("../decks/swap-m2.toml")),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub rank: usize,
    /// Multiplication table of F; omitted for F trivial.
    #[serde(default)]
    pub table: Option<Vec<Vec<usize>>>,
    /// M_f as integer rows, one matrix per element of F.
    #[serde(default)]
    pub action: Option<Vec<Vec<Vec<i64>>>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offsets {
    Auto(String),
    Explicit(Vec<Vec<i64>>),
}

impl Default for Offsets {
    fn default() -> Self {
        Offsets::Auto("auto".into())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub moduli: Vec<Vec<i64>>,
    #[serde(default)]
    pub offsets: Offsets,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WilliamsConfig {
    pub periods: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// N for μ_N.
    #[serde(default = "defaults::measure_level")]
    pub measure_level: usize,
    #[serde(default = "defaults::fiber_depth")]
    pub fiber_depth: usize,
    /// Oracle for fibers: D_level R for group decks, [-p_level, p_level] for Williams decks.
    #[serde(default = "defaults::oracle_level")]
    pub fiber_oracle_level: usize,
    #[serde(default = "defaults::oracle_level")]
    pub independence_oracle_level: usize,
    /// J ⊆ B(0, radius)R.
    pub independence_radius: i64,
    /// Target |J| for the single-site symbol cylinders.
    pub independence_size: usize,
    #[serde(default = "defaults::complexity_radii")]
    pub complexity_radii: Vec<i64>,
    #[serde(default = "defaults::complexity_window")]
    pub complexity_window: i64,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    #[serde(default = "defaults::node_budget")]
    pub node_budget: u64,
    /// Z_{i,k} masses are checked for every (i, k, s) listed here.
    #[serde(default)]
    pub z_mass: Vec<[usize; 3]>,
    #[serde(default = "defaults::samples")]
    pub samples: usize,
}

mod defaults {
    pub fn measure_level() -> usize {
        4
    }
    pub fn fiber_depth() -> usize {
        2
    }
    pub fn oracle_level() -> usize {
        4
    }
    pub fn complexity_radii() -> Vec<i64> {
        (2..=8).collect()
    }
    pub fn complexity_window() -> i64 {
        200_000
    }
    pub fn seed() -> u64 {
        0x5eed_7e0b
    }
    pub fn node_budget() -> u64 {
        20_000_000
    }
    pub fn samples() -> usize {
        100
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckConfig {
    pub name: String,
    pub family: Family,
    pub m: usize,
    #[serde(default)]
    pub group: Option<GroupConfig>,
    #[serde(default)]
    pub chain: Option<ChainConfig>,
    #[serde(default)]
    pub williams: Option<WilliamsConfig>,
    #[serde(default)]
    pub hom: Option<HomSpec>,
    pub run: RunConfig,
}

/// A validated deck with its array built.
pub struct Deck {
    pub config: DeckConfig,
    pub array: DeckArray,
}

pub enum DeckArray {
    Williams(WilliamsArray),
    Group(GroupToeplitz),
}

impl DeckConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn bundled(name: &str) -> Result<Self> {
        let (_, text) = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| Error::Config(format!("no bundled deck named {name:?}")))?;
        Self::parse(text)
    }

    fn group(&self) -> Result<GroupSpec> {
        let g = self.group.as_ref().ok_or_else(|| Error::Config("[group] is required for group decks".into()))?;
        match (&g.table, &g.action) {
            (None, None) => GroupSpec::lattice(g.rank),
            (Some(table), Some(action)) => {
                let mats = action.iter().map(|rows| Matrix::from_rows(rows)).collect::<Result<Vec<_>>>()?;
                GroupSpec::new(g.rank, table.clone(), mats)
            }
            _ => Err(Error::Config("[group] needs both `table` and `action`, or neither".into())),
        }
    }

    pub fn build(self) -> Result<Deck> {
        let array = match self.family {
            Family::Williams => {
                let w = self.williams.as_ref().ok_or_else(|| Error::Config("[williams] is required".into()))?;
                DeckArray::Williams(WilliamsArray::new(WilliamsParams::new(self.m, w.periods.clone())?)?)
            }
            Family::Normal | Family::Virtual => {
                let group = self.group()?;
                let c = self.chain.as_ref().ok_or_else(|| Error::Config("[chain] is required for group decks".into()))?;
                let subgroups = SubgroupChain::new(group.rank(), c.moduli.clone())?;
                let domains = match &c.offsets {
                    Offsets::Auto(s) if s == "auto" => DomainChain::centered(&subgroups, true)?,
                    Offsets::Auto(s) => return Err(Error::Config(format!("offsets must be \"auto\" or a list, got {s:?}"))),
                    Offsets::Explicit(q) => DomainChain::from_offsets(&subgroups, q.clone(), true)?,
                };
                let variant = if self.family == Family::Normal { Variant::Normal } else { Variant::Virtual };
                DeckArray::Group(GroupToeplitz::new(Chain::new(group, subgroups, domains)?, self.m, variant)?)
            }
        };
        if let Some(h) = &self.hom {
            if h.w.len() != array.as_dyn().chain().rank() {
                return Err(Error::Config("hom.w must have one entry per lattice coordinate".into()));
            }
        }
        let depth = array.as_dyn().chain().depth();
        let r = &self.run;
        for (what, level) in [
            ("measure_level", r.measure_level + 1),
            ("fiber_depth", r.fiber_depth),
            ("fiber_oracle_level", r.fiber_oracle_level + 1),
            ("independence_oracle_level", r.independence_oracle_level + 1),
        ] {
            let needed = if matches!(array, DeckArray::Williams(_)) && what.ends_with("oracle_level") { level - 1 } else { level };
            if needed > depth || level == 0 {
                return Err(Error::Config(format!("run.{what} needs {needed} levels, the chain has {depth}")));
            }
        }
        if r.independence_size == 0 || r.independence_radius < 0 {
            return Err(Error::Config("run.independence_size must be positive".into()));
        }
        Ok(Deck { config: self, array })
    }
}

impl DeckArray {
    pub fn as_dyn(&self) -> &dyn ToeplitzArray {
        match self {
            DeckArray::Williams(w) => w,
            DeckArray::Group(g) => g,
        }
    }

    pub fn group_toeplitz(&self) -> Option<&GroupToeplitz> {
        match self {
            DeckArray::Group(g) => Some(g),
            DeckArray::Williams(_) => None,
        }
    }
}

impl Deck {
    pub fn load_bundled(name: &str) -> Result<Deck> {
        DeckConfig::bundled(name)?.build()
    }

    pub fn name(&self) -> &str {
        &self.config.name
    }

    pub fn array(&self) -> &dyn ToeplitzArray {
        self.array.as_dyn()
    }
}
