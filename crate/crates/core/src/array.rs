//! Finite windows, patches and the common interface of Toeplitz arrays.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{box_points, Chain, GroupElement, GroupSpec, Vector, MAX_RANK};

pub type Symbol = u8;

/// The extra symbol of the virtually-abelian construction.
pub const BETA: Symbol = 0;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize)]
pub struct Cell {
    pub symbol: Symbol,
    pub level: u32,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Williams,
    Normal,
    Virtual,
}

pub trait ToeplitzArray: Sync {
    fn chain(&self) -> &Chain;

    fn alphabet(&self) -> Vec<Symbol>;

    /// Symbols that the construction steps write (everything except β).
    fn step_symbols(&self) -> Vec<Symbol>;

    /// Symbol and defining level; `None` when the configured depth does not reach `g`.
    fn cell(&self, g: &GroupElement) -> Option<Cell>;

    fn family(&self) -> Family;

    fn group(&self) -> &GroupSpec {
        &self.chain().group
    }
}

/// Result of reading a configuration at one position.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Lookup {
    Outside,
    Undefined,
    Symbol(Symbol),
}

impl Lookup {
    pub fn symbol(self) -> Option<Symbol> {
        match self {
            Lookup::Symbol(s) => Some(s),
            _ => None,
        }
    }
}

/// A (partial) configuration G → Σ.
pub trait Configuration: Sync {
    fn lookup(&self, g: &GroupElement) -> Lookup;
}

impl<T: ToeplitzArray + ?Sized> Configuration for T {
    fn lookup(&self, g: &GroupElement) -> Lookup {
        match self.cell(g) {
            Some(c) => Lookup::Symbol(c.symbol),
            None => Lookup::Undefined,
        }
    }
}

/// Box of lattice points lo ≤ v < hi on finite-part sheets 0..sheets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Window {
    rank: usize,
    lo: Vector,
    hi: Vector,
    sheets: usize,
}

impl Window {
    pub fn new(rank: usize, lo: &[i64], hi: &[i64], sheets: usize) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK || lo.len() != rank || hi.len() != rank || sheets == 0 {
            return Err(Error::spec("malformed window"));
        }
        let mut l = [0; MAX_RANK];
        let mut h = [0; MAX_RANK];
        l[..rank].copy_from_slice(lo);
        h[..rank].copy_from_slice(hi);
        if (0..rank).any(|j| l[j] >= h[j]) {
            return Err(Error::spec("empty window"));
        }
        Ok(Window { rank, lo: l, hi: h, sheets })
    }

    /// B(0, n) on `sheets` sheets.
    pub fn ball(rank: usize, n: i64, sheets: usize) -> Self {
        let lo = vec![-n; rank];
        let hi = vec![n + 1; rank];
        Window::new(rank, &lo, &hi, sheets).expect("ball is nonempty")
    }

    /// D_i on all sheets (D_iR) or on the identity sheet only.
    pub fn domain(chain: &Chain, i: usize, with_r: bool) -> Result<Self> {
        let (lo, hi) = chain.domain_box(i)?;
        let r = chain.rank();
        Window::new(r, &lo[..r], &hi[..r], if with_r { chain.finite_order() } else { 1 })
    }

    /// Interval [-n, n] in Z.
    pub fn interval(n: i64) -> Self {
        Window::ball(1, n, 1)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn sheets(&self) -> usize {
        self.sheets
    }

    pub fn lower(&self) -> &[i64] {
        &self.lo[..self.rank]
    }

    pub fn upper(&self) -> &[i64] {
        &self.hi[..self.rank]
    }

    pub fn side(&self, j: usize) -> usize {
        (self.hi[j] - self.lo[j]) as usize
    }

    pub fn lattice_len(&self) -> usize {
        (0..self.rank).map(|j| self.side(j)).product()
    }

    pub fn len(&self) -> usize {
        self.lattice_len() * self.sheets
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, g: &GroupElement) -> Option<usize> {
        let f = g.finite();
        if f >= self.sheets {
            return None;
        }
        let mut idx = f;
        for j in 0..self.rank {
            let x = g.v[j];
            if x < self.lo[j] || x >= self.hi[j] {
                return None;
            }
            idx = idx * self.side(j) + (x - self.lo[j]) as usize;
        }
        Some(idx)
    }

    pub fn contains(&self, g: &GroupElement) -> bool {
        self.index(g).is_some()
    }

    pub fn element(&self, mut idx: usize) -> GroupElement {
        let mut v = [0; MAX_RANK];
        for j in (0..self.rank).rev() {
            let s = self.side(j);
            v[j] = self.lo[j] + (idx % s) as i64;
            idx /= s;
        }
        GroupElement { f: idx as u16, v, rank: self.rank as u8 }
    }

    /// Elements in canonical order (finite part, then lexicographic).
    pub fn elements(&self) -> impl Iterator<Item = GroupElement> + '_ {
        (0..self.sheets).flat_map(move |f| {
            box_points(self.rank, &self.lo, &self.hi)
                .map(move |v| GroupElement { f: f as u16, v, rank: self.rank as u8 })
        })
    }

    /// The window shrunk by `by` on every side.
    pub fn shrink(&self, by: i64) -> Option<Window> {
        let lo: Vec<i64> = self.lower().iter().map(|x| x + by).collect();
        let hi: Vec<i64> = self.upper().iter().map(|x| x - by).collect();
        Window::new(self.rank, &lo, &hi, self.sheets).ok()
    }
}

/// Values of a configuration on a window; `None` marks undefined cells.
#[derive(Clone, Debug)]
pub struct Patch {
    pub window: Window,
    pub cells: Vec<Option<Cell>>,
}

impl Patch {
    pub fn from_array<A: ToeplitzArray + ?Sized>(array: &A, window: Window) -> Patch {
        let cells = (0..window.len()).into_par_iter().map(|k| array.cell(&window.element(k))).collect();
        Patch { window, cells }
    }

    pub fn get(&self, g: &GroupElement) -> Option<Option<Cell>> {
        self.window.index(g).map(|k| self.cells[k])
    }

    pub fn symbol(&self, g: &GroupElement) -> Option<Symbol> {
        self.get(g).flatten().map(|c| c.symbol)
    }

    pub fn undefined_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_none()).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (GroupElement, Option<Cell>)> + '_ {
        self.window.elements().zip(self.cells.iter().copied())
    }

    /// Symbols only, for pattern comparison.
    pub fn symbols(&self) -> Vec<Option<Symbol>> {
        self.cells.iter().map(|c| c.map(|c| c.symbol)).collect()
    }
}

impl Configuration for Patch {
    fn lookup(&self, g: &GroupElement) -> Lookup {
        match self.get(g) {
            None => Lookup::Outside,
            Some(None) => Lookup::Undefined,
            Some(Some(c)) => Lookup::Symbol(c.symbol),
        }
    }
}

/// Symbols-only configuration on a window, the form used for language oracles.
#[derive(Clone, Debug)]
pub struct SymbolPatch {
    pub window: Window,
    pub symbols: Vec<Option<Symbol>>,
}

impl SymbolPatch {
    pub fn from_config<C: Configuration + ?Sized>(config: &C, window: Window) -> SymbolPatch {
        let symbols = (0..window.len()).into_par_iter().map(|k| config.lookup(&window.element(k)).symbol()).collect();
        SymbolPatch { window, symbols }
    }

    #[inline]
    pub fn at_index(&self, k: usize) -> Option<Symbol> {
        self.symbols[k]
    }
}

impl From<&Patch> for SymbolPatch {
    fn from(p: &Patch) -> Self {
        SymbolPatch { window: p.window.clone(), symbols: p.symbols() }
    }
}

impl Configuration for SymbolPatch {
    fn lookup(&self, g: &GroupElement) -> Lookup {
        match self.window.index(g) {
            None => Lookup::Outside,
            Some(k) => match self.symbols[k] {
                Some(s) => Lookup::Symbol(s),
                None => Lookup::Undefined,
            },
        }
    }
}

/// σ^g x, read as (σ^g x)(h) = x(g^{-1} h).
pub struct Shifted<'a, C: Configuration + ?Sized> {
    pub group: &'a GroupSpec,
    pub inner: &'a C,
    g_inv: GroupElement,
}

impl<'a, C: Configuration + ?Sized> Shifted<'a, C> {
    pub fn new(group: &'a GroupSpec, inner: &'a C, g: &GroupElement) -> Self {
        Shifted { group, inner, g_inv: group.inv(g) }
    }
}

impl<C: Configuration + ?Sized> Configuration for Shifted<'_, C> {
    fn lookup(&self, h: &GroupElement) -> Lookup {
        self.inner.lookup(&self.group.op(&self.g_inv, h))
    }
}
