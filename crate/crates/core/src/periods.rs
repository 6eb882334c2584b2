//! Per and Aper sets, odometer coordinates, T_ζ pieces and fibers of the factor map.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::array::{Configuration, Family, Lookup, Symbol, SymbolPatch, ToeplitzArray, Window};
use crate::error::{Error, Result};
use crate::lattice::{Chain, GroupElement, GroupSpec};

/// The subgroup t^{-1} Γ_level t (t = identity when `conj` is `None`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Subgroup {
    pub level: usize,
    pub conj: Option<GroupElement>,
}

impl Subgroup {
    pub fn level(level: usize) -> Self {
        Subgroup { level, conj: None }
    }

    pub fn conjugated(level: usize, t: GroupElement) -> Self {
        Subgroup { level, conj: Some(t) }
    }

    pub fn contains(&self, chain: &Chain, c: &GroupElement) -> bool {
        let c = match &self.conj {
            Some(t) => chain.group.conjugate(t, c),
            None => *c,
        };
        chain.member_gamma(&c, self.level).unwrap_or(false)
    }

    /// g^{-1} H g.
    pub fn conjugate_by(&self, group: &GroupSpec, g: &GroupElement) -> Subgroup {
        let t = self.conj.unwrap_or_else(|| group.identity());
        Subgroup { level: self.level, conj: Some(group.op(&t, g)) }
    }
}

/// Per(η, Γ_i, α) restricted to `region`, read off the level map.
pub fn per_set_exact<A: ToeplitzArray + ?Sized>(
    array: &A,
    i: usize,
    alpha: Symbol,
    region: impl IntoIterator<Item = GroupElement>,
) -> Vec<GroupElement> {
    region
        .into_iter()
        .filter(|g| matches!(array.cell(g), Some(c) if c.level as usize <= i && c.symbol == alpha))
        .collect()
}

/// Window-relative Per: h is kept when x(γ^{-1}h) = α for every γ ∈ H with γ^{-1}h in `support`.
/// This is a superset of the true Per set restricted to `region`.
pub fn per_set_empirical<C: Configuration + ?Sized>(
    chain: &Chain,
    x: &C,
    support: &[GroupElement],
    subgroup: &Subgroup,
    alpha: Symbol,
    region: &[GroupElement],
) -> Vec<GroupElement> {
    let g = &chain.group;
    let inv: Vec<GroupElement> = support.iter().map(|w| g.inv(w)).collect();
    region
        .par_iter()
        .filter(|h| {
            support.iter().zip(&inv).all(|(w, wi)| {
                !subgroup.contains(chain, &g.op(h, wi)) || x.lookup(w) == Lookup::Symbol(alpha)
            })
        })
        .copied()
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjugationCheck {
    pub holds: bool,
    pub lhs_size: usize,
    pub rhs_size: usize,
}

/// Per(σ^g x, H, α) = g·Per(x, g^{-1}Hg, α), both sides window-relative on g·support.
pub fn conjugation_identity_check<C: Configuration + ?Sized>(
    chain: &Chain,
    x: &C,
    support: &[GroupElement],
    g: &GroupElement,
    subgroup: &Subgroup,
    alpha: Symbol,
) -> ConjugationCheck {
    let grp = &chain.group;
    let shifted = crate::array::Shifted::new(grp, x, g);
    let moved: Vec<GroupElement> = support.iter().map(|w| grp.op(g, w)).collect();
    let lhs: HashSet<GroupElement> = per_set_empirical(chain, &shifted, &moved, subgroup, alpha, &moved).into_iter().collect();
    let inner = subgroup.conjugate_by(grp, g);
    let rhs: HashSet<GroupElement> = per_set_empirical(chain, x, support, &inner, alpha, support)
        .into_iter()
        .map(|h| grp.op(g, &h))
        .collect();
    ConjugationCheck { holds: lhs == rhs, lhs_size: lhs.len(), rhs_size: rhs.len() }
}

/// Representatives t_1..t_K of the right cosets Γ_i g, t_i ∈ D_iR.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct OdometerCoords {
    pub reps: Vec<GroupElement>,
}

impl OdometerCoords {
    pub fn depth(&self) -> usize {
        self.reps.len()
    }

    /// t_i for 1 ≤ i ≤ K.
    pub fn rep(&self, i: usize) -> &GroupElement {
        &self.reps[i - 1]
    }

    pub fn deepest(&self) -> &GroupElement {
        self.reps.last().expect("coords have depth ≥ 1")
    }

    pub fn validate(&self, chain: &Chain) -> Result<()> {
        if self.reps.is_empty() || self.reps.len() > chain.depth() {
            return Err(Error::LevelOutOfRange { level: self.reps.len(), max: chain.depth() });
        }
        for (k, t) in self.reps.iter().enumerate() {
            chain.group.conforms(t)?;
            if !chain.in_domain_r(t, k + 1) {
                return Err(Error::spec(format!("t_{} = {t} is not in D_{}R", k + 1, k + 1)));
            }
        }
        for i in 1..self.reps.len() {
            let step = chain.group.op(&self.reps[i], &chain.group.inv(&self.reps[i - 1]));
            if !chain.member_gamma(&step, i)? {
                return Err(Error::spec(format!("t_{} and t_{i} lie in different Γ_{i} cosets", i + 1)));
            }
        }
        Ok(())
    }

    /// Coordinates determined by the deepest representative.
    pub fn from_deepest(chain: &Chain, t: &GroupElement, k: usize) -> Result<Self> {
        if k == 0 || k > chain.depth() {
            return Err(Error::LevelOutOfRange { level: k, max: chain.depth() });
        }
        Ok(OdometerCoords { reps: (1..=k).map(|i| chain.coset_rep(t, i)).collect() })
    }

    /// Every coordinate vector of depth K, in canonical order of t_K.
    pub fn all_at_depth(chain: &Chain, k: usize) -> Result<Vec<Self>> {
        chain.enumerate_domain(k, true)?.iter().map(|t| Self::from_deepest(chain, t, k)).collect()
    }
}

/// π of the orbit point σ^{g^{-1}}η, whose value at h is η(gh).
pub fn code_orbit_point(chain: &Chain, g: &GroupElement, k: usize) -> Result<OdometerCoords> {
    chain.group.conforms(g)?;
    if k > chain.depth() {
        return Err(Error::DepthExhausted(format!("depth {k} exceeds the {} configured levels", chain.depth())));
    }
    OdometerCoords::from_deepest(chain, g, k)
}

/// The value forced by the coords at h, if h lies in the depth-K periodic part.
pub fn forced_symbol<A: ToeplitzArray + ?Sized>(array: &A, coords: &OdometerCoords, h: &GroupElement) -> Option<Symbol> {
    let k = coords.depth();
    let x = array.group().op(coords.deepest(), h);
    array.cell(&x).filter(|c| c.level as usize <= k).map(|c| c.symbol)
}

/// Window positions outside ⋃_{i≤K} Per(x, t_i^{-1}Γ_i t_i) for any x with these coords.
pub fn aper_set<A: ToeplitzArray + ?Sized>(array: &A, coords: &OdometerCoords, window: &Window) -> Vec<GroupElement> {
    window.elements().filter(|h| forced_symbol(array, coords, h).is_none()).collect()
}

/// Tile of level i containing h: the Γ_i-part of t_i h, so that h ∈ t_i^{-1}γD_iR.
fn tile(chain: &Chain, coords: &OdometerCoords, i: usize, h: &GroupElement) -> GroupElement {
    chain.decompose_unchecked(&chain.group.op(coords.rep(i), h), i).gamma
}

#[derive(Clone, Debug, Serialize)]
pub struct TZetaPiece {
    pub base_level: usize,
    pub zeta: GroupElement,
    /// γ^ζ_i, ..., γ^ζ_K.
    pub chain: Vec<GroupElement>,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct TZetaReport {
    pub radius: i64,
    pub window_len: usize,
    pub pieces: Vec<TZetaPiece>,
    pub bound: usize,
    pub within_bound: bool,
}

/// 2^r·[G:G'].
pub fn piece_bound(chain: &Chain) -> usize {
    (1usize << chain.rank()) * chain.finite_order()
}

/// Radius of the largest ball B(0,n0) whose lattice side fits in one depth-K tile.
pub fn fiber_radius(chain: &Chain, k: usize) -> Result<i64> {
    Ok((chain.subgroups.moduli(k)?.iter().copied().min().unwrap() - 1) / 2)
}

/// Split B(0,n0)R into the nested translates T_ζ built from levels i..K of the coords.
pub fn tzeta_decompose(chain: &Chain, coords: &OdometerCoords, base: usize, n0: i64) -> Result<TZetaReport> {
    coords.validate(chain)?;
    let k = coords.depth();
    if base == 0 || base > k {
        return Err(Error::LevelOutOfRange { level: base, max: k });
    }
    let window = Window::ball(chain.rank(), n0, chain.finite_order());
    let pts: Vec<GroupElement> = window.elements().collect();
    let tiles: Vec<Vec<GroupElement>> =
        pts.iter().map(|h| (base..=k).map(|i| tile(chain, coords, i, h)).collect()).collect();
    // Nesting: points sharing a stage-j tile share every later stage.
    for j in 0..tiles.first().map_or(0, |t| t.len() - 1) {
        let mut next: HashMap<GroupElement, GroupElement> = HashMap::new();
        for t in &tiles {
            if let Some(prev) = next.insert(t[j], t[j + 1]) {
                if prev != t[j + 1] {
                    return Err(Error::invariant(format!(
                        "level-{} tile {} is not nested in a single level-{} tile",
                        base + j,
                        t[j],
                        base + j + 1
                    )));
                }
            }
        }
    }
    let mut groups: BTreeMap<GroupElement, (GroupElement, Vec<GroupElement>, usize)> = BTreeMap::new();
    for t in &tiles {
        let last = *t.last().unwrap();
        let e = groups.entry(last).or_insert_with(|| (t[0], t.clone(), 0));
        if t[0] < e.0 {
            e.0 = t[0];
            e.1 = t.clone();
        }
        e.2 += 1;
    }
    let pieces: Vec<TZetaPiece> = groups
        .into_values()
        .map(|(zeta, chain, size)| TZetaPiece { base_level: base, zeta, chain, size })
        .collect();
    let covered: usize = pieces.iter().map(|p| p.size).sum();
    if covered != pts.len() {
        return Err(Error::invariant("T_ζ pieces do not cover the window"));
    }
    let bound = piece_bound(chain);
    Ok(TZetaReport { radius: n0, window_len: pts.len(), within_bound: pieces.len() <= bound, pieces, bound })
}

/// How candidates assign symbols to the aperiodic part of the window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateRule {
    /// One symbol per depth-K tile.
    PerPiece,
    /// One symbol on all aperiodic positions.
    SingleSymbol,
}

impl CandidateRule {
    pub fn for_family(f: Family) -> Self {
        match f {
            Family::Williams => CandidateRule::SingleSymbol,
            _ => CandidateRule::PerPiece,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberPatch {
    /// Symbol on each aperiodic piece (a single entry under the single-symbol rule).
    pub piece_symbols: Vec<Symbol>,
    pub occurrences: usize,
    #[serde(skip)]
    pub symbols: Vec<Option<Symbol>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberReport {
    pub coords: GroupElement,
    pub depth: usize,
    pub window_len: usize,
    pub aperiodic: usize,
    pub pieces: usize,
    pub candidates: u128,
    pub approximants: usize,
    /// Approximants whose window met an undefined oracle cell.
    pub skipped: usize,
    /// Realized approximant patches that no candidate describes.
    pub escapes: usize,
    pub patches: Vec<FiberPatch>,
    pub bound: u128,
}

impl FiberReport {
    pub fn count(&self) -> usize {
        self.patches.len()
    }

    pub fn within_bound(&self) -> bool {
        (self.count() as u128) <= self.bound
    }
}

/// Bound on fiber counts: m for Williams arrays, |Σ|^{2^r} for the normal variant,
/// m^{2^r [G:G']} for the virtual one.
pub fn fiber_bound<A: ToeplitzArray + ?Sized>(array: &A) -> u128 {
    let c = array.chain();
    let m = array.step_symbols().len() as u128;
    match array.family() {
        Family::Williams => m,
        Family::Normal => (array.alphabet().len() as u128).saturating_pow(1 << c.rank()),
        Family::Virtual => m.saturating_pow(((1usize << c.rank()) * c.finite_order()) as u32),
    }
}

/// Candidates-then-filter: forced part from the coords, one step symbol per aperiodic piece
/// (or one overall), kept when realized by an approximant γt_K, γ ∈ Γ_K, inside the oracle.
pub fn fiber_enumerate<A: ToeplitzArray + ?Sized>(
    array: &A,
    oracle: &SymbolPatch,
    coords: &OdometerCoords,
    window: &Window,
    rule: CandidateRule,
) -> Result<FiberReport> {
    let chain = array.chain();
    coords.validate(chain)?;
    let k = coords.depth();
    let grp = &chain.group;
    let pts: Vec<GroupElement> = window.elements().collect();
    let base: Vec<GroupElement> = pts.iter().map(|h| grp.op(coords.deepest(), h)).collect();
    let forced: Vec<Option<Symbol>> = pts.iter().map(|h| forced_symbol(array, coords, h)).collect();
    let mut piece_of: Vec<Option<usize>> = vec![None; pts.len()];
    let mut piece_ids: BTreeMap<GroupElement, usize> = BTreeMap::new();
    for (idx, h) in pts.iter().enumerate() {
        if forced[idx].is_none() {
            let key = match rule {
                CandidateRule::PerPiece => tile(chain, coords, k, h),
                CandidateRule::SingleSymbol => grp.identity(),
            };
            let n = piece_ids.len();
            piece_of[idx] = Some(*piece_ids.entry(key).or_insert(n));
        }
    }
    // piece ids are in insertion order; renumber canonically by tile.
    let order: HashMap<usize, usize> = piece_ids.values().enumerate().map(|(pos, &id)| (id, pos)).collect();
    for p in piece_of.iter_mut().flatten() {
        *p = order[p];
    }
    let pieces = piece_ids.len();
    let steps = array.step_symbols();
    let candidates = (steps.len() as u128).saturating_pow(pieces as u32);

    let mut approximants = 0usize;
    let mut skipped = 0usize;
    let mut escapes = 0usize;
    let mut found: BTreeMap<Vec<Symbol>, FiberPatch> = BTreeMap::new();
    let r = chain.rank();
    let p = chain.subgroups.moduli(k)?.to_vec();
    let (lo, hi) = (oracle.window.lower().to_vec(), oracle.window.upper().to_vec());
    let mut glo = vec![0i64; r];
    let mut ghi = vec![0i64; r];
    for j in 0..r {
        glo[j] = num_integer::Integer::div_ceil(&lo[j], &p[j]);
        ghi[j] = num_integer::Integer::div_floor(&(hi[j] - 1), &p[j]) + 1;
    }
    let mut glo_v = [0i64; crate::lattice::MAX_RANK];
    let mut ghi_v = [0i64; crate::lattice::MAX_RANK];
    glo_v[..r].copy_from_slice(&glo);
    ghi_v[..r].copy_from_slice(&ghi);
    let mut values: Vec<Option<Symbol>> = vec![None; pts.len()];
    'approx: for u in crate::lattice::box_points(r, &glo_v, &ghi_v) {
        let mut shifted = base[0];
        for (idx, b) in base.iter().enumerate() {
            shifted.f = b.f;
            for j in 0..r {
                shifted.v[j] = b.v[j] + u[j] * p[j];
            }
            match oracle.window.index(&shifted) {
                None => continue 'approx,
                Some(o) => values[idx] = oracle.at_index(o),
            }
        }
        approximants += 1;
        if values.iter().any(|v| v.is_none()) {
            skipped += 1;
            continue;
        }
        let mut sym: Vec<Option<Symbol>> = vec![None; pieces];
        let mut fits = true;
        for idx in 0..pts.len() {
            let v = values[idx].unwrap();
            match (forced[idx], piece_of[idx]) {
                (Some(f), _) => {
                    if f != v {
                        return Err(Error::invariant(format!(
                            "approximant disagrees with the forced value at {}",
                            pts[idx]
                        )));
                    }
                }
                (None, Some(pc)) => match sym[pc] {
                    None if steps.contains(&v) => sym[pc] = Some(v),
                    Some(s) if s == v => {}
                    _ => {
                        fits = false;
                        break;
                    }
                },
                (None, None) => unreachable!(),
            }
        }
        if !fits {
            escapes += 1;
            continue;
        }
        let key: Vec<Symbol> = sym.into_iter().map(|s| s.unwrap()).collect();
        found
            .entry(key.clone())
            .or_insert_with(|| FiberPatch { piece_symbols: key, occurrences: 0, symbols: values.clone() })
            .occurrences += 1;
    }
    Ok(FiberReport {
        coords: *coords.deepest(),
        depth: k,
        window_len: pts.len(),
        aperiodic: forced.iter().filter(|f| f.is_none()).count(),
        pieces,
        candidates,
        approximants,
        skipped,
        escapes,
        patches: found.into_values().collect(),
        bound: fiber_bound(array),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FiberScan {
    pub depth: usize,
    pub radius: i64,
    pub coords_scanned: usize,
    pub bound: u128,
    pub max_count: usize,
    /// histogram[c] = number of coords with c admitted patches.
    pub histogram: Vec<usize>,
    pub max_pieces: usize,
    pub total_escapes: usize,
    pub all_within_bound: bool,
    pub reports: Vec<FiberReport>,
}

/// fiber_enumerate over every depth-K coords, window B(0, n0)R.
pub fn fiber_scan<A: ToeplitzArray + ?Sized>(array: &A, oracle: &SymbolPatch, k: usize, n0: i64) -> Result<FiberScan> {
    let chain = array.chain();
    let window = Window::ball(chain.rank(), n0, chain.finite_order());
    let rule = CandidateRule::for_family(array.family());
    let all = OdometerCoords::all_at_depth(chain, k)?;
    let reports: Vec<FiberReport> =
        all.par_iter().map(|c| fiber_enumerate(array, oracle, c, &window, rule)).collect::<Result<_>>()?;
    let max_count = reports.iter().map(|r| r.count()).max().unwrap_or(0);
    let mut histogram = vec![0usize; max_count + 1];
    for r in &reports {
        histogram[r.count()] += 1;
    }
    Ok(FiberScan {
        depth: k,
        radius: n0,
        coords_scanned: reports.len(),
        bound: fiber_bound(array),
        max_count,
        histogram,
        max_pieces: reports.iter().map(|r| r.pieces).max().unwrap_or(0),
        total_escapes: reports.iter().map(|r| r.escapes).sum(),
        all_within_bound: reports.iter().all(|r| r.within_bound()),
        reports,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub v: GroupElement,
    pub symbol: Symbol,
}

/// Finds the unique v ∈ D_nR such that σ^v x carries η's level-≤n pattern, and reads the
/// constant symbol of σ^v x on J(n)R. `support` is the window on which x is known.
pub fn classify_cni<A: ToeplitzArray + ?Sized, C: Configuration + ?Sized>(
    array: &A,
    x: &C,
    support: &Window,
    n: usize,
    j_n: &[GroupElement],
) -> Result<Classification> {
    let chain = array.chain();
    let grp = &chain.group;
    let dom = Window::domain(chain, n, true)?;
    let pattern: Vec<Option<Symbol>> = dom
        .elements()
        .map(|w| array.cell(&w).filter(|c| c.level as usize <= n).map(|c| c.symbol))
        .collect();
    let pts: Vec<(GroupElement, Lookup)> = support.elements().map(|w| (w, x.lookup(&w))).collect();
    let matches: Vec<GroupElement> = dom
        .elements()
        .filter(|v| {
            pts.iter().all(|(w, val)| {
                let rep = chain.coset_rep(&grp.op(v, w), n);
                match pattern[dom.index(&rep).expect("representative lies in D_nR")] {
                    Some(s) => *val == Lookup::Symbol(s),
                    None => true,
                }
            })
        })
        .collect();
    let v = match matches.as_slice() {
        [v] => *v,
        [] => return Err(Error::invariant(format!("no shift places x in C_{n}"))),
        many => {
            return Err(Error::invariant(format!(
                "{} shifts place x in C_{n}; window too small to classify",
                many.len()
            )))
        }
    };
    let vi = grp.inv(&v);
    let mut symbol = None;
    for j in j_n {
        for f in 0..chain.finite_order() {
            let jr = grp.op(j, &GroupElement::new(&vec![0; chain.rank()], f));
            let s = match x.lookup(&grp.op(&vi, &jr)) {
                Lookup::Symbol(s) => s,
                _ => return Err(Error::invariant(format!("v·J({n})R leaves the window of x"))),
            };
            match symbol {
                None => symbol = Some(s),
                Some(s0) if s0 != s => {
                    return Err(Error::invariant(format!("σ^v x is not constant on J({n})R")));
                }
                _ => {}
            }
        }
    }
    Ok(Classification { v, symbol: symbol.ok_or_else(|| Error::invariant("J(n) is empty"))? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{Patch, Shifted};
    use crate::lattice::{GroupSpec, Matrix};
    use crate::toeplitz_g::{GroupToeplitz, Variant};
    use crate::toeplitz_z::{WilliamsArray, WilliamsParams};

    fn dihedral(levels: usize) -> GroupToeplitz {
        let g = GroupSpec::with_involution(Matrix::from_rows(&[vec![-1]]).unwrap()).unwrap();
        let moduli = (0..levels).map(|i| vec![5 * 5i64.pow(i as u32)]).collect();
        GroupToeplitz::new(Chain::centered(g, moduli, true).unwrap(), 2, Variant::Virtual).unwrap()
    }

    fn z_deck(levels: usize) -> GroupToeplitz {
        let moduli = (1..=levels).map(|i| vec![5i64.pow(i as u32)]).collect();
        GroupToeplitz::new(Chain::centered(GroupSpec::lattice(1).unwrap(), moduli, true).unwrap(), 2, Variant::Normal)
            .unwrap()
    }

    #[test]
    fn williams_level_one_per_set() {
        let w = WilliamsArray::new(WilliamsParams::new(2, vec![3, 18, 216]).unwrap()).unwrap();
        let region: Vec<GroupElement> = (-30..30).map(|x| GroupElement::new(&[x], 0)).collect();
        let per = per_set_exact(&w, 1, 1, region.iter().copied());
        let expect: Vec<GroupElement> =
            region.iter().copied().filter(|g| matches!(g.v[0].rem_euclid(3), 0 | 2)).collect();
        assert_eq!(per, expect);
    }

    #[test]
    fn empirical_contains_exact() {
        let t = dihedral(5);
        let patch = Patch::from_array(&t, Window::domain(t.chain(), 3, true).unwrap());
        let support: Vec<GroupElement> = patch.window.elements().collect();
        let interior: Vec<GroupElement> = Window::domain(t.chain(), 1, true).unwrap().elements().collect();
        for i in 1..=2 {
            for alpha in t.alphabet() {
                let exact: HashSet<_> = per_set_exact(&t, i, alpha, support.iter().copied()).into_iter().collect();
                let emp: HashSet<_> =
                    per_set_empirical(t.chain(), &patch, &support, &Subgroup::level(i), alpha, &support)
                        .into_iter()
                        .collect();
                assert!(emp.is_superset(&exact));
                for h in &interior {
                    assert_eq!(emp.contains(h), exact.contains(h), "{h} i={i} α={alpha}");
                }
            }
        }
    }

    #[test]
    fn constant_patch_is_all_periodic() {
        let t = z_deck(3);
        let w = Window::interval(6);
        let p = SymbolPatch { window: w.clone(), symbols: vec![Some(1); w.len()] };
        let support: Vec<GroupElement> = w.elements().collect();
        let per = per_set_empirical(t.chain(), &p, &support, &Subgroup::level(1), 1, &support);
        assert_eq!(per.len(), support.len());
    }

    #[test]
    fn conjugation_identity_examples() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![3], vec![9]], false).unwrap();
        let w = Window::interval(10);
        let x = SymbolPatch { window: w.clone(), symbols: (0..w.len()).map(|k| Some((k * k % 3) as u8)).collect() };
        let support: Vec<GroupElement> = w.elements().collect();
        let one = GroupElement::new(&[1], 0);
        assert!(conjugation_identity_check(&z, &x, &support, &one, &Subgroup::level(1), 1).holds);
        // Per(σ^1 x) = Per(x) + 1 for an abelian group.
        let shifted = Shifted::new(&z.group, &x, &one);
        let moved: Vec<GroupElement> = support.iter().map(|g| z.group.op(&one, g)).collect();
        let lhs: HashSet<_> =
            per_set_empirical(&z, &shifted, &moved, &Subgroup::level(1), 1, &moved).into_iter().collect();
        let rhs: HashSet<_> = per_set_empirical(&z, &x, &support, &Subgroup::level(1), 1, &support)
            .into_iter()
            .map(|g| z.group.op(&one, &g))
            .collect();
        assert_eq!(lhs, rhs);

        let t = dihedral(4);
        let patch = Patch::from_array(&t, Window::domain(t.chain(), 2, true).unwrap());
        let support: Vec<GroupElement> = patch.window.elements().collect();
        let s = GroupElement::new(&[0], 1);
        for alpha in t.alphabet() {
            assert!(conjugation_identity_check(t.chain(), &patch, &support, &s, &Subgroup::level(1), alpha).holds);
            assert!(conjugation_identity_check(t.chain(), &patch, &support, &t.chain().group.identity(), &Subgroup::level(2), alpha).holds);
        }
    }

    #[test]
    fn coding() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5], vec![25]], true).unwrap();
        let c = code_orbit_point(&z, &GroupElement::new(&[7], 0), 2).unwrap();
        assert_eq!(c.reps, vec![GroupElement::new(&[2], 0), GroupElement::new(&[7], 0)]);
        let id = code_orbit_point(&z, &z.group.identity(), 2).unwrap();
        assert!(id.reps.iter().all(|t| *t == z.group.identity()));
        let t = dihedral(3);
        let c = code_orbit_point(t.chain(), &GroupElement::new(&[7], 1), 2).unwrap();
        assert_eq!(c.reps[0], GroupElement::new(&[2], 1));
        c.validate(t.chain()).unwrap();
        assert!(code_orbit_point(t.chain(), &GroupElement::new(&[7], 1), 4).is_err());
        let bad = OdometerCoords { reps: vec![GroupElement::new(&[1], 0), GroupElement::new(&[7], 0)] };
        assert!(bad.validate(t.chain()).is_err());
    }

    #[test]
    fn tzeta_pieces() {
        let t = dihedral(3);
        let c = code_orbit_point(t.chain(), &t.chain().group.identity(), 3).unwrap();
        let rep = tzeta_decompose(t.chain(), &c, 1, 5).unwrap();
        assert_eq!(rep.pieces.len(), 1);
        let n0 = fiber_radius(t.chain(), 2).unwrap();
        for c in OdometerCoords::all_at_depth(t.chain(), 2).unwrap() {
            let rep = tzeta_decompose(t.chain(), &c, 1, n0).unwrap();
            assert!(rep.within_bound && rep.pieces.len() <= 4);
        }
        let z = z_deck(3);
        let n0 = fiber_radius(z.chain(), 2).unwrap();
        let mut max = 0;
        for c in OdometerCoords::all_at_depth(z.chain(), 2).unwrap() {
            max = max.max(tzeta_decompose(z.chain(), &c, 1, n0).unwrap().pieces.len());
        }
        assert_eq!(max, 2);
    }

    #[test]
    fn aper_matches_conjugated_per_sets() {
        let t = dihedral(5);
        let oracle = Patch::from_array(&t, Window::domain(t.chain(), 4, true).unwrap());
        let g = GroupElement::new(&[-31], 1);
        let x = Shifted::new(&t.chain().group, &oracle, &t.chain().group.inv(&g));
        let coords = code_orbit_point(t.chain(), &g, 2).unwrap();
        let w = Window::ball(1, 6, 2);
        let support: Vec<GroupElement> = Window::ball(1, 150, 2).elements().collect();
        let region: Vec<GroupElement> = w.elements().collect();
        let mut periodic = HashSet::new();
        for i in 1..=2 {
            let h = Subgroup::conjugated(i, *coords.rep(i));
            for alpha in t.alphabet() {
                periodic.extend(per_set_empirical(t.chain(), &x, &support, &h, alpha, &region));
            }
        }
        let aper: HashSet<_> = aper_set(&t, &coords, &w).into_iter().collect();
        let complement: HashSet<_> = region.into_iter().filter(|h| !periodic.contains(h)).collect();
        assert_eq!(aper, complement);
        let deeper = code_orbit_point(t.chain(), &g, 3).unwrap();
        let aper3: HashSet<_> = aper_set(&t, &deeper, &w).into_iter().collect();
        assert!(aper3.is_subset(&aper));
    }

    #[test]
    fn fibers_small_decks() {
        let w = WilliamsArray::new(WilliamsParams::new(2, vec![3, 18, 216, 2592, 31104]).unwrap()).unwrap();
        let oracle = SymbolPatch::from_config(&w, Window::interval(31104));
        let n0 = fiber_radius(w.chain(), 2).unwrap();
        let scan = fiber_scan(&w, &oracle, 2, n0).unwrap();
        assert!(scan.all_within_bound);
        assert_eq!(scan.max_count, 2);
        // a Toeplitz point whose window is fully periodic has a single patch
        let c = code_orbit_point(w.chain(), &w.chain().group.identity(), 4).unwrap();
        let r = fiber_enumerate(&w, &oracle, &c, &Window::interval(8), CandidateRule::SingleSymbol).unwrap();
        assert_eq!((r.aperiodic, r.count()), (0, 1));

        let t = dihedral(5);
        let oracle = SymbolPatch::from_config(&t, Window::domain(t.chain(), 4, true).unwrap());
        let scan = fiber_scan(&t, &oracle, 2, fiber_radius(t.chain(), 2).unwrap()).unwrap();
        assert!(scan.all_within_bound);
        assert_eq!(scan.total_escapes, 0);
        assert!(scan.max_count >= 2);
    }

    #[test]
    fn classification() {
        let t = dihedral(5);
        let eta = Patch::from_array(&t, Window::domain(t.chain(), 3, true).unwrap());
        let j = t.compute_j(2).unwrap();
        let support = Window::domain(t.chain(), 2, true).unwrap();
        let c = classify_cni(&t, &eta, &support, 1, &j[1]).unwrap();
        assert_eq!(c, Classification { v: t.chain().group.identity(), symbol: t.symbol(2) });
        let grp = &t.chain().group;
        for w in Window::domain(t.chain(), 1, true).unwrap().elements() {
            let x = Shifted::new(grp, &eta, &grp.inv(&w));
            let small = Window::ball(1, 7, 2);
            let c = classify_cni(&t, &x, &small, 1, &j[1]).unwrap();
            assert_eq!(c.v, w);
        }
    }
}
