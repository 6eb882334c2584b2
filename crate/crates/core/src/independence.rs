//! Finite independence certificates for tuples of cylinder sets, regional proximality checks
//! and the resulting sequence-entropy bracket.
//!
//! Convention: for the orbit point y = σ^{h^{-1}}η (so y(k) = η(hk)), y ∈ σ^{g^{-1}}A holds
//! exactly when η(h g^{-1} f) = pattern(f) for every f in the shape of A.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{Configuration, Lookup, Symbol, SymbolPatch, Window};
use crate::error::{Error, Result};
use crate::lattice::{GroupElement, GroupSpec};

pub const CONVENTION: &str = "y = σ^{h^-1}η lies in σ^{g^-1}A iff η(h·g^-1·f) = pattern(f) for f in shape(A)";

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cylinder {
    pub shape: Vec<GroupElement>,
    pub pattern: Vec<Symbol>,
}

impl Cylinder {
    pub fn new(shape: Vec<GroupElement>, pattern: Vec<Symbol>) -> Result<Self> {
        if shape.is_empty() || shape.len() != pattern.len() {
            return Err(Error::Config("cylinder needs a nonempty shape and a total pattern".into()));
        }
        let distinct: HashSet<&GroupElement> = shape.iter().collect();
        if distinct.len() != shape.len() {
            return Err(Error::Config("cylinder shape repeats a position".into()));
        }
        Ok(Cylinder { shape, pattern })
    }

    /// [s] at the identity.
    pub fn single(group: &GroupSpec, s: Symbol) -> Self {
        Cylinder { shape: vec![group.identity()], pattern: vec![s] }
    }

    /// The cylinder read off a configuration on `shape`; `None` if some cell is not a symbol.
    pub fn from_config<C: Configuration + ?Sized>(x: &C, shape: &[GroupElement]) -> Option<Self> {
        let pattern = shape.iter().map(|f| x.lookup(f).symbol()).collect::<Option<Vec<_>>>()?;
        Some(Cylinder { shape: shape.to_vec(), pattern })
    }

    /// Whether the orbit point σ^{u^{-1}}η lies in the cylinder: `Some(false)` on a mismatch,
    /// `None` if a needed cell is outside the oracle.
    pub fn occurs_at<C: Configuration + ?Sized>(&self, group: &GroupSpec, eta: &C, u: &GroupElement) -> Option<bool> {
        let mut ok = true;
        for (f, &s) in self.shape.iter().zip(&self.pattern) {
            match eta.lookup(&group.op(u, f)) {
                Lookup::Outside => return None,
                Lookup::Undefined => ok = false,
                Lookup::Symbol(x) => ok &= x == s,
            }
        }
        Some(ok)
    }

    /// Two cylinders are disjoint when they prescribe different symbols at a shared position.
    pub fn disjoint_from(&self, other: &Cylinder) -> bool {
        self.shape.iter().zip(&self.pattern).any(|(f, s)| {
            other.shape.iter().position(|g| g == f).is_some_and(|k| other.pattern[k] != *s)
        })
    }
}

/// A finite window of η together with the group it lives on.
pub struct LanguageOracle {
    pub group: GroupSpec,
    pub patch: SymbolPatch,
}

impl LanguageOracle {
    pub fn new(group: GroupSpec, patch: SymbolPatch) -> Result<Self> {
        if patch.window.rank() != group.rank() || patch.window.sheets() > group.finite_order() {
            return Err(Error::Config("oracle window does not match the group".into()));
        }
        Ok(LanguageOracle { group, patch })
    }

    pub fn window(&self) -> &Window {
        &self.patch.window
    }

    /// Positions u in the window at which the cylinder occurs.
    pub fn occurrences(&self, c: &Cylinder) -> FixedBitSet {
        let w = self.window();
        let mut bits = FixedBitSet::with_capacity(w.len());
        for k in 0..w.len() {
            if c.occurs_at(&self.group, &self.patch, &w.element(k)) == Some(true) {
                bits.insert(k);
            }
        }
        bits
    }

    pub fn admissible(&self, c: &Cylinder) -> bool {
        !self.occurrences(c).is_clear()
    }

    /// {h : h g^{-1} ∈ occ}.
    fn translate(&self, occ: &FixedBitSet, g: &GroupElement) -> FixedBitSet {
        let w = self.window();
        let g_inv = self.group.inv(g);
        let mut out = FixedBitSet::with_capacity(w.len());
        for k in 0..w.len() {
            if let Some(j) = w.index(&self.group.op(&w.element(k), &g_inv)) {
                if occ.contains(j) {
                    out.insert(k);
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    /// s(g_1), ..., s(g_L) as cylinder indices.
    pub assignment: Vec<usize>,
    pub h: GroupElement,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub convention: String,
    pub cylinders: Vec<Cylinder>,
    pub j: Vec<GroupElement>,
    /// One witness per assignment, in odometer order (first element of J most significant).
    pub witnesses: Vec<Witness>,
}

fn assignment_of(mut idx: usize, k: usize, len: usize) -> Vec<usize> {
    let mut s = vec![0; len];
    for slot in s.iter_mut().rev() {
        *slot = idx % k;
        idx /= k;
    }
    s
}

impl Certificate {
    pub fn size(&self) -> usize {
        self.j.len()
    }

    pub fn k(&self) -> usize {
        self.cylinders.len()
    }

    /// Restriction to the positions `keep_j` of J and the cylinders `keep_c` (indices).
    pub fn restrict(&self, keep_j: &[usize], keep_c: &[usize]) -> Result<Certificate> {
        if keep_j.is_empty() || keep_c.is_empty() {
            return Err(Error::Config("restriction must keep something".into()));
        }
        let mut witnesses = Vec::new();
        for idx in 0..keep_c.len().pow(keep_j.len() as u32) {
            let sub = assignment_of(idx, keep_c.len(), keep_j.len());
            let w = self
                .witnesses
                .iter()
                .find(|w| keep_j.iter().zip(&sub).all(|(&jp, &c)| w.assignment[jp] == keep_c[c]))
                .ok_or_else(|| Error::Verification("witness table is incomplete".into()))?;
            witnesses.push(Witness { assignment: sub, h: w.h });
        }
        Ok(Certificate {
            convention: self.convention.clone(),
            cylinders: keep_c.iter().map(|&c| self.cylinders[c].clone()).collect(),
            j: keep_j.iter().map(|&jp| self.j[jp]).collect(),
            witnesses,
        })
    }

    /// (A_1, A_1, A_2, ..., A_k): the duplicate is answered by the witnesses of A_1.
    pub fn pad(&self) -> Certificate {
        let k = self.k() + 1;
        let mut cylinders = vec![self.cylinders[0].clone()];
        cylinders.extend(self.cylinders.iter().cloned());
        let witnesses = (0..k.pow(self.size() as u32))
            .map(|idx| {
                let s = assignment_of(idx, k, self.size());
                let orig: Vec<usize> = s.iter().map(|&c| c.saturating_sub(1)).collect();
                let h = self.witnesses.iter().find(|w| w.assignment == orig).expect("complete table").h;
                Witness { assignment: s, h }
            })
            .collect();
        Certificate { convention: self.convention.clone(), cylinders, j: self.j.clone(), witnesses }
    }
}

/// Re-checks every witness against the oracle configuration.
pub fn check_certificate<C: Configuration + ?Sized>(cert: &Certificate, group: &GroupSpec, eta: &C) -> Result<bool> {
    let (k, l) = (cert.k(), cert.size());
    if k == 0 || l == 0 || cert.witnesses.len() != k.pow(l as u32) {
        return Ok(false);
    }
    let distinct: HashSet<&GroupElement> = cert.j.iter().collect();
    if distinct.len() != l {
        return Ok(false);
    }
    for (idx, w) in cert.witnesses.iter().enumerate() {
        if w.assignment != assignment_of(idx, k, l) {
            return Ok(false);
        }
        for (g, &a) in cert.j.iter().zip(&w.assignment) {
            let u = group.op(&w.h, &group.inv(g));
            match cert.cylinders[a].occurs_at(group, eta, &u) {
                None => {
                    return Err(Error::Verification(format!("witness {} reaches outside the oracle window", w.h)))
                }
                Some(false) => return Ok(false),
                Some(true) => {}
            }
        }
    }
    Ok(true)
}

#[derive(Clone, Debug)]
pub struct Budget {
    pub max_nodes: u64,
    pub deadline: Option<Instant>,
}

impl Budget {
    pub fn nodes(max_nodes: u64) -> Self {
        Budget { max_nodes, deadline: None }
    }

    pub fn with_time(mut self, t: Duration) -> Self {
        self.deadline = Some(Instant::now() + t);
        self
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found { certificate: Certificate, nodes: u64 },
    /// The budget ended before the candidate window was decided.
    Exhausted { nodes: u64 },
    /// The whole candidate window was searched without success.
    None { nodes: u64 },
}

impl SearchOutcome {
    pub fn certificate(&self) -> Option<&Certificate> {
        match self {
            SearchOutcome::Found { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SearchOutcome::Found { .. } => "found",
            SearchOutcome::Exhausted { .. } => "exhausted",
            SearchOutcome::None { .. } => "none",
        }
    }
}

struct Search<'a> {
    oracle: &'a LanguageOracle,
    occ: Vec<FixedBitSet>,
    candidates: Vec<GroupElement>,
    target: usize,
    budget: &'a Budget,
    nodes: AtomicU64,
}

enum Step {
    Found(Vec<usize>, Vec<FixedBitSet>),
    Fail,
    OutOfBudget,
}

impl Search<'_> {
    fn tables(&self, g: &GroupElement) -> Vec<FixedBitSet> {
        self.occ.iter().map(|o| self.oracle.translate(o, g)).collect()
    }

    fn extend(&self, state: &[FixedBitSet], tables: &[FixedBitSet]) -> Option<Vec<FixedBitSet>> {
        let mut next = Vec::with_capacity(state.len() * tables.len());
        for s in state {
            for t in tables {
                let mut x = s.clone();
                x.intersect_with(t);
                if x.is_clear() {
                    return None;
                }
                next.push(x);
            }
        }
        Some(next)
    }

    fn out_of_budget(&self) -> bool {
        let n = self.nodes.fetch_add(1, Ordering::Relaxed) + 1;
        n > self.budget.max_nodes || self.budget.deadline.is_some_and(|d| Instant::now() > d)
    }

    fn dfs(&self, chosen: &mut Vec<usize>, state: Vec<FixedBitSet>) -> Step {
        if chosen.len() == self.target {
            return Step::Found(chosen.clone(), state);
        }
        let start = chosen.last().map_or(0, |&c| c + 1);
        for c in start..self.candidates.len() {
            if self.out_of_budget() {
                return Step::OutOfBudget;
            }
            let Some(next) = self.extend(&state, &self.tables(&self.candidates[c])) else { continue };
            chosen.push(c);
            match self.dfs(chosen, next) {
                Step::Fail => {
                    chosen.pop();
                }
                other => return other,
            }
        }
        Step::Fail
    }
}

/// Candidates g ≠ 1 of B(0, radius)R in canonical order.
pub fn candidate_window(group: &GroupSpec, radius: i64) -> Vec<GroupElement> {
    let w = Window::ball(group.rank(), radius, group.finite_order());
    let mut c: Vec<GroupElement> = w.elements().filter(|g| *g != group.identity()).collect();
    c.sort_by_key(|g| g.search_key());
    c
}

/// Backtracking search for J ∋ 1 with |J| = size, J ⊆ B(0, radius)R, and witnesses
/// h ranging over the oracle window. Branches over the second element of J run in parallel.
pub fn find_independence_set(
    cylinders: &[Cylinder],
    size: usize,
    radius: i64,
    oracle: &LanguageOracle,
    budget: &Budget,
) -> Result<SearchOutcome> {
    if cylinders.is_empty() || size == 0 {
        return Err(Error::Config("need at least one cylinder and a positive target size".into()));
    }
    for c in cylinders {
        if c.shape.len() != c.pattern.len() || c.shape.is_empty() {
            return Err(Error::Config("malformed cylinder".into()));
        }
    }
    let occ: Vec<FixedBitSet> = cylinders.par_iter().map(|c| oracle.occurrences(c)).collect();
    let search = Search {
        oracle,
        occ,
        candidates: candidate_window(&oracle.group, radius),
        target: size - 1,
        budget,
        nodes: AtomicU64::new(0),
    };
    let root = search.tables(&oracle.group.identity());
    if root.iter().any(|b| b.is_clear()) {
        return Ok(SearchOutcome::None { nodes: 0 });
    }
    let result = if size == 1 {
        Step::Found(vec![], root)
    } else {
        let outcomes: Vec<Step> = (0..search.candidates.len())
            .into_par_iter()
            .map(|c| {
                if search.out_of_budget() {
                    return Step::OutOfBudget;
                }
                match search.extend(&root, &search.tables(&search.candidates[c])) {
                    Some(state) => search.dfs(&mut vec![c], state),
                    None => Step::Fail,
                }
            })
            .collect();
        // first branch in canonical order that is decided decides the search
        let mut verdict = Step::Fail;
        for o in outcomes {
            match o {
                Step::Fail => continue,
                other => {
                    verdict = other;
                    break;
                }
            }
        }
        verdict
    };
    let nodes = search.nodes.load(Ordering::Relaxed);
    match result {
        Step::Found(chosen, state) => {
            let mut j = vec![oracle.group.identity()];
            j.extend(chosen.iter().map(|&c| search.candidates[c]));
            let witnesses = state
                .iter()
                .enumerate()
                .map(|(idx, bits)| Witness {
                    assignment: assignment_of(idx, cylinders.len(), size),
                    h: oracle.window().element(bits.ones().next().expect("nonempty")),
                })
                .collect();
            let certificate =
                Certificate { convention: CONVENTION.into(), cylinders: cylinders.to_vec(), j, witnesses };
            if !check_certificate(&certificate, &oracle.group, &oracle.patch)? {
                return Err(Error::invariant("search produced a certificate that does not re-verify"));
            }
            Ok(SearchOutcome::Found { certificate, nodes })
        }
        Step::OutOfBudget => Ok(SearchOutcome::Exhausted { nodes }),
        Step::Fail => Ok(SearchOutcome::None { nodes }),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RadiusResult {
    pub radius: i64,
    pub outcome: SearchOutcome,
}

/// Certificates for the cylinders that k points induce on B(0, ρ)R, for each ρ in `radii`.
/// Tuples hitting the diagonal or exceeding the fiber bound are rejected.
pub fn in_tuple_search<C: Configuration + ?Sized>(
    points: &[&C],
    radii: &[i64],
    size: usize,
    j_radius: i64,
    oracle: &LanguageOracle,
    fiber_bound: u128,
    budget: &Budget,
) -> Result<Vec<RadiusResult>> {
    let k = points.len();
    if k as u128 > fiber_bound {
        return Err(Error::Config(format!("{k} pairwise distinct points exceed the fiber bound {fiber_bound}")));
    }
    let sheets = oracle.group.finite_order();
    let rank = oracle.group.rank();
    let mut results = Vec::new();
    let mut max_r = radii.iter().copied().max().unwrap_or(0);
    max_r = max_r.max(0);
    let big: Vec<GroupElement> = Window::ball(rank, max_r, sheets).elements().collect();
    let reads: Vec<Cylinder> = points
        .iter()
        .map(|x| Cylinder::from_config(*x, &big).ok_or_else(|| Error::Config("point undefined on its shape".into())))
        .collect::<Result<_>>()?;
    for a in 0..k {
        for b in a + 1..k {
            if reads[a] == reads[b] {
                return Err(Error::Config(format!("points {a} and {b} agree on B(0,{max_r}): tuple is diagonal")));
            }
        }
    }
    for &rho in radii {
        let shape: Vec<GroupElement> = Window::ball(rank, rho, sheets).elements().collect();
        let cyl: Vec<Cylinder> =
            points.iter().map(|x| Cylinder::from_config(*x, &shape).expect("defined on the larger ball")).collect();
        let outcome = find_independence_set(&cyl, size, j_radius, oracle, budget)?;
        results.push(RadiusResult { radius: rho, outcome });
    }
    Ok(results)
}

#[derive(Clone, Debug, Serialize)]
pub struct ProximalWitness {
    pub g: GroupElement,
    /// Positions u_i with x'_i = σ^{u_i^{-1}}η.
    pub points: Vec<GroupElement>,
}

/// Verifies that each x'_i = σ^{u_i^{-1}}η lies in its cylinder and that the σ^g x'_i agree on `eps_shape`.
pub fn check_proximal_witness(
    cylinders: &[Cylinder],
    eps_shape: &[GroupElement],
    w: &ProximalWitness,
    oracle: &LanguageOracle,
) -> Result<bool> {
    let grp = &oracle.group;
    let g_inv = grp.inv(&w.g);
    let mut reference: Option<Vec<Symbol>> = None;
    for (c, u) in cylinders.iter().zip(&w.points) {
        match c.occurs_at(grp, &oracle.patch, u) {
            None => return Err(Error::Verification(format!("{u} reaches outside the oracle window"))),
            Some(false) => return Ok(false),
            Some(true) => {}
        }
        let base = grp.op(u, &g_inv);
        let read: Option<Vec<Symbol>> =
            eps_shape.iter().map(|e| oracle.patch.lookup(&grp.op(&base, e)).symbol()).collect();
        let Some(read) = read else { return Ok(false) };
        match &reference {
            None => reference = Some(read),
            Some(r) if *r != read => return Ok(false),
            _ => {}
        }
    }
    Ok(true)
}

/// Direct search over g ∈ B(0, radius)R in canonical order (identity first).
pub fn regional_proximality_check(
    cylinders: &[Cylinder],
    eps_shape: &[GroupElement],
    radius: i64,
    oracle: &LanguageOracle,
) -> Result<Option<ProximalWitness>> {
    let grp = &oracle.group;
    let w = oracle.window();
    let occ: Vec<Vec<GroupElement>> =
        cylinders.iter().map(|c| oracle.occurrences(c).ones().map(|k| w.element(k)).collect()).collect();
    let mut cands = vec![grp.identity()];
    cands.extend(candidate_window(grp, radius));
    let hit = cands.par_iter().find_first(|g| {
        let g_inv = grp.inv(g);
        let mut common: Option<HashSet<Vec<Symbol>>> = None;
        for positions in &occ {
            let reads: HashSet<Vec<Symbol>> = positions
                .iter()
                .filter_map(|u| {
                    let base = grp.op(u, &g_inv);
                    eps_shape.iter().map(|e| oracle.patch.lookup(&grp.op(&base, e)).symbol()).collect()
                })
                .filter(|r: &Vec<Symbol>| common.as_ref().is_none_or(|c| c.contains(r)))
                .collect();
            if reads.is_empty() {
                return false;
            }
            common = Some(reads);
        }
        true
    });
    let Some(g) = hit else { return Ok(None) };
    let g_inv = grp.inv(g);
    let read = |u: &GroupElement| -> Option<Vec<Symbol>> {
        let base = grp.op(u, &g_inv);
        eps_shape.iter().map(|e| oracle.patch.lookup(&grp.op(&base, e)).symbol()).collect()
    };
    let mut common: HashSet<Vec<Symbol>> = occ[0].iter().filter_map(&read).collect();
    for positions in &occ[1..] {
        let r: HashSet<Vec<Symbol>> = positions.iter().filter_map(&read).collect();
        common.retain(|x| r.contains(x));
    }
    let target = common.into_iter().min().expect("nonempty by the search");
    let points = occ.iter().map(|ps| *ps.iter().find(|u| read(u).as_ref() == Some(&target)).unwrap()).collect();
    let witness = ProximalWitness { g: *g, points };
    if !check_proximal_witness(cylinders, eps_shape, &witness, oracle)? {
        return Err(Error::invariant("proximality witness does not re-verify"));
    }
    Ok(Some(witness))
}

/// From a certificate with a, b ∈ J: x'_i = σ^a y_i where y_i answers s(a) = i, s(b) = 1,
/// and g = b a^{-1} sends every x'_i into A_1.
pub fn proximality_from_certificate(cert: &Certificate, group: &GroupSpec) -> Result<ProximalWitness> {
    if cert.size() < 2 {
        return Err(Error::Config("need |J| ≥ 2".into()));
    }
    let (a, b) = (cert.j[0], cert.j[1]);
    let points = (0..cert.k())
        .map(|i| {
            let w = cert
                .witnesses
                .iter()
                .find(|w| w.assignment[0] == i && w.assignment[1] == 0)
                .ok_or_else(|| Error::Verification("witness table is incomplete".into()))?;
            Ok(group.op(&w.h, &group.inv(&a)))
        })
        .collect::<Result<_>>()?;
    Ok(ProximalWitness { g: group.op(&b, &group.inv(&a)), points })
}

#[derive(Clone, Debug, Serialize)]
pub struct EntropyBounds {
    pub certified_k: usize,
    pub fiber_bound: u128,
    pub lower_bits: f64,
    pub upper_bits: f64,
}

/// lower = log2 of the largest certified pairwise-distinct tuple size, upper = log2 of the fiber bound.
pub fn entropy_bounds(certified_k: usize, fiber_bound: u128) -> Result<EntropyBounds> {
    if certified_k == 0 || fiber_bound == 0 {
        return Err(Error::Config("entropy bounds need a certified size and a fiber bound".into()));
    }
    if certified_k as u128 > fiber_bound {
        return Err(Error::invariant(format!("certified {certified_k} exceeds the fiber bound {fiber_bound}")));
    }
    Ok(EntropyBounds {
        certified_k,
        fiber_bound,
        lower_bits: (certified_k as f64).log2(),
        upper_bits: (fiber_bound as f64).log2(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::ToeplitzArray;
    use crate::toeplitz_z::{WilliamsArray, WilliamsParams};

    fn williams_oracle(m: usize, n: i64) -> (WilliamsArray, LanguageOracle) {
        let a = WilliamsArray::new(WilliamsParams::new(m, vec![9, 108, 1296, 15552, 186624]).unwrap()).unwrap();
        let patch = SymbolPatch::from_config(&a, Window::interval(n));
        let o = LanguageOracle::new(a.group().clone(), patch).unwrap();
        (a, o)
    }

    #[test]
    fn symbol_cylinders_pair() {
        let (a, o) = williams_oracle(2, 4000);
        let cyl: Vec<Cylinder> = (0..2).map(|s| Cylinder::single(a.group(), s)).collect();
        let out = find_independence_set(&cyl, 3, 1296, &o, &Budget::nodes(1_000_000)).unwrap();
        let cert = out.certificate().expect("found");
        assert_eq!(cert.size(), 3);
        assert!(check_certificate(cert, a.group(), &o.patch).unwrap());
        // sub-certificates and padding
        let sub = cert.restrict(&[0, 2], &[1]).unwrap();
        assert!(check_certificate(&sub, a.group(), &o.patch).unwrap());
        let padded = cert.pad();
        assert_eq!(padded.k(), 3);
        assert!(check_certificate(&padded, a.group(), &o.patch).unwrap());
        // fresh, larger oracle
        let (_, big) = williams_oracle(2, 9000);
        assert!(check_certificate(cert, a.group(), &big.patch).unwrap());
        // a tampered witness fails
        let mut bad = cert.clone();
        bad.witnesses[0].h = bad.witnesses[1].h;
        assert!(!check_certificate(&bad, a.group(), &o.patch).unwrap());
        let mut far = cert.clone();
        far.witnesses[0].h = GroupElement::new(&[100_000], 0);
        assert!(matches!(check_certificate(&far, a.group(), &o.patch), Err(Error::Verification(_))));
    }

    #[test]
    fn trivial_cases_and_pigeonhole() {
        let (a, o) = williams_oracle(2, 2000);
        let one = vec![Cylinder::single(a.group(), 1)];
        let out = find_independence_set(&one, 4, 50, &o, &Budget::nodes(10_000)).unwrap();
        assert_eq!(out.certificate().unwrap().size(), 4);
        let pair: Vec<Cylinder> = (0..2).map(|s| Cylinder::single(a.group(), s)).collect();
        let out = find_independence_set(&pair, 1, 50, &o, &Budget::nodes(10)).unwrap();
        assert_eq!(out.certificate().unwrap().witnesses.len(), 2);
        let three: Vec<Cylinder> = (0..3).map(|s| Cylinder::single(a.group(), s)).collect();
        assert!(three[0].disjoint_from(&three[2]));
        assert_eq!(find_independence_set(&three, 1, 50, &o, &Budget::nodes(10)).unwrap().label(), "none");
        assert_eq!(find_independence_set(&three, 2, 50, &o, &Budget::nodes(10)).unwrap().label(), "none");
    }

    #[test]
    fn budget_exhaustion_is_distinct() {
        let (a, o) = williams_oracle(2, 2000);
        let shape: Vec<GroupElement> = (0..12).map(|x| GroupElement::new(&[x], 0)).collect();
        let c1 = Cylinder::from_config(&o.patch, &shape).unwrap();
        let sh: Vec<GroupElement> = (40..52).map(|x| GroupElement::new(&[x], 0)).collect();
        let mut c2 = Cylinder::from_config(&o.patch, &sh).unwrap();
        c2.shape = shape.clone();
        let out = find_independence_set(&[c1, c2], 6, 500, &o, &Budget::nodes(5)).unwrap();
        assert_eq!(out.label(), "exhausted");
        let _ = a;
    }

    #[test]
    fn m3_pairs() {
        let (a, o) = williams_oracle(3, 4000);
        let cyl: Vec<Cylinder> = (0..3).map(|s| Cylinder::single(a.group(), s)).collect();
        let out = find_independence_set(&cyl, 2, 1296, &o, &Budget::nodes(100_000)).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.witnesses.len(), 9);
        let w = proximality_from_certificate(cert, a.group()).unwrap();
        assert!(check_proximal_witness(&cyl, &cyl[0].shape, &w, &o).unwrap());
    }

    #[test]
    fn proximality() {
        let (a, o) = williams_oracle(2, 3000);
        let c = Cylinder::single(a.group(), 1);
        let w = regional_proximality_check(&[c.clone(), c.clone()], &c.shape, 5, &o).unwrap().unwrap();
        assert_eq!(w.g, a.group().identity());
        let shape: Vec<GroupElement> = (-2..=2).map(|x| GroupElement::new(&[x], 0)).collect();
        let x = Cylinder::from_config(&o.patch, &shape).unwrap();
        let y = Cylinder::from_config(&crate::array::Shifted::new(a.group(), &o.patch, &GroupElement::new(&[-3], 0)), &shape)
            .unwrap();
        let found = regional_proximality_check(&[x.clone(), y.clone()], &shape, 40, &o).unwrap();
        assert!(found.is_some());
    }

    #[test]
    fn entropy_bracket() {
        let b = entropy_bounds(2, 2).unwrap();
        assert_eq!(b.lower_bits, b.upper_bits);
        let b = entropy_bounds(2, 16).unwrap();
        assert_eq!((b.lower_bits, b.upper_bits), (1.0, 4.0));
        assert!(entropy_bounds(3, 2).is_err());
    }
}
