//! Toeplitz arrays over Z^r ⋊ F built from the chain Γ_i and the domains D_i.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::array::{Cell, Family, Patch, Symbol, ToeplitzArray, Window, BETA};
use crate::error::{Error, Result};
use crate::lattice::{Chain, GroupElement, Vector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Γ_i normal, alphabet {1..m}. Only supported for F trivial.
    Normal,
    /// Right-coset construction with the extra symbol β on Γ_1(R \ {1}).
    Virtual,
}

#[derive(Clone, Debug)]
pub struct GroupToeplitz {
    chain: Chain,
    m: usize,
    variant: Variant,
}

impl GroupToeplitz {
    pub fn new(chain: Chain, m: usize, variant: Variant) -> Result<Self> {
        if !(2..=254).contains(&m) {
            return Err(Error::spec(format!("number of symbols must be in 2..=254, got {m}")));
        }
        if variant == Variant::Normal && chain.finite_order() != 1 {
            return Err(Error::spec("the normal-subgroup variant needs a trivial finite part"));
        }
        chain.subgroups.validate_growth()?;
        chain.domains.validate(&chain.subgroups, true)?;
        Ok(GroupToeplitz { chain, m, variant })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn depth(&self) -> usize {
        self.chain.depth()
    }

    /// α_i ∈ {1..m} with α_i ≡ i mod m.
    pub fn symbol(&self, level: usize) -> Symbol {
        match level % self.m {
            0 => self.m as Symbol,
            s => s as Symbol,
        }
    }

    /// Level n+1 holds Γ_{n+1}J(n)R; v lies there iff its Γ_{n+1}-representative is in D_n
    /// and no smaller n works.
    #[inline]
    pub fn level_of(&self, g: &GroupElement) -> Option<usize> {
        (0..self.depth()).find(|&n| self.chain.in_domain(&self.chain.reduce(&g.v, n + 1), n)).map(|n| n + 1)
    }

    pub fn eta_value(&self, g: &GroupElement) -> Result<Cell> {
        self.chain.group.conforms(g)?;
        self.cell(g).ok_or_else(|| {
            Error::DepthExhausted(format!("{g} is not reached within {} configured levels", self.depth()))
        })
    }

    /// η_n(γw) = η(w) for w ∈ D_nR.
    pub fn eta_n_value(&self, n: usize, g: &GroupElement) -> Result<Symbol> {
        if n == 0 || n > self.depth() {
            return Err(Error::LevelOutOfRange { level: n, max: self.depth() });
        }
        Ok(self.eta_value(&self.chain.coset_rep(g, n))?.symbol)
    }

    /// η on D_N R; needs levels through N+1.
    pub fn generate_eta(&self, n: usize) -> Result<Patch> {
        if n + 1 > self.depth() {
            return Err(Error::DepthExhausted(format!("η on D_{n}R needs {} levels, have {}", n + 1, self.depth())));
        }
        let patch = Patch::from_array(self, Window::domain(&self.chain, n, true)?);
        if let Some((g, _)) = patch.iter().find(|(_, c)| c.is_none()) {
            return Err(Error::invariant(format!("{g} left undefined on D_{n}R")));
        }
        Ok(patch)
    }

    /// J(0..=n) by the subtraction definition, each checked against the translate recursion.
    pub fn compute_j(&self, n: usize) -> Result<Vec<Vec<GroupElement>>> {
        if n > self.depth() {
            return Err(Error::LevelOutOfRange { level: n, max: self.depth() });
        }
        let mut sets: Vec<Vec<GroupElement>> = vec![vec![self.chain.group.identity()]];
        let mut members: Vec<HashSet<Vector>> = vec![sets[0].iter().map(|g| g.v).collect()];
        for k in 1..=n {
            let jk: Vec<GroupElement> = self
                .chain
                .enumerate_domain(k, false)?
                .into_iter()
                .filter(|x| (0..k).all(|i| !members[i].contains(&self.chain.reduce(&x.v, i + 1))))
                .collect();
            let rec = self.j_by_recursion(k, &sets[k - 1])?;
            let lhs: HashSet<Vector> = jk.iter().map(|g| g.v).collect();
            if lhs != rec || lhs.len() != jk.len() {
                return Err(Error::invariant(format!(
                    "J({k}) by subtraction ({} elements) differs from recursion ({} elements)",
                    lhs.len(),
                    rec.len()
                )));
            }
            members.push(lhs);
            sets.push(jk);
        }
        Ok(sets)
    }

    fn j_by_recursion(&self, k: usize, prev: &[GroupElement]) -> Result<HashSet<Vector>> {
        if k == 1 {
            return Ok(self.chain.enumerate_domain(1, false)?.into_iter().filter(|g| *g != self.chain.group.identity()).map(|g| g.v).collect());
        }
        let mut out = HashSet::new();
        for gamma in self.chain.domain_lattice_points(k, k - 1)? {
            if gamma == self.chain.group.identity() {
                continue;
            }
            for x in prev {
                out.insert(self.chain.group.op(&gamma, x).v);
            }
        }
        Ok(out)
    }

    /// Is η constant on γJ(i)R? Returns the common symbol or two disagreeing witnesses.
    pub fn verify_translate_constancy(&self, j_i: &[GroupElement], gamma: &GroupElement) -> Result<Constancy> {
        let g = &self.chain.group;
        let mut first: Option<(GroupElement, Symbol)> = None;
        for x in j_i {
            for f in 0..self.chain.finite_order() {
                let h = g.op(&g.op(gamma, x), &GroupElement::new(&vec![0; self.chain.rank()], f));
                let s = self.eta_value(&h)?.symbol;
                match first {
                    None => first = Some((h, s)),
                    Some((w, s0)) if s0 != s => {
                        return Ok(Constancy { constant: false, symbol: None, witnesses: Some((w, h)) })
                    }
                    _ => {}
                }
            }
        }
        let symbol = first.map(|(_, s)| s);
        let constant = symbol.is_some_and(|s| s != BETA || self.variant == Variant::Normal);
        Ok(Constancy { constant, symbol, witnesses: None })
    }

    /// Sizes of the strata Γ_{i+1}J(i)R inside D_NR, plus the β stratum, checking they partition it.
    pub fn strata_sizes(&self, patch: &Patch) -> Result<StrataReport> {
        let mut by_level = vec![0usize; self.depth()];
        let mut beta = 0usize;
        for (g, c) in patch.iter() {
            let c = c.ok_or_else(|| Error::invariant(format!("{g} undefined")))?;
            let lvl = c.level as usize;
            let expect = if lvl == 1 && !g.is_lattice() && self.variant == Variant::Virtual {
                beta += 1;
                BETA
            } else {
                by_level[lvl - 1] += 1;
                self.symbol(lvl)
            };
            if c.symbol != expect {
                return Err(Error::invariant(format!("{g} at level {lvl} carries {} not {expect}", c.symbol)));
            }
        }
        let total: usize = by_level.iter().sum::<usize>() + beta;
        if total != patch.window.len() {
            return Err(Error::invariant("strata do not cover the window"));
        }
        Ok(StrataReport { by_level, beta })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Constancy {
    pub constant: bool,
    pub symbol: Option<Symbol>,
    pub witnesses: Option<(GroupElement, GroupElement)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StrataReport {
    /// Entry i counts Γ_{i+1}J(i)R (level i+1), excluding the β stratum.
    pub by_level: Vec<usize>,
    pub beta: usize,
}

impl ToeplitzArray for GroupToeplitz {
    fn chain(&self) -> &Chain {
        &self.chain
    }

    fn step_symbols(&self) -> Vec<Symbol> {
        (1..=self.m as Symbol).collect()
    }

    fn alphabet(&self) -> Vec<Symbol> {
        match self.variant {
            Variant::Normal => self.step_symbols(),
            Variant::Virtual => (0..=self.m as Symbol).collect(),
        }
    }

    #[inline]
    fn cell(&self, g: &GroupElement) -> Option<Cell> {
        let level = self.level_of(g)?;
        let symbol = if level == 1 && !g.is_lattice() { BETA } else { self.symbol(level) };
        Some(Cell { symbol, level: level as u32 })
    }

    fn family(&self) -> Family {
        match self.variant {
            Variant::Normal => Family::Normal,
            Variant::Virtual => Family::Virtual,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{GroupSpec, Matrix};

    fn dihedral(levels: usize) -> GroupToeplitz {
        let g = GroupSpec::with_involution(Matrix::from_rows(&[vec![-1]]).unwrap()).unwrap();
        let moduli = (0..levels).map(|i| vec![5 * 5i64.pow(i as u32)]).collect();
        GroupToeplitz::new(Chain::centered(g, moduli, true).unwrap(), 2, Variant::Virtual).unwrap()
    }

    fn z2(levels: usize) -> GroupToeplitz {
        let moduli = (1..=levels).map(|i| vec![5i64.pow(i as u32); 2]).collect();
        GroupToeplitz::new(Chain::centered(GroupSpec::lattice(2).unwrap(), moduli, true).unwrap(), 2, Variant::Normal)
            .unwrap()
    }

    #[test]
    fn j_sets() {
        let t = dihedral(4);
        let j = t.compute_j(3).unwrap();
        assert_eq!(j[0], vec![t.chain.group.identity()]);
        let j1: Vec<i64> = j[1].iter().map(|g| g.v[0]).collect();
        assert_eq!(j1, vec![-2, -1, 1, 2]);
        // |J(2)| = |D_2| - |D_2 ∩ Γ_1| - |D_2 ∩ Γ_2 J(1)|
        let d2 = t.chain.enumerate_domain(2, false).unwrap();
        let in_g1 = d2.iter().filter(|x| x.v[0] % 5 == 0).count();
        let in_g2j1 = d2.iter().filter(|x| j1.contains(&t.chain.reduce(&x.v, 2)[0])).count();
        assert_eq!(j[2].len(), d2.len() - in_g1 - in_g2j1);
        let z = z2(4);
        z.compute_j(3).unwrap();
    }

    #[test]
    fn level_map_agrees_with_j_sets() {
        let t = z2(4);
        let j = t.compute_j(3).unwrap();
        let sets: Vec<HashSet<Vector>> = j.iter().map(|s| s.iter().map(|g| g.v).collect()).collect();
        for x in t.chain.enumerate_domain(3, false).unwrap() {
            let expected = (0..4).find(|&n| sets[n].contains(&t.chain.reduce(&x.v, n + 1))).map(|n| n + 1);
            assert_eq!(t.level_of(&x), expected, "{x}");
        }
    }

    #[test]
    fn dihedral_values() {
        let t = dihedral(4);
        assert_eq!(t.eta_value(&GroupElement::new(&[0], 0)).unwrap(), Cell { symbol: 1, level: 1 });
        assert_eq!(t.eta_value(&GroupElement::new(&[0], 1)).unwrap(), Cell { symbol: BETA, level: 1 });
        for d in [-2, -1, 1, 2] {
            for f in 0..2 {
                assert_eq!(t.eta_value(&GroupElement::new(&[d], f)).unwrap(), Cell { symbol: 2, level: 2 });
            }
        }
        // γ ∈ Γ_2 \ Γ_3, d ∈ J(1)
        let g = t.chain.group.op(&GroupElement::new(&[25], 0), &GroupElement::new(&[-1], 1));
        assert_eq!(t.eta_value(&g).unwrap().level, 2);
        assert!(t.eta_value(&GroupElement::new(&[10_000_000], 0)).is_ok());
        let shallow = dihedral(2);
        assert!(matches!(shallow.eta_value(&GroupElement::new(&[12], 0)), Err(Error::DepthExhausted(_))));
    }

    #[test]
    fn generated_patch_consistent() {
        let t = dihedral(4);
        let p = t.generate_eta(3).unwrap();
        let s = t.strata_sizes(&p).unwrap();
        assert_eq!(s.beta, 125 / 5);
        assert_eq!(s.by_level.iter().sum::<usize>() + s.beta, 250);
        assert!(t.generate_eta(4).is_err());
    }

    #[test]
    fn eta_n_periodic() {
        let t = dihedral(4);
        for x in -40..40 {
            for f in 0..2 {
                let g = GroupElement::new(&[x], f);
                let a = t.eta_n_value(2, &g).unwrap();
                assert_eq!(a, t.eta_n_value(2, &t.chain.group.op(&GroupElement::new(&[75], 0), &g)).unwrap());
                if t.chain.in_domain(&g.v, 2) {
                    assert_eq!(a, t.eta_value(&g).unwrap().symbol);
                }
            }
        }
    }

    #[test]
    fn translate_constancy() {
        let t = dihedral(5);
        let j = t.compute_j(2).unwrap();
        let c = t.verify_translate_constancy(&j[1], &t.chain.group.identity()).unwrap();
        assert_eq!((c.constant, c.symbol), (true, Some(t.symbol(2))));
        for gamma in t.chain.domain_lattice_points(3, 1).unwrap() {
            for i in 1..=2 {
                if i == 2 && !t.chain.member_gamma(&gamma, 2).unwrap() {
                    continue;
                }
                assert!(t.verify_translate_constancy(&j[i], &gamma).unwrap().constant, "{gamma} i={i}");
            }
        }
    }

    #[test]
    fn normal_variant_needs_trivial_f() {
        let g = GroupSpec::with_involution(Matrix::from_rows(&[vec![-1]]).unwrap()).unwrap();
        let c = Chain::centered(g, vec![vec![5], vec![25]], true).unwrap();
        assert!(GroupToeplitz::new(c, 2, Variant::Normal).is_err());
        let z = z2(3);
        assert!(!z.alphabet().contains(&BETA));
        assert!(z.generate_eta(2).unwrap().cells.iter().all(|c| c.unwrap().symbol != BETA));
    }
}
