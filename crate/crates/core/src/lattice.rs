//! Arithmetic in G = Z^r ⋊ F, the lattice chain Γ_i and box domains D_i, D_iR.

use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Rational;

pub const MAX_RANK: usize = 4;

pub type Vector = [i64; MAX_RANK];

/// Element (v, f) of Z^r ⋊ F. Coordinates past `rank` are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub f: u16,
    pub v: Vector,
    pub rank: u8,
}

impl GroupElement {
    pub fn new(v: &[i64], f: usize) -> Self {
        assert!(v.len() <= MAX_RANK, "rank {} exceeds {}", v.len(), MAX_RANK);
        let mut w = [0; MAX_RANK];
        w[..v.len()].copy_from_slice(v);
        GroupElement { f: f as u16, v: w, rank: v.len() as u8 }
    }

    pub fn lattice(v: &[i64]) -> Self {
        Self::new(v, 0)
    }

    pub fn identity(rank: usize) -> Self {
        GroupElement { f: 0, v: [0; MAX_RANK], rank: rank as u8 }
    }

    pub fn coords(&self) -> &[i64] {
        &self.v[..self.rank as usize]
    }

    pub fn finite(&self) -> usize {
        self.f as usize
    }

    pub fn is_lattice(&self) -> bool {
        self.f == 0
    }

    pub fn max_norm(&self) -> i64 {
        self.coords().iter().map(|x| x.abs()).max().unwrap_or(0)
    }

    /// Key for the canonical candidate order: finite part, then max-norm, then lexicographic.
    pub fn search_key(&self) -> (u16, i64, Vector) {
        (self.f, self.max_norm(), self.v)
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{})", self.coords(), self.f)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Serialize, Deserialize)]
struct ElementRepr {
    v: Vec<i64>,
    f: usize,
}

impl Serialize for GroupElement {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ElementRepr { v: self.coords().to_vec(), f: self.finite() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for GroupElement {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = ElementRepr::deserialize(d)?;
        if r.v.len() > MAX_RANK {
            return Err(serde::de::Error::custom("rank too large"));
        }
        Ok(GroupElement::new(&r.v, r.f))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct Matrix {
    pub n: usize,
    pub a: [[i64; MAX_RANK]; MAX_RANK],
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        let mut a = [[0; MAX_RANK]; MAX_RANK];
        for (i, row) in a.iter_mut().enumerate().take(n) {
            row[i] = 1;
        }
        Matrix { n, a }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 || n > MAX_RANK {
            return Err(Error::spec(format!("matrix of size {n} unsupported")));
        }
        let mut a = [[0; MAX_RANK]; MAX_RANK];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::spec("matrix is not square"));
            }
            a[i][..n].copy_from_slice(row);
        }
        Ok(Matrix { n, a })
    }

    pub fn apply(&self, v: &Vector) -> Vector {
        let mut out = [0; MAX_RANK];
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|j| self.a[i][j] * v[j]).sum();
        }
        out
    }

    pub fn mul(&self, other: &Matrix) -> Matrix {
        let mut a = [[0; MAX_RANK]; MAX_RANK];
        for (i, row) in a.iter_mut().enumerate().take(self.n) {
            for (j, cell) in row.iter_mut().enumerate().take(self.n) {
                *cell = (0..self.n).map(|k| self.a[i][k] * other.a[k][j]).sum();
            }
        }
        Matrix { n: self.n, a }
    }

    pub fn determinant(&self) -> i64 {
        fn expand(m: &[[i64; MAX_RANK]; MAX_RANK], row: usize, cols: &[usize]) -> i64 {
            if cols.is_empty() {
                return 1;
            }
            let mut total = 0;
            for (k, &col) in cols.iter().enumerate() {
                let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != col).collect();
                let sign = if k % 2 == 0 { 1 } else { -1 };
                total += sign * m[row][col] * expand(m, row + 1, &rest);
            }
            total
        }
        let cols: Vec<usize> = (0..self.n).collect();
        expand(&self.a, 0, &cols)
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, w: &Vector) -> Vector {
        let mut out = [0; MAX_RANK];
        for (j, o) in out.iter_mut().enumerate().take(self.n) {
            *o = (0..self.n).map(|i| w[i] * self.a[i][j]).sum();
        }
        out
    }
}

/// The group Z^r ⋊ F given by a multiplication table on F and matrices M_f.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    rank: usize,
    table: Vec<Vec<usize>>,
    inverse: Vec<usize>,
    action: Vec<Matrix>,
}

impl GroupSpec {
    pub fn new(rank: usize, table: Vec<Vec<usize>>, action: Vec<Matrix>) -> Result<Self> {
        if rank == 0 || rank > MAX_RANK {
            return Err(Error::spec(format!("rank must be in 1..={MAX_RANK}, got {rank}")));
        }
        let n = table.len();
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::spec("finite part must be nonempty"));
        }
        if table.iter().any(|row| row.len() != n || row.iter().any(|&x| x >= n)) {
            return Err(Error::spec("finite part table is not a closed square table"));
        }
        if action.len() != n {
            return Err(Error::spec("need one matrix per finite-part element"));
        }
        if action.iter().any(|m| m.n != rank) {
            return Err(Error::spec("matrix size does not match rank"));
        }
        for a in 0..n {
            if table[0][a] != a || table[a][0] != a {
                return Err(Error::spec("index 0 is not the identity of the finite part"));
            }
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::spec(format!("finite part not associative at ({a},{b},{c})")));
                    }
                }
            }
        }
        let mut inverse = Vec::with_capacity(n);
        for a in 0..n {
            match (0..n).find(|&b| table[a][b] == 0 && table[b][a] == 0) {
                Some(b) => inverse.push(b),
                None => return Err(Error::spec(format!("finite part element {a} has no inverse"))),
            }
        }
        if action[0] != Matrix::identity(rank) {
            return Err(Error::spec("M_0 must be the identity matrix"));
        }
        for (f, m) in action.iter().enumerate() {
            if m.determinant().abs() != 1 {
                return Err(Error::spec(format!("M_{f} has determinant other than ±1")));
            }
        }
        for a in 0..n {
            for b in 0..n {
                if action[a].mul(&action[b]) != action[table[a][b]] {
                    return Err(Error::spec(format!("f ↦ M_f is not a homomorphism at ({a},{b})")));
                }
            }
        }
        Ok(GroupSpec { rank, table, inverse, action })
    }

    pub fn lattice(rank: usize) -> Result<Self> {
        Self::new(rank, vec![vec![0]], vec![Matrix::identity(rank)])
    }

    /// Z^r ⋊ Z/2 with the involution acting by `m`.
    pub fn with_involution(m: Matrix) -> Result<Self> {
        Self::new(m.n, vec![vec![0, 1], vec![1, 0]], vec![Matrix::identity(m.n), m])
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn finite_order(&self) -> usize {
        self.table.len()
    }

    pub fn is_abelian_lattice(&self) -> bool {
        self.table.len() == 1
    }

    pub fn matrix(&self, f: usize) -> &Matrix {
        &self.action[f]
    }

    pub fn finite_table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement::identity(self.rank)
    }

    pub fn element(&self, v: &[i64], f: usize) -> Result<GroupElement> {
        let g = GroupElement::new(v, f);
        self.conforms(&g)?;
        Ok(g)
    }

    pub fn conforms(&self, g: &GroupElement) -> Result<()> {
        if g.rank as usize != self.rank {
            return Err(Error::spec(format!("element {g} has rank {}, expected {}", g.rank, self.rank)));
        }
        if g.finite() >= self.table.len() {
            return Err(Error::spec(format!("element {g} has finite part out of range")));
        }
        Ok(())
    }

    #[inline]
    pub fn op(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let mv = self.action[a.finite()].apply(&b.v);
        let mut v = a.v;
        for j in 0..self.rank {
            v[j] += mv[j];
        }
        GroupElement { f: self.table[a.finite()][b.finite()] as u16, v, rank: a.rank }
    }

    #[inline]
    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        let fi = self.inverse[a.finite()];
        let mv = self.action[fi].apply(&a.v);
        let mut v = [0; MAX_RANK];
        for j in 0..self.rank {
            v[j] = -mv[j];
        }
        GroupElement { f: fi as u16, v, rank: a.rank }
    }

    pub fn checked_op(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.conforms(a)?;
        self.conforms(b)?;
        Ok(self.op(a, b))
    }

    pub fn checked_inv(&self, a: &GroupElement) -> Result<GroupElement> {
        self.conforms(a)?;
        Ok(self.inv(a))
    }

    /// t g t^{-1}
    pub fn conjugate(&self, t: &GroupElement, g: &GroupElement) -> GroupElement {
        self.op(&self.op(t, g), &self.inv(t))
    }
}

/// Moduli p^i for levels i = 1..=L; Γ_i = ⊕_j p^i_j Z inside G' = Z^r.
#[derive(Clone, Debug)]
pub struct SubgroupChain {
    moduli: Vec<Vector>,
    rank: usize,
}

impl SubgroupChain {
    /// Checks divisibility and strict growth; the `p > 2i+1` rule is separate.
    pub fn new(rank: usize, moduli: Vec<Vec<i64>>) -> Result<Self> {
        if moduli.is_empty() {
            return Err(Error::spec("subgroup chain needs at least one level"));
        }
        let mut out = Vec::with_capacity(moduli.len());
        for (k, p) in moduli.iter().enumerate() {
            if p.len() != rank {
                return Err(Error::spec(format!("level {} moduli have wrong length", k + 1)));
            }
            if p.iter().any(|&x| x <= 0) {
                return Err(Error::spec(format!("level {} moduli must be positive", k + 1)));
            }
            let mut w = [1; MAX_RANK];
            w[..rank].copy_from_slice(p);
            out.push(w);
        }
        for i in 1..out.len() {
            for j in 0..rank {
                let (a, b) = (out[i - 1][j], out[i][j]);
                if b % a != 0 || b <= a {
                    return Err(Error::spec(format!(
                        "moduli at level {} must strictly divide level {} (coordinate {j}: {a} vs {b})",
                        i,
                        i + 1
                    )));
                }
            }
        }
        Ok(SubgroupChain { moduli: out, rank })
    }

    pub fn validate_growth(&self) -> Result<()> {
        for (k, p) in self.moduli.iter().enumerate() {
            let i = (k + 1) as i64;
            if p[..self.rank].iter().any(|&x| x <= 2 * i + 1) {
                return Err(Error::spec(format!("level {i} moduli must exceed {}", 2 * i + 1)));
            }
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.moduli.len()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Moduli of level `i`; level 0 is all of Z^r (moduli 1).
    pub fn moduli(&self, i: usize) -> Result<&[i64]> {
        if i == 0 {
            const ONES: [i64; MAX_RANK] = [1; MAX_RANK];
            return Ok(&ONES[..self.rank]);
        }
        self.moduli
            .get(i - 1)
            .map(|p| &p[..self.rank])
            .ok_or(Error::LevelOutOfRange { level: i, max: self.moduli.len() })
    }

    pub fn index(&self, i: usize) -> Result<i128> {
        Ok(self.moduli(i)?.iter().map(|&x| x as i128).product())
    }
}

#[derive(Clone, Debug)]
pub struct DomainChain {
    /// Lower offsets q1 per level (1-based levels stored at index i-1).
    q1: Vec<Vector>,
}

impl DomainChain {
    /// Centered offsets aligned level to level. With `growth`, both offsets at level i must exceed i.
    pub fn centered(chain: &SubgroupChain, growth: bool) -> Result<Self> {
        let r = chain.rank();
        let mut q1: Vec<Vector> = Vec::with_capacity(chain.depth());
        for i in 1..=chain.depth() {
            let p = chain.moduli(i)?;
            let mut q = [0; MAX_RANK];
            for j in 0..r {
                let pj = p[j];
                let ok = |c: i64| !growth || (c > i as i64 && pj - c > i as i64);
                let pick = if i == 1 {
                    let c = pj / 2;
                    if !ok(c) {
                        return Err(Error::spec(format!("level 1 modulus {pj} too small for centered domain")));
                    }
                    c
                } else {
                    let pp = chain.moduli(i - 1)?[j];
                    let base = q1[i - 2][j].rem_euclid(pp);
                    (0..=pj / pp)
                        .map(|k| base + k * pp)
                        .filter(|&c| c <= pj && ok(c))
                        .min_by_key(|&c| ((2 * c - pj).abs(), c))
                        .ok_or_else(|| {
                            Error::spec(format!("no admissible domain offset at level {i}, coordinate {j}"))
                        })?
                };
                q[j] = pick;
            }
            q1.push(q);
        }
        let d = DomainChain { q1 };
        d.validate(chain, growth)?;
        Ok(d)
    }

    pub fn from_offsets(chain: &SubgroupChain, q1: Vec<Vec<i64>>, growth: bool) -> Result<Self> {
        let r = chain.rank();
        if q1.len() != chain.depth() {
            return Err(Error::spec("need one offset vector per level"));
        }
        let mut out = Vec::with_capacity(q1.len());
        for q in &q1 {
            if q.len() != r {
                return Err(Error::spec("offset vector has wrong length"));
            }
            let mut w = [0; MAX_RANK];
            w[..r].copy_from_slice(q);
            out.push(w);
        }
        let d = DomainChain { q1: out };
        d.validate(chain, growth)?;
        Ok(d)
    }

    pub fn validate(&self, chain: &SubgroupChain, growth: bool) -> Result<()> {
        let r = chain.rank();
        for i in 1..=chain.depth() {
            let p = chain.moduli(i)?;
            let q = &self.q1[i - 1];
            for j in 0..r {
                let (a, b) = (q[j], p[j] - q[j]);
                if a < 0 || b <= 0 {
                    return Err(Error::spec(format!("offsets at level {i} do not fit modulus {}", p[j])));
                }
                if growth && (a <= i as i64 || b <= i as i64) {
                    return Err(Error::spec(format!("offsets at level {i} must exceed {i}")));
                }
                if i > 1 {
                    let pp = chain.moduli(i - 1)?[j];
                    let prev = &self.q1[i - 2];
                    if (a - prev[j]).rem_euclid(pp) != 0 {
                        return Err(Error::spec(format!("offsets at level {i} not aligned with level {}", i - 1)));
                    }
                    let prev_b = pp - prev[j];
                    if a < prev[j] || b < prev_b {
                        return Err(Error::spec(format!("D_{} is not contained in D_{i}", i - 1)));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn lower(&self, i: usize) -> &[i64] {
        &self.q1[i - 1]
    }
}

/// Unique factorisation g = γ · (d, 0) · (0, r) with γ ∈ Γ_i and d ∈ D_i.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RightDecomposition {
    pub gamma: GroupElement,
    pub d: GroupElement,
    pub r: usize,
}

/// Group, subgroup chain and domain chain bundled together.
#[derive(Clone, Debug)]
pub struct Chain {
    pub group: GroupSpec,
    pub subgroups: SubgroupChain,
    pub domains: DomainChain,
}

impl Chain {
    pub fn new(group: GroupSpec, subgroups: SubgroupChain, domains: DomainChain) -> Result<Self> {
        if group.rank() != subgroups.rank() {
            return Err(Error::spec("group rank and chain rank differ"));
        }
        domains.validate(&subgroups, false)?;
        Ok(Chain { group, subgroups, domains })
    }

    /// Chain with centered default domains.
    pub fn centered(group: GroupSpec, moduli: Vec<Vec<i64>>, growth: bool) -> Result<Self> {
        let subgroups = SubgroupChain::new(group.rank(), moduli)?;
        if growth {
            subgroups.validate_growth()?;
        }
        let domains = DomainChain::centered(&subgroups, growth)?;
        Chain::new(group, subgroups, domains)
    }

    pub fn rank(&self) -> usize {
        self.group.rank()
    }

    pub fn depth(&self) -> usize {
        self.subgroups.depth()
    }

    pub fn finite_order(&self) -> usize {
        self.group.finite_order()
    }

    fn check_level(&self, i: usize) -> Result<()> {
        if i > self.depth() {
            Err(Error::LevelOutOfRange { level: i, max: self.depth() })
        } else {
            Ok(())
        }
    }

    /// Level 0 means G' = Z^r.
    pub fn member_gamma(&self, g: &GroupElement, i: usize) -> Result<bool> {
        let p = self.subgroups.moduli(i)?;
        Ok(g.is_lattice() && g.coords().iter().zip(p).all(|(x, m)| x.rem_euclid(*m) == 0))
    }

    /// Representative of v + Γ_i inside D_i (lattice part only). Level 0 gives 0.
    #[inline]
    pub fn reduce(&self, v: &Vector, i: usize) -> Vector {
        let mut d = [0; MAX_RANK];
        if i == 0 {
            return d;
        }
        let p = &self.subgroups.moduli[i - 1];
        let q = &self.domains.q1[i - 1];
        for j in 0..self.rank() {
            d[j] = (v[j] + q[j]).rem_euclid(p[j]) - q[j];
        }
        d
    }

    #[inline]
    pub fn in_domain(&self, v: &Vector, i: usize) -> bool {
        if i == 0 {
            return v[..self.rank()].iter().all(|&x| x == 0);
        }
        let p = &self.subgroups.moduli[i - 1];
        let q = &self.domains.q1[i - 1];
        (0..self.rank()).all(|j| -q[j] <= v[j] && v[j] < p[j] - q[j])
    }

    pub fn decompose_right(&self, g: &GroupElement, i: usize) -> Result<RightDecomposition> {
        self.check_level(i)?;
        Ok(self.decompose_unchecked(g, i))
    }

    #[inline]
    pub(crate) fn decompose_unchecked(&self, g: &GroupElement, i: usize) -> RightDecomposition {
        let d = self.reduce(&g.v, i);
        let mut gv = g.v;
        for j in 0..self.rank() {
            gv[j] -= d[j];
        }
        RightDecomposition {
            gamma: GroupElement { f: 0, v: gv, rank: g.rank },
            d: GroupElement { f: 0, v: d, rank: g.rank },
            r: g.finite(),
        }
    }

    /// Representative of the right coset Γ_i g inside D_iR.
    #[inline]
    pub fn coset_rep(&self, g: &GroupElement, i: usize) -> GroupElement {
        GroupElement { f: g.f, v: self.reduce(&g.v, i), rank: g.rank }
    }

    pub fn domain_size(&self, i: usize, with_r: bool) -> Result<usize> {
        let n = self.subgroups.index(i)? as usize;
        Ok(if with_r { n * self.finite_order() } else { n })
    }

    /// Lower and exclusive upper corners of D_i.
    pub fn domain_box(&self, i: usize) -> Result<(Vector, Vector)> {
        let p = self.subgroups.moduli(i)?;
        let mut lo = [0; MAX_RANK];
        let mut hi = [0; MAX_RANK];
        if i == 0 {
            for h in hi.iter_mut().take(self.rank()) {
                *h = 1;
            }
            return Ok((lo, hi));
        }
        let q = self.domains.lower(i);
        for j in 0..self.rank() {
            lo[j] = -q[j];
            hi[j] = p[j] - q[j];
        }
        Ok((lo, hi))
    }

    pub fn enumerate_domain(&self, i: usize, with_r: bool) -> Result<Vec<GroupElement>> {
        let (lo, hi) = self.domain_box(i)?;
        let sheets = if with_r { self.finite_order() } else { 1 };
        let mut out = Vec::with_capacity(self.domain_size(i, with_r)?);
        for f in 0..sheets {
            for v in box_points(self.rank(), &lo, &hi) {
                out.push(GroupElement { f: f as u16, v, rank: self.rank() as u8 });
            }
        }
        Ok(out)
    }

    /// Elements of D_{i} ∩ Γ_{k} for k ≤ i, in canonical order.
    pub fn domain_lattice_points(&self, i: usize, k: usize) -> Result<Vec<GroupElement>> {
        let (lo, hi) = self.domain_box(i)?;
        let p = self.subgroups.moduli(k)?.to_vec();
        let r = self.rank();
        let mut lo2 = [0; MAX_RANK];
        let mut hi2 = [0; MAX_RANK];
        for j in 0..r {
            lo2[j] = Integer::div_ceil(&lo[j], &p[j]);
            hi2[j] = Integer::div_floor(&(hi[j] - 1), &p[j]) + 1;
        }
        Ok(box_points(r, &lo2, &hi2)
            .map(|mut v| {
                for j in 0..r {
                    v[j] *= p[j];
                }
                GroupElement { f: 0, v, rank: r as u8 }
            })
            .collect())
    }

    pub fn in_domain_r(&self, g: &GroupElement, i: usize) -> bool {
        self.in_domain(&g.v, i)
    }

    /// |D_iR·g \ D_iR| / |D_iR| by exhaustive enumeration.
    pub fn folner_ratio(&self, i: usize, g: &GroupElement) -> Result<Rational> {
        self.group.conforms(g)?;
        let dom = self.enumerate_domain(i, true)?;
        let leaked = dom.iter().filter(|x| !self.in_domain_r(&self.group.op(x, g), i)).count();
        Ok(Rational::new(leaked as i128, dom.len() as i128))
    }

    pub fn check_index_condition(&self, i: usize) -> Result<IndexCheck> {
        let index = self.subgroups.index(i + 1)? / self.subgroups.index(i)?;
        Ok(index_condition(i, index))
    }

    /// Corner bound: d ∈ D_n, γ ∈ Γ_{n+s} with d ∈ γ + D_{n+s}; |B(d,s) ∩ (γ + D_{n+s})| ≥ b(s)/2^r.
    pub fn corner_lemma_check(&self, n: usize, s: usize, d: &GroupElement) -> Result<CornerCheck> {
        if !self.group.is_abelian_lattice() {
            return Err(Error::spec("corner lemma check requires an abelian group"));
        }
        self.check_level(n + s)?;
        if !d.is_lattice() || !self.in_domain(&d.v, n) {
            return Err(Error::spec(format!("{d} is not in D_{n}")));
        }
        let gamma = self.decompose_unchecked(d, n + s).gamma;
        let r = self.rank();
        let mut lo = [0; MAX_RANK];
        let mut hi = [0; MAX_RANK];
        for j in 0..r {
            lo[j] = d.v[j] - s as i64;
            hi[j] = d.v[j] + s as i64 + 1;
        }
        let mut count = 0u64;
        for z in box_points(r, &lo, &hi) {
            let mut w = z;
            for j in 0..r {
                w[j] -= gamma.v[j];
            }
            if self.in_domain(&w, n + s) {
                count += 1;
            }
        }
        let b = (2 * s as u64 + 1).pow(r as u32);
        let holds = count * (1u64 << r) >= b;
        Ok(CornerCheck { witness: *d, gamma, count, box_size: b, holds })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CornerCheck {
    pub witness: GroupElement,
    pub gamma: GroupElement,
    pub count: u64,
    pub box_size: u64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct IndexCheck {
    pub level: usize,
    pub index: i128,
    /// Upper bound for the irrational right-hand side.
    pub rhs_upper: f64,
    pub holds: bool,
}

/// [Γ_i : Γ_{i+1}] > 1/(1 − 2^{−(1/2)^{i+1}}), using a one-ulp upward bound on the right side.
pub fn index_condition(i: usize, index: i128) -> IndexCheck {
    let e = 0.5f64.powi(i as i32 + 1);
    let rhs = 1.0 / (1.0 - 2f64.powf(-e));
    let rhs_upper = next_up(rhs);
    // index is an integer, so index > rhs_upper ⟺ index ≥ floor(rhs_upper) + 1.
    let holds = index > rhs_upper.floor() as i128;
    IndexCheck { level: i, index, rhs_upper, holds }
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

/// b(m) = (2m+1)^r.
pub fn box_size(rank: usize, m: u64) -> u128 {
    (2 * m as u128 + 1).pow(rank as u32)
}

/// b(m+s)/b(m) < 1 + eps, exactly.
pub fn box_count_bound(rank: usize, m: u64, s: u64, eps: Rational) -> bool {
    let lhs = Rational::from_integer(box_size(rank, m + s) as i128);
    lhs < (Rational::from_integer(1) + eps) * Rational::from_integer(box_size(rank, m) as i128)
}

/// Smallest m ≥ 1 with b(m+s)/b(m) < 1 + eps.
pub fn box_count_threshold(rank: usize, s: u64, eps: Rational) -> u64 {
    let mut m = 1;
    while !box_count_bound(rank, m, s, eps) {
        m += 1;
    }
    m
}

/// Points of the box lo ≤ x < hi (first `rank` coordinates) in lexicographic order.
pub fn box_points(rank: usize, lo: &Vector, hi: &Vector) -> impl Iterator<Item = Vector> {
    let (lo, hi) = (*lo, *hi);
    let empty = (0..rank).any(|j| lo[j] >= hi[j]);
    let mut cur = if empty { None } else { Some(lo) };
    std::iter::from_fn(move || {
        let out = cur?;
        let mut next = out;
        let mut j = rank;
        loop {
            if j == 0 {
                cur = None;
                break;
            }
            j -= 1;
            next[j] += 1;
            if next[j] < hi[j] {
                cur = Some(next);
                break;
            }
            next[j] = lo[j];
        }
        Some(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dihedral() -> GroupSpec {
        GroupSpec::with_involution(Matrix::from_rows(&[vec![-1]]).unwrap()).unwrap()
    }

    #[test]
    fn dihedral_product_and_inverse() {
        let g = dihedral();
        let a = g.element(&[7], 1).unwrap();
        let b = g.element(&[2], 0).unwrap();
        assert_eq!(g.op(&a, &b), GroupElement::new(&[5], 1));
        let c = g.element(&[3], 1).unwrap();
        assert_eq!(g.inv(&c), c);
        assert_eq!(g.op(&c, &g.inv(&c)), g.identity());
        assert_eq!(g.op(&a, &g.identity()), a);
    }

    #[test]
    fn mismatched_rank_rejected() {
        let g = dihedral();
        assert!(g.checked_op(&GroupElement::new(&[1, 2], 0), &g.identity()).is_err());
        assert!(g.checked_op(&GroupElement::new(&[1], 5), &g.identity()).is_err());
    }

    #[test]
    fn bad_tables_rejected() {
        let m = Matrix::identity(1);
        assert!(GroupSpec::new(1, vec![vec![0, 1], vec![1, 1]], vec![m, m]).is_err());
        let two = Matrix::from_rows(&[vec![2]]).unwrap();
        assert!(GroupSpec::new(1, vec![vec![0, 1], vec![1, 0]], vec![m, two]).is_err());
    }

    #[test]
    fn membership() {
        let c = Chain::centered(dihedral(), vec![vec![5], vec![35]], false).unwrap();
        assert!(c.member_gamma(&GroupElement::new(&[10], 0), 1).unwrap());
        assert!(!c.member_gamma(&GroupElement::new(&[7], 0), 1).unwrap());
        assert!(!c.member_gamma(&GroupElement::new(&[5], 1), 1).unwrap());
        assert!(c.member_gamma(&GroupElement::new(&[5], 0), 3).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5]], false).unwrap();
        let d = z.decompose_right(&GroupElement::new(&[7], 0), 1).unwrap();
        assert_eq!((d.gamma.v[0], d.d.v[0], d.r), (5, 2, 0));
        let d = z.decompose_right(&GroupElement::new(&[-3], 0), 1).unwrap();
        assert_eq!((d.gamma.v[0], d.d.v[0]), (-5, 2));
        let dh = Chain::centered(dihedral(), vec![vec![5]], false).unwrap();
        let d = dh.decompose_right(&GroupElement::new(&[7], 1), 1).unwrap();
        assert_eq!((d.gamma, d.d.v[0], d.r), (GroupElement::new(&[5], 0), 2, 1));
        let recomposed = dh.group.op(&dh.group.op(&d.gamma, &d.d), &GroupElement::new(&[0], d.r));
        assert_eq!(recomposed, GroupElement::new(&[7], 1));
    }

    #[test]
    fn domain_enumeration() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5]], false).unwrap();
        let d: Vec<i64> = z.enumerate_domain(1, false).unwrap().iter().map(|g| g.v[0]).collect();
        assert_eq!(d, vec![-2, -1, 0, 1, 2]);
        let z2 = Chain::centered(GroupSpec::lattice(2).unwrap(), vec![vec![5, 5]], false).unwrap();
        assert_eq!(z2.enumerate_domain(1, false).unwrap().len(), 25);
        let dh = Chain::centered(dihedral(), vec![vec![5]], false).unwrap();
        let e = dh.enumerate_domain(1, true).unwrap();
        assert_eq!(e.len(), 10);
        assert!(e.contains(&dh.group.identity()));
        assert!(e.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn default_offsets() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5], vec![25], vec![125]], true).unwrap();
        let spans: Vec<(i64, i64)> = (1..=3)
            .map(|i| {
                let (lo, hi) = z.domain_box(i).unwrap();
                (lo[0], hi[0])
            })
            .collect();
        assert_eq!(spans, vec![(-2, 3), (-12, 13), (-62, 63)]);
        assert!(Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![3]], true).is_err());
    }

    #[test]
    fn folner_examples() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5]], false).unwrap();
        assert_eq!(z.folner_ratio(1, &z.group.identity()).unwrap(), Rational::from_integer(0));
        assert_eq!(z.folner_ratio(1, &GroupElement::new(&[1], 0)).unwrap(), Rational::new(1, 5));
        let dh = Chain::centered(dihedral(), vec![vec![5], vec![35]], false).unwrap();
        // Right multiplication by (1,e) moves the s-sheet left and the e-sheet right.
        assert_eq!(dh.folner_ratio(1, &GroupElement::new(&[1], 0)).unwrap(), Rational::new(2, 10));
        assert!(dh.folner_ratio(2, &GroupElement::new(&[1], 0)).unwrap() <= Rational::new(2, 10));
    }

    #[test]
    fn index_condition_examples() {
        let z2 = Chain::centered(GroupSpec::lattice(2).unwrap(), vec![vec![5, 5], vec![25, 25]], true).unwrap();
        let c = z2.check_index_condition(1).unwrap();
        assert_eq!(c.index, 25);
        assert!((c.rhs_upper - 6.29).abs() < 0.01);
        assert!(c.holds);
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![4], vec![8]], false).unwrap();
        assert!(!z.check_index_condition(1).unwrap().holds);
        for i in 0..10 {
            assert!(!index_condition(i, 1).holds);
        }
    }

    #[test]
    fn box_count_examples() {
        assert!(box_count_bound(1, 1, 1, Rational::from_integer(1)));
        assert!(!box_count_bound(2, 1, 1, Rational::new(1, 2)));
        let m0 = box_count_threshold(2, 1, Rational::new(1, 10));
        assert!((m0..m0 + 50).all(|m| box_count_bound(2, m, 1, Rational::new(1, 10))));
        assert!(!box_count_bound(2, m0 - 1, 1, Rational::new(1, 10)) || m0 == 1);
    }

    #[test]
    fn corner_lemma() {
        let z = Chain::centered(GroupSpec::lattice(1).unwrap(), vec![vec![5], vec![25], vec![125]], true).unwrap();
        let c = z.corner_lemma_check(1, 1, &GroupElement::new(&[0], 0)).unwrap();
        assert!(c.holds && c.count * 2 >= 3);
        let z2 = Chain::centered(GroupSpec::lattice(2).unwrap(), vec![vec![5, 5], vec![25, 25], vec![125, 125]], true)
            .unwrap();
        for d in z2.enumerate_domain(1, false).unwrap() {
            for s in 1..=2 {
                assert!(z2.corner_lemma_check(1, s, &d).unwrap().holds, "{d} s={s}");
            }
        }
        let inside = z2.corner_lemma_check(1, 1, &GroupElement::new(&[0, 0], 0)).unwrap();
        assert_eq!(inside.count, inside.box_size);
    }

    #[test]
    fn domain_tiling_and_bijection() {
        let z2 = Chain::centered(GroupSpec::lattice(2).unwrap(), vec![vec![5, 5], vec![25, 25], vec![125, 125]], true)
            .unwrap();
        for i in 1..3 {
            let mut tiled = std::collections::HashSet::new();
            for g in z2.domain_lattice_points(i + 1, i).unwrap() {
                for d in z2.enumerate_domain(i, false).unwrap() {
                    assert!(tiled.insert(z2.group.op(&g, &d)));
                }
            }
            let big: std::collections::HashSet<_> = z2.enumerate_domain(i + 1, false).unwrap().into_iter().collect();
            assert_eq!(tiled, big);
        }
        let dh = Chain::centered(dihedral(), vec![vec![5], vec![35]], false).unwrap();
        let mut seen = std::collections::HashSet::new();
        for x in -40..40 {
            for f in 0..2 {
                let g = GroupElement::new(&[x], f);
                let d = dh.decompose_right(&g, 2).unwrap();
                assert!(seen.insert((d.gamma, d.d, d.r)));
                let back = dh.group.op(&dh.group.op(&d.gamma, &d.d), &GroupElement::new(&[0], d.r));
                assert_eq!(back, g);
            }
        }
    }

    #[test]
    fn determinant() {
        let m = Matrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(m.determinant(), -1);
        let m = Matrix::from_rows(&[vec![2, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]).unwrap();
        assert_eq!(m.determinant(), 1);
    }
}
