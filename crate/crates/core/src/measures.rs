//! Exact invariant-measure bookkeeping: symbol frequencies of the periodic approximants,
//! the d_n product formula, the matrices A_n and A_0, Z_{i,k} masses, and pattern censuses.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use crate::array::{Family, Symbol, SymbolPatch, ToeplitzArray, Window, BETA};
use crate::error::{Error, Result};
use crate::lattice::GroupElement;
use crate::toeplitz_g::{GroupToeplitz, Variant};
use crate::Rational;

fn ratio(a: usize, b: usize) -> Rational {
    Rational::new(a as i128, b as i128)
}

/// Per-level counts on D_nR.
#[derive(Clone, Debug, Serialize)]
pub struct CountTable {
    pub level: usize,
    pub domain_size: usize,
    /// (α, a_{n,α}) with a_{n,α} = |D_nR ∩ Per(η, Γ_n, α)|, over the whole alphabet.
    pub per_counts: Vec<(Symbol, usize)>,
    /// Positions of D_nR outside every Per(η, Γ_n, ·).
    pub fresh: usize,
    pub d: Rational,
}

impl CountTable {
    pub fn d_alpha(&self, alpha: Symbol) -> Rational {
        let a = self.per_counts.iter().find(|(s, _)| *s == alpha).map_or(0, |(_, c)| *c);
        ratio(a, self.domain_size)
    }
}

/// Counts over D_nR; the Per sets are the level-≤n strata.
pub fn count_table<A: ToeplitzArray + ?Sized>(array: &A, n: usize) -> Result<CountTable> {
    let chain = array.chain();
    let w = Window::domain(chain, n, true)?;
    let alphabet = array.alphabet();
    let tallies = (0..w.len())
        .into_par_iter()
        .fold(
            || vec![0usize; 256 + 1],
            |mut acc, k| {
                match array.cell(&w.element(k)) {
                    Some(c) if c.level as usize <= n => acc[c.symbol as usize] += 1,
                    _ => acc[256] += 1,
                }
                acc
            },
        )
        .reduce(|| vec![0usize; 257], |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect());
    let per_counts: Vec<(Symbol, usize)> = alphabet.iter().map(|&s| (s, tallies[s as usize])).collect();
    let per: usize = per_counts.iter().map(|(_, c)| c).sum();
    if per + tallies[256] != w.len() {
        return Err(Error::invariant(format!("level-{n} strata do not partition D_{n}R")));
    }
    Ok(CountTable { level: n, domain_size: w.len(), per_counts, fresh: tallies[256], d: ratio(per, w.len()) })
}

/// Closed form for 1 − d_{n+1}:
/// (1 − 1/|D_1|)·∏_{j≤n}(1 − |D_j|/|D_{j+1}|) for group arrays,
/// (1 − 2/p_1)·∏_{j≤n}(1 − 2p_j/p_{j+1}) for Williams arrays.
pub fn one_minus_d_closed_form<A: ToeplitzArray + ?Sized>(array: &A, n1: usize) -> Result<Rational> {
    let chain = array.chain();
    let size = |i: usize| chain.subgroups.index(i);
    let lead = if array.family() == Family::Williams { 2 } else { 1 };
    let mut acc = Rational::from_integer(1) - Rational::new(lead, size(1)?);
    for j in 1..n1 {
        acc *= Rational::from_integer(1) - Rational::new(lead * size(j)?, size(j + 1)?);
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize)]
pub struct DProductCheck {
    pub level: usize,
    pub counted: Rational,
    pub closed_form: Rational,
    pub equal: bool,
    /// d_{n+1} < 1 − d_{n+1}.
    pub below_half: bool,
}

/// Counted d_{n+1} against the product formula.
pub fn d_product_check<A: ToeplitzArray + ?Sized>(array: &A, n: usize) -> Result<DProductCheck> {
    let counted = count_table(array, n + 1)?.d;
    let closed_form = Rational::from_integer(1) - one_minus_d_closed_form(array, n + 1)?;
    Ok(DProductCheck {
        level: n + 1,
        counted,
        closed_form,
        equal: counted == closed_form,
        below_half: counted < Rational::from_integer(1) - counted,
    })
}

/// Symbol frequency vector over a window, in alphabet order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MeasureVector {
    pub symbols: Vec<Symbol>,
    pub mass: Vec<Rational>,
}

impl MeasureVector {
    pub fn get(&self, s: Symbol) -> Rational {
        self.symbols.iter().position(|&x| x == s).map_or(Rational::from_integer(0), |k| self.mass[k])
    }

    pub fn total(&self) -> Rational {
        self.mass.iter().sum()
    }

    /// p(μ) = (μ[1], ..., μ[m], μ[β]).
    pub fn p_vector(&self, m: usize) -> Vec<Rational> {
        let mut v: Vec<Rational> = (1..=m as Symbol).map(|s| self.get(s)).collect();
        v.push(self.get(BETA));
        v
    }
}

/// Frequencies of η over D_nR, which are the symbol masses of μ_n.
pub fn mu_n_freq(t: &GroupToeplitz, n: usize) -> Result<MeasureVector> {
    let w = Window::domain(t.chain(), n, true)?;
    let mut counts = vec![0usize; 256];
    for g in w.elements() {
        counts[t.eta_value(&g)?.symbol as usize] += 1;
    }
    let symbols = t.alphabet();
    let mass = symbols.iter().map(|&s| ratio(counts[s as usize], w.len())).collect();
    let mv = MeasureVector { symbols, mass };
    if mv.total() != Rational::from_integer(1) {
        return Err(Error::invariant("frequencies do not sum to one"));
    }
    Ok(mv)
}

/// (1/|D_1|)(1 − 1/|R|).
pub fn beta_mass_closed_form(t: &GroupToeplitz) -> Result<Rational> {
    let r = t.chain().finite_order() as i128;
    Ok(Rational::new(1, t.chain().subgroups.index(1)?) * (Rational::from_integer(1) - Rational::new(1, r)))
}

#[derive(Clone, Debug, Serialize)]
pub struct FreqIdentity {
    pub level: usize,
    pub step_symbol: Symbol,
    pub counted: Rational,
    /// (|J(n)R| + a_{n,α_{n+1}})/|D_nR|.
    pub formula: Rational,
    pub beta_counted: Rational,
    pub beta_formula: Rational,
    pub holds: bool,
}

pub fn frequency_identity(t: &GroupToeplitz, n: usize) -> Result<FreqIdentity> {
    let mu = mu_n_freq(t, n)?;
    let table = count_table(t, n)?;
    let s = t.symbol(n + 1);
    let a = table.per_counts.iter().find(|(x, _)| *x == s).map_or(0, |(_, c)| *c);
    let formula = ratio(table.fresh + a, table.domain_size);
    let beta_formula = beta_mass_closed_form(t)?;
    let beta_counted = mu.get(BETA);
    Ok(FreqIdentity {
        level: n,
        step_symbol: s,
        counted: mu.get(s),
        formula,
        beta_counted,
        beta_formula,
        holds: mu.get(s) == formula && beta_counted == beta_formula,
    })
}

/// μ_N(C_{n,i}) for i = 1..m: the orbit point σ^{u^{-1}}η_N, u ∈ D_NR, lies in C_n exactly
/// when u ∈ Γ_n, and then in C_{n,i} when η is constantly i on uJ(n)R.
pub fn cell_masses(t: &GroupToeplitz, n: usize, big_n: usize, j_n: &[GroupElement]) -> Result<Vec<Rational>> {
    if big_n <= n {
        return Err(Error::Config(format!("need N > n, got N = {big_n}, n = {n}")));
    }
    check_eta_n_in_e_n(t, n, big_n)?;
    let chain = t.chain();
    let grp = &chain.group;
    let gammas = chain.domain_lattice_points(big_n, n)?;
    let jr: Vec<GroupElement> = j_n
        .iter()
        .flat_map(|j| {
            (0..chain.finite_order()).map(move |f| grp.op(j, &GroupElement::new(&vec![0; chain.rank()], f)))
        })
        .collect();
    let symbols: Vec<Symbol> = gammas
        .par_iter()
        .map(|gamma| {
            let mut common = None;
            for x in &jr {
                let s = t.eta_value(&grp.op(gamma, x))?.symbol;
                match common {
                    None => common = Some(s),
                    Some(c) if c != s => {
                        return Err(Error::invariant(format!("η is not constant on {gamma}·J({n})R")));
                    }
                    _ => {}
                }
            }
            match common {
                Some(s) if s != BETA => Ok(s),
                _ => Err(Error::invariant(format!("{gamma}·J({n})R carries no step symbol"))),
            }
        })
        .collect::<Result<_>>()?;
    let total = Window::domain(chain, big_n, true)?.len();
    Ok((1..=t.m() as Symbol).map(|i| ratio(symbols.iter().filter(|&&s| s == i).count(), total)).collect())
}

/// η_N agrees with η's Γ_n-periodic part over one full period D_NR.
pub fn check_eta_n_in_e_n(t: &GroupToeplitz, n: usize, big_n: usize) -> Result<()> {
    let chain = t.chain();
    let w = Window::domain(chain, big_n, true)?;
    let bad = (0..w.len()).into_par_iter().find_any(|&k| {
        let h = w.element(k);
        let rep = chain.coset_rep(&h, n);
        match t.cell(&rep) {
            Some(c) if c.level as usize <= n => t.cell(&h).map(|x| x.symbol) != Some(c.symbol),
            _ => false,
        }
    });
    match bad {
        Some(k) => Err(Error::invariant(format!("η_{big_n} leaves E_{n} at {}", w.element(k)))),
        None => Ok(()),
    }
}

pub type IntMatrix = Vec<Vec<i128>>;

/// A_n: diagonal q−1 (q at α_{n+1}), and a row of ones at α_{n+1}, with q = |D_{n+1}|/|D_n|.
pub fn matrix_an(t: &GroupToeplitz, n: usize) -> Result<IntMatrix> {
    let sub = &t.chain().subgroups;
    let q = sub.index(n + 1)? / sub.index(n)?;
    let a = t.symbol(n + 1) as usize - 1;
    let m = t.m();
    Ok((0..m)
        .map(|i| {
            (0..m)
                .map(|j| match (i == j, i == a) {
                    (true, false) => q - 1,
                    (true, true) => q,
                    (false, false) => 0,
                    (false, true) => 1,
                })
                .collect()
        })
        .collect())
}

/// A_0, (m+1)×m, last row for β.
pub fn matrix_a0(t: &GroupToeplitz, j1_len: usize) -> IntMatrix {
    let m = t.m();
    let r = t.chain().finite_order() as i128;
    let jr = (j1_len * t.chain().finite_order()) as i128;
    (0..=m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    if i == m {
                        r - 1
                    } else if i == j && i == 0 {
                        1 + jr
                    } else if i == j {
                        jr
                    } else if i == 0 {
                        1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &IntMatrix, v: &[Rational]) -> Vec<Rational> {
    a.iter().map(|row| row.iter().zip(v).map(|(&x, y)| Rational::from_integer(x) * y).sum()).collect()
}

/// Rank by Gaussian elimination over Q.
pub fn rank(a: &IntMatrix) -> usize {
    let mut m: Vec<Vec<Rational>> =
        a.iter().map(|r| r.iter().map(|&x| Rational::from_integer(x)).collect()).collect();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c] != Rational::from_integer(0)) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] != Rational::from_integer(0) {
                let f = m[r][c] / m[rank][c];
                for k in c..cols {
                    let sub = f * m[rank][k];
                    m[r][k] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

#[derive(Clone, Debug, Serialize)]
pub struct RecursionCheck {
    pub n: usize,
    pub big_n: usize,
    pub matrix: IntMatrix,
    pub lhs: Vec<Rational>,
    pub rhs: Vec<Rational>,
    pub holds: bool,
}

/// A_n μ_N^{(n+1)} = μ_N^{(n)}.
pub fn verify_an_recursion(t: &GroupToeplitz, n: usize, big_n: usize, j: &[Vec<GroupElement>]) -> Result<RecursionCheck> {
    if big_n <= n + 1 {
        return Err(Error::Config(format!("need N > n+1, got N = {big_n}, n = {n}")));
    }
    let a = matrix_an(t, n)?;
    let upper = cell_masses(t, n + 1, big_n, &j[n + 1])?;
    let lower = cell_masses(t, n, big_n, &j[n])?;
    let lhs = mat_vec(&a, &upper);
    Ok(RecursionCheck { n, big_n, holds: lhs == lower, matrix: a, lhs, rhs: lower })
}

/// p(μ_N) = A_0 μ_N^{(1)}.
pub fn matrix_a0_check(t: &GroupToeplitz, big_n: usize, j: &[Vec<GroupElement>]) -> Result<RecursionCheck> {
    let a0 = matrix_a0(t, j[1].len());
    let mu1 = cell_masses(t, 1, big_n, &j[1])?;
    let lhs = mat_vec(&a0, &mu1);
    let p = mu_n_freq(t, big_n)?.p_vector(t.m());
    if rank(&a0) != t.m() {
        return Err(Error::invariant("A_0 does not have rank m"));
    }
    Ok(RecursionCheck { n: 0, big_n, holds: lhs == p, matrix: a0, lhs, rhs: p })
}

/// t⃗_1..t⃗_m with t_α ≈ d_{N,α} and d ≈ d_N.
pub fn simplex_vertices(t: &GroupToeplitz, big_n: usize) -> Result<Vec<Vec<Rational>>> {
    let table = count_table(t, big_n)?;
    let one_minus_d = Rational::from_integer(1) - table.d;
    Ok((1..=t.m() as Symbol)
        .map(|i| {
            let mut v: Vec<Rational> = (1..=t.m() as Symbol)
                .map(|a| table.d_alpha(a) + if a == i { one_minus_d } else { Rational::from_integer(0) })
                .collect();
            v.push(table.d_alpha(BETA));
            v
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct NuEstimate {
    pub i: usize,
    pub s: usize,
    pub level: usize,
    pub p_vector: Vec<Rational>,
    /// min over j ≠ i of μ[i] − μ[j], against 1 − 2d_level.
    pub margin: Rational,
    pub margin_bound: Rational,
}

/// μ_{i+sm−1} as approximants of ν_i.
pub fn estimate_nu(t: &GroupToeplitz, i: usize, s_list: &[usize]) -> Result<Vec<NuEstimate>> {
    let m = t.m();
    s_list
        .iter()
        .map(|&s| {
            let level = i + s * m - 1;
            let p_vector = mu_n_freq(t, level)?.p_vector(m);
            let d = count_table(t, level)?.d;
            let margin = (0..m).filter(|&j| j != i - 1).map(|j| p_vector[i - 1] - p_vector[j]).min().unwrap();
            Ok(NuEstimate { i, s, level, p_vector, margin, margin_bound: Rational::from_integer(1) - d - d })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ZMass {
    pub i: usize,
    pub k: usize,
    pub s: usize,
    pub mass: Rational,
    pub lower_bound: Rational,
    pub holds: bool,
}

/// μ_{i+sm−1}(Z_{i,k}): each u ∈ D_MR factors as u = γv with v ∈ D_LR, and
/// σ^{u^{-1}}η_M ∈ σ^{v^{-1}}C_{L,i} exactly when η is constantly i on γJ(L)R.
pub fn z_mass(t: &GroupToeplitz, i: usize, k: usize, s: usize, j_l: &[GroupElement]) -> Result<ZMass> {
    if s <= k {
        return Err(Error::Config(format!("need s > k, got s = {s}, k = {k}")));
    }
    let m = t.m();
    let l = i + k * m - 1;
    let big_m = i + s * m - 1;
    let cells = cell_masses(t, l, big_m, j_l)?;
    let dl = Window::domain(t.chain(), l, true)?.len();
    let mass = cells[i - 1] * Rational::from_integer(dl as i128);
    let lower_bound = Rational::new(1, dl as i128);
    Ok(ZMass { i, k, s, holds: mass >= lower_bound, mass, lower_bound })
}

#[derive(Clone, Debug, Serialize)]
pub struct ShiftInvariance {
    pub g: GroupElement,
    pub l1_difference: Rational,
    pub bound: Rational,
}

/// Frequencies of η_N over D_NR against D_NR·g, with the 2·Følner bound.
pub fn shift_invariance_check(t: &GroupToeplitz, big_n: usize, g: &GroupElement) -> Result<ShiftInvariance> {
    let chain = t.chain();
    let grp = &chain.group;
    let w = Window::domain(chain, big_n, true)?;
    let mut a = vec![0i128; 256];
    let mut b = vec![0i128; 256];
    for h in w.elements() {
        a[t.eta_n_value(big_n, &h)? as usize] += 1;
        b[t.eta_n_value(big_n, &grp.op(&h, g))? as usize] += 1;
    }
    let diff: i128 = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum();
    Ok(ShiftInvariance {
        g: *g,
        l1_difference: Rational::new(diff, w.len() as i128),
        bound: chain.folner_ratio(big_n, g)? * Rational::from_integer(2),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityRow {
    pub radius: i64,
    pub shape_size: usize,
    pub placements: usize,
    pub count: usize,
    /// log2(count)/shape_size.
    pub bits_per_site: f64,
}

/// Distinct patterns on boxes B(0,s) of the identity sheet, over placements fully inside
/// the window with every cell defined.
pub fn complexity_profile(patch: &SymbolPatch, radii: &[i64]) -> Result<Vec<ComplexityRow>> {
    let w = &patch.window;
    let r = w.rank();
    radii
        .iter()
        .map(|&s| {
            if s < 0 {
                return Err(Error::Config("negative radius".into()));
            }
            let shape: Vec<GroupElement> = Window::ball(r, s, 1).elements().collect();
            let lo: Vec<i64> = w.lower().iter().map(|x| x + s).collect();
            let hi: Vec<i64> = w.upper().iter().map(|x| x - s).collect();
            let centers = Window::new(r, &lo, &hi, 1)
                .map_err(|_| Error::Config(format!("radius {s} does not fit the window")))?;
            let mut seen: HashSet<Vec<Symbol>> = HashSet::new();
            let mut placements = 0;
            let mut buf = Vec::with_capacity(shape.len());
            'place: for c in centers.elements() {
                buf.clear();
                for d in &shape {
                    let mut p = c;
                    for j in 0..r {
                        p.v[j] += d.v[j];
                    }
                    match patch.at_index(w.index(&p).expect("placement inside window")) {
                        Some(x) => buf.push(x),
                        None => continue 'place,
                    }
                }
                placements += 1;
                if !seen.contains(&buf) {
                    seen.insert(buf.clone());
                }
            }
            if placements < 100 {
                return Err(Error::Config(format!("radius {s} has only {placements} placements")));
            }
            Ok(ComplexityRow {
                radius: s,
                shape_size: shape.len(),
                placements,
                count: seen.len(),
                bits_per_site: (seen.len() as f64).log2() / shape.len() as f64,
            })
        })
        .collect()
}

/// Seeded full-shift control patch on [-n, n] over {0, 1}.
pub fn random_control(n: i64, seed: u64) -> SymbolPatch {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let window = Window::interval(n);
    let symbols = (0..window.len()).map(|_| Some(rng.gen_range(0..2u8))).collect();
    SymbolPatch { window, symbols }
}

pub fn strictly_decreasing(rows: &[ComplexityRow]) -> bool {
    rows.windows(2).all(|w| w[1].bits_per_site < w[0].bits_per_site)
}

/// The β mass is only defined for the virtual variant; for others it must vanish.
pub fn beta_mass_consistent(t: &GroupToeplitz, n: usize) -> Result<bool> {
    let mu = mu_n_freq(t, n)?;
    Ok(match t.variant() {
        Variant::Virtual => mu.get(BETA) == beta_mass_closed_form(t)?,
        Variant::Normal => mu.get(BETA) == Rational::from_integer(0),
    })
}
