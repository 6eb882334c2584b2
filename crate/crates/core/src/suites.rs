//! Invariant suites run by `verify-all`. Every check records whether it is a hard assertion and
//! where its number comes from.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::array::{Family, Patch, Shifted, SymbolPatch, ToeplitzArray, Window};
use crate::config::{Deck, DeckArray};
use crate::error::{Error, Result};
use crate::homomorphism::{equivariance_check, transport_certificate, validate_hom, HomSpec};
use crate::independence::{
    check_certificate, check_proximal_witness, entropy_bounds, find_independence_set, proximality_from_certificate,
    Budget, Certificate, Cylinder, LanguageOracle, SearchOutcome, CONVENTION,
};
use crate::lattice::GroupElement;
use crate::measures;
use crate::periods::{
    conjugation_identity_check, fiber_bound, fiber_radius, fiber_scan, piece_bound, tzeta_decompose, FiberScan,
    OdometerCoords, Subgroup,
};
use crate::toeplitz_g::GroupToeplitz;
use crate::toeplitz_z::{summarize, williams_generate, WilliamsArray};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Counted,
    ClosedForm,
    Search,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub passed: bool,
    /// Diagnostics are reported but do not decide the verdict.
    pub hard: bool,
    pub provenance: Provenance,
    pub detail: Value,
}

impl Check {
    fn hard(suite: &'static str, name: impl Into<String>, passed: bool, provenance: Provenance, detail: Value) -> Self {
        Check { suite, name: name.into(), passed, hard: true, provenance, detail }
    }

    fn diag(suite: &'static str, name: impl Into<String>, passed: bool, provenance: Provenance, detail: Value) -> Self {
        Check { suite, name: name.into(), passed, hard: false, provenance, detail }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    /// Wall-clock limit for each independence search.
    pub search_time: Option<Duration>,
}

impl Options {
    fn budget(&self, deck: &Deck) -> Budget {
        let b = Budget::nodes(deck.config.run.node_budget);
        match self.search_time {
            Some(t) => b.with_time(t),
            None => b,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub deck: String,
    pub version: String,
    pub convention: String,
    pub passed: bool,
    pub budget_exhausted: bool,
    pub checks: Vec<Check>,
    pub certificates: Vec<Certificate>,
}

fn j(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn rng(deck: &Deck, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(deck.config.run.seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn random_element(rng: &mut ChaCha8Rng, rank: usize, sheets: usize, radius: i64) -> GroupElement {
    let v: Vec<i64> = (0..rank).map(|_| rng.gen_range(-radius..=radius)).collect();
    GroupElement::new(&v, rng.gen_range(0..sheets))
}

/// J recursion, strata partition and index-condition diagnostics.
pub fn structure_suite(deck: &Deck) -> Result<Vec<Check>> {
    const S: &str = "structure";
    let mut out = Vec::new();
    match &deck.array {
        DeckArray::Group(t) => {
            let n = 4.min(t.depth());
            let js = t.compute_j(n);
            out.push(Check::hard(
                S,
                format!("j_recursion_n{n}"),
                js.is_ok(),
                Provenance::Counted,
                match &js {
                    Ok(js) => json!({ "sizes": js.iter().map(|x| x.len()).collect::<Vec<_>>() }),
                    Err(e) => json!({ "error": e.to_string() }),
                },
            ));
            let big_n = 3.min(t.depth() - 1);
            let patch = t.generate_eta(big_n)?;
            let undefined = patch.undefined_count();
            let strata = t.strata_sizes(&patch);
            out.push(Check::hard(
                S,
                format!("strata_partition_n{big_n}"),
                undefined == 0 && strata.is_ok(),
                Provenance::Counted,
                json!({ "window": patch.window.len(), "undefined": undefined, "strata": strata.ok() }),
            ));
            for i in 1..t.depth() {
                let c = t.chain().check_index_condition(i)?;
                out.push(Check::diag(S, format!("index_condition_i{i}"), c.holds, Provenance::ClosedForm, j(c)));
            }
        }
        DeckArray::Williams(w) => {
            let p = &w.params().periods;
            let patch = williams_generate(w.params(), p[2.min(p.len() - 1)])?;
            let lazy = patch.iter().all(|(g, c)| w.cell(&g) == c);
            out.push(Check::hard(S, "stepwise_equals_lazy", lazy, Provenance::Counted, json!({ "radius": p[2] })));
            let s = summarize(w.params(), &patch);
            let density = crate::Rational::new(s.undefined as i128, patch.window.len() as i128);
            out.push(Check::hard(
                S,
                "undefined_density_bound",
                density <= s.undefined_bound,
                Provenance::Counted,
                j(&s),
            ));
        }
    }
    Ok(out)
}

/// d_n product formula, and for group decks the frequency identities, β mass, A_n and A_0
/// recursions, simplex vertices, Z masses and shift invariance.
pub fn measures_suite(deck: &Deck) -> Result<Vec<Check>> {
    const S: &str = "measures";
    let mut out = Vec::new();
    let a = deck.array();
    for n in 0..=3 {
        let c = measures::d_product_check(a, n)?;
        let pass = c.equal && (n != 2 || c.below_half);
        out.push(Check::hard(S, format!("d_product_n{n}"), pass, Provenance::ClosedForm, j(&c)));
    }
    let Some(t) = deck.array.group_toeplitz() else {
        return Ok(out);
    };
    let big_n = deck.config.run.measure_level;
    for n in 1..=big_n.min(3) {
        let f = measures::frequency_identity(t, n)?;
        out.push(Check::hard(S, format!("frequency_identity_n{n}"), f.holds, Provenance::Counted, j(&f)));
    }
    for n in 1..=big_n {
        let mu = measures::mu_n_freq(t, n)?;
        let expect = measures::beta_mass_closed_form(t)?;
        let ok = measures::beta_mass_consistent(t, n)?;
        out.push(Check::hard(
            S,
            format!("beta_mass_n{n}"),
            ok,
            Provenance::Counted,
            json!({ "counted": mu.get(crate::array::BETA), "closed_form": expect, "frequencies": mu }),
        ));
    }
    let js = t.compute_j(big_n.min(t.depth()))?;
    for n in 1..=2 {
        if n + 1 < big_n {
            let c = measures::verify_an_recursion(t, n, big_n, &js)?;
            out.push(Check::hard(S, format!("an_recursion_n{n}"), c.holds, Provenance::Counted, j(&c)));
        }
    }
    let c = measures::matrix_a0_check(t, big_n, &js)?;
    out.push(Check::hard(S, "a0_recursion", c.holds, Provenance::Counted, j(&c)));
    let verts = measures::simplex_vertices(t, big_n)?;
    let ok = verts.iter().all(|v| v.iter().sum::<crate::Rational>() == crate::Rational::from_integer(1));
    out.push(Check::hard(S, "simplex_vertices", ok, Provenance::Counted, j(&verts)));
    for &[i, k, s] in &deck.config.run.z_mass {
        let l = i + k * t.m() - 1;
        let jl = t.compute_j(l)?;
        let z = measures::z_mass(t, i, k, s, &jl[l])?;
        out.push(Check::hard(S, format!("z_mass_{i}_{k}_{s}"), z.holds, Provenance::Counted, j(&z)));
    }
    let g = GroupElement::new(&vec![1; t.chain().rank()], t.chain().finite_order() - 1);
    let si = measures::shift_invariance_check(t, big_n.min(3), &g)?;
    out.push(Check::hard(S, "shift_invariance", si.l1_difference <= si.bound, Provenance::Counted, j(&si)));
    Ok(out)
}

/// The oracle used for fibers: D_level R for group decks, [-p_level, p_level] for Williams decks.
pub fn fiber_oracle(deck: &Deck, level: usize) -> Result<SymbolPatch> {
    Ok(match &deck.array {
        DeckArray::Group(t) => SymbolPatch::from_config(t, Window::domain(t.chain(), level, true)?),
        DeckArray::Williams(w) => SymbolPatch::from_config(w, Window::interval(w.params().periods[level - 1])),
    })
}

pub fn run_fiber_scan(deck: &Deck) -> Result<FiberScan> {
    let a = deck.array();
    let k = deck.config.run.fiber_depth;
    let oracle = fiber_oracle(deck, deck.config.run.fiber_oracle_level)?;
    fiber_scan(a, &oracle, k, fiber_radius(a.chain(), k)?)
}

/// Conjugation identity on sampled instances, fibers and T_ζ pieces.
pub fn periods_suite(deck: &Deck) -> Result<(Vec<Check>, FiberScan)> {
    const S: &str = "periods";
    let mut out = Vec::new();
    let a = deck.array();
    let chain = a.chain();
    let (rank, sheets) = (chain.rank(), chain.finite_order());
    let oracle_level = 3.min(chain.depth() - 1);
    let eta = fiber_oracle(deck, oracle_level)?;
    let support_radius = if rank == 1 { 30 } else { 6 };
    let support: Vec<GroupElement> = Window::ball(rank, support_radius, sheets).elements().collect();
    let mut r = rng(deck, 11);
    let alphabet = a.alphabet();
    let mut failures = 0;
    let samples = deck.config.run.samples;
    for _ in 0..samples {
        let u = random_element(&mut r, rank, sheets, 40);
        let x = Shifted::new(&chain.group, &eta, &u);
        let g = random_element(&mut r, rank, sheets, 4);
        let level = r.gen_range(1..=2);
        let h = if r.gen_bool(0.5) {
            Subgroup::level(level)
        } else {
            Subgroup::conjugated(level, random_element(&mut r, rank, sheets, 3))
        };
        let alpha = alphabet[r.gen_range(0..alphabet.len())];
        if !conjugation_identity_check(chain, &x, &support, &g, &h, alpha).holds {
            failures += 1;
        }
    }
    out.push(Check::hard(
        S,
        "conjugation_identity",
        failures == 0,
        Provenance::Counted,
        json!({ "samples": samples, "failures": failures, "support_radius": support_radius }),
    ));

    let scan = run_fiber_scan(deck)?;
    let summary = json!({
        "depth": scan.depth, "radius": scan.radius, "coords": scan.coords_scanned, "bound": scan.bound,
        "max_count": scan.max_count, "histogram": scan.histogram, "escapes": scan.total_escapes,
    });
    out.push(Check::hard(S, "fiber_bound", scan.all_within_bound, Provenance::Counted, summary.clone()));
    if a.family() == Family::Williams {
        out.push(Check::hard(S, "fiber_nontrivial", scan.max_count >= 2, Provenance::Counted, summary));
    } else {
        out.push(Check::diag(S, "fiber_escapes_zero", scan.total_escapes == 0, Provenance::Counted, summary));
    }
    let k = scan.depth;
    let n0 = scan.radius;
    let mut max_pieces = 0;
    for c in OdometerCoords::all_at_depth(chain, k)? {
        max_pieces = max_pieces.max(tzeta_decompose(chain, &c, 1, n0)?.pieces.len());
    }
    let bound = piece_bound(chain);
    out.push(Check::hard(
        S,
        "tzeta_piece_bound",
        max_pieces <= bound,
        Provenance::Counted,
        json!({ "max_pieces": max_pieces, "bound": bound, "radius": n0, "depth": k }),
    ));
    Ok((out, scan))
}

/// The language oracle for independence searches.
pub fn independence_oracle(deck: &Deck) -> Result<LanguageOracle> {
    let level = deck.config.run.independence_oracle_level;
    LanguageOracle::new(deck.array().group().clone(), fiber_oracle(deck, level)?)
}

pub fn symbol_cylinders(a: &dyn ToeplitzArray) -> Vec<Cylinder> {
    a.step_symbols().into_iter().map(|s| Cylinder::single(a.group(), s)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct IndependenceRun {
    pub k: usize,
    pub target: usize,
    pub radius: i64,
    pub outcome: SearchOutcome,
}

/// Symbol-cylinder certificates, the pigeonhole negative, proximality replay and the entropy bracket.
pub fn independence_suite(deck: &Deck, opts: &Options) -> Result<(Vec<Check>, Vec<IndependenceRun>)> {
    const S: &str = "independence";
    let mut out = Vec::new();
    let a = deck.array();
    let run = &deck.config.run;
    let oracle = independence_oracle(deck)?;
    let cyl = symbol_cylinders(a);
    let outcome = find_independence_set(&cyl, run.independence_size, run.independence_radius, &oracle, &opts.budget(deck))?;
    let mut runs =
        vec![IndependenceRun { k: cyl.len(), target: run.independence_size, radius: run.independence_radius, outcome }];
    let found = runs[0].outcome.certificate().cloned();
    out.push(Check::hard(
        S,
        format!("certificate_k{}_size{}", cyl.len(), run.independence_size),
        found.is_some(),
        Provenance::Search,
        json!({ "verdict": runs[0].outcome.label(), "radius": run.independence_radius }),
    ));
    if let Some(cert) = &found {
        let bigger = fiber_oracle(deck, (run.independence_oracle_level + 1).min(a.chain().depth() - 1))?;
        let re = check_certificate(cert, a.group(), &bigger)?;
        out.push(Check::hard(S, "certificate_reverifies", re, Provenance::Search, json!({ "j": cert.j })));
        let padded = cert.pad();
        out.push(Check::hard(
            S,
            "padding",
            check_certificate(&padded, a.group(), &oracle.patch)?,
            Provenance::Search,
            json!({ "k": padded.k() }),
        ));
        if cert.size() >= 2 {
            let w = proximality_from_certificate(cert, a.group())?;
            let ok = check_proximal_witness(&cert.cylinders, &cert.cylinders[0].shape, &w, &oracle)?;
            out.push(Check::hard(S, "proximality_replay", ok, Provenance::Search, j(&w)));
        }
    }
    // m+1 single-site cylinders with distinct symbols cannot all occur.
    let mut extra = cyl.clone();
    let unused = (0..=u8::MAX).find(|s| !a.alphabet().contains(s)).expect("alphabet leaves a free symbol");
    extra.push(Cylinder::single(a.group(), unused));
    let neg = find_independence_set(&extra, 1, run.independence_radius, &oracle, &Budget::nodes(1))?;
    out.push(Check::hard(
        S,
        "pigeonhole_none",
        matches!(neg, SearchOutcome::None { .. }),
        Provenance::Search,
        json!({ "k": extra.len(), "verdict": neg.label() }),
    ));
    runs.push(IndependenceRun { k: extra.len(), target: 1, radius: run.independence_radius, outcome: neg });
    let certified = if found.is_some() { cyl.len() } else { 1 };
    let bounds = entropy_bounds(certified, fiber_bound(a))?;
    out.push(Check::hard(
        S,
        "entropy_bracket",
        bounds.lower_bits <= bounds.upper_bits && found.is_some(),
        Provenance::Search,
        j(&bounds),
    ));
    Ok((out, runs))
}

/// A size-2 pair certificate over Z from the williams-m2 deck.
pub fn williams_pair_certificate() -> Result<(WilliamsArray, SymbolPatch, Certificate)> {
    let deck = Deck::load_bundled("williams-m2")?;
    let DeckArray::Williams(w) = deck.array else { unreachable!("williams-m2 is a Williams deck") };
    let patch = SymbolPatch::from_config(&w, Window::interval(w.params().periods[3]));
    let oracle = LanguageOracle::new(w.group().clone(), patch)?;
    let cyl = symbol_cylinders(&w);
    let out = find_independence_set(&cyl, 2, w.params().periods[1], &oracle, &Budget::nodes(1_000_000))?;
    let cert = out.certificate().cloned().ok_or_else(|| Error::invariant("no williams-m2 pair certificate"))?;
    Ok((w, oracle.patch, cert))
}

/// validate_hom, equivariance on sampled (g, position) pairs and certificate transport.
pub fn homomorphism_suite(deck: &Deck) -> Result<Vec<Check>> {
    const S: &str = "homomorphism";
    let grp = deck.array().group();
    let Some(spec) = &deck.config.hom else {
        let r = grp.rank();
        let units: Vec<bool> =
            (0..r).map(|j| validate_hom(&HomSpec::new((0..r).map(|i| i64::from(i == j)).collect()), grp)).collect();
        return Ok(vec![Check::diag(
            S,
            "coordinate_homomorphisms",
            true,
            Provenance::ClosedForm,
            json!({ "valid": units }),
        )]);
    };
    let mut out = Vec::new();
    let valid = validate_hom(spec, grp);
    out.push(Check::hard(S, "validate_hom", valid, Provenance::ClosedForm, json!({ "w": spec.w })));
    if !valid {
        return Ok(out);
    }
    let (w, source, cert) = williams_pair_certificate()?;
    let mut r = rng(deck, 23);
    let (rank, sheets) = (grp.rank(), grp.finite_order());
    let mut failures = 0;
    let samples = deck.config.run.samples;
    for _ in 0..samples {
        let g = random_element(&mut r, rank, sheets, 500);
        let h = random_element(&mut r, rank, sheets, 500);
        let lo = h.coords().to_vec();
        let hi: Vec<i64> = lo.iter().map(|x| x + 1).collect();
        let window = Window::new(rank, &lo, &hi, sheets)?;
        if !equivariance_check(spec, grp, &w, &g, &window)? {
            failures += 1;
        }
    }
    out.push(Check::hard(
        S,
        "equivariance",
        failures == 0,
        Provenance::Counted,
        json!({ "samples": samples, "failures": failures }),
    ));
    let moved = transport_certificate(spec, grp, &cert, &source);
    out.push(Check::hard(
        S,
        "transport_certificate",
        moved.as_ref().is_ok_and(|m| m.size() == cert.size()),
        Provenance::Search,
        match &moved {
            Ok(m) => json!({ "source_j": cert.j, "j": m.j }),
            Err(e) => json!({ "error": e.to_string() }),
        },
    ));
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComplexityRun {
    pub deck: Vec<measures::ComplexityRow>,
    pub control: Vec<measures::ComplexityRow>,
    pub seed: u64,
}

pub fn complexity_run(w: &WilliamsArray, radii: &[i64], window: i64, seed: u64) -> Result<ComplexityRun> {
    let eta = SymbolPatch::from_config(w, Window::interval(window));
    let control = measures::random_control(window, seed);
    Ok(ComplexityRun {
        deck: measures::complexity_profile(&eta, radii)?,
        control: measures::complexity_profile(&control, radii)?,
        seed,
    })
}

/// Pattern-count growth on boxes against a seeded full-shift control (Williams decks).
pub fn complexity_suite(deck: &Deck) -> Result<Vec<Check>> {
    const S: &str = "complexity";
    let DeckArray::Williams(w) = &deck.array else {
        return Ok(Vec::new());
    };
    let run = &deck.config.run;
    let c = complexity_run(w, &run.complexity_radii, run.complexity_window, run.seed)?;
    let deck_dec = measures::strictly_decreasing(&c.deck);
    let control_dec = measures::strictly_decreasing(&c.control);
    Ok(vec![Check::hard(
        S,
        "bits_per_site_decreasing",
        deck_dec && !control_dec,
        Provenance::Counted,
        json!({ "deck_strictly_decreasing": deck_dec, "control_strictly_decreasing": control_dec, "profile": c }),
    )])
}

/// Runs every suite on one deck.
pub fn verify_all(deck: &Deck, opts: &Options) -> Result<Verdict> {
    let mut checks = structure_suite(deck)?;
    checks.extend(measures_suite(deck)?);
    checks.extend(periods_suite(deck)?.0);
    let (ind, runs) = independence_suite(deck, opts)?;
    checks.extend(ind);
    checks.extend(homomorphism_suite(deck)?);
    checks.extend(complexity_suite(deck)?);
    let budget_exhausted = runs.iter().any(|r| matches!(r.outcome, SearchOutcome::Exhausted { .. }));
    let passed = checks.iter().all(|c| c.passed || !c.hard);
    Ok(Verdict {
        deck: deck.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        convention: CONVENTION.to_string(),
        passed,
        budget_exhausted,
        checks,
        certificates: runs.into_iter().filter_map(|r| r.outcome.certificate().cloned()).collect(),
    })
}

/// η on D_N R for group decks, or on [-N, N] for Williams decks.
pub fn generate(deck: &Deck, n: i64) -> Result<Patch> {
    match &deck.array {
        DeckArray::Group(t) => t.generate_eta(n as usize),
        DeckArray::Williams(w) => williams_generate(w.params(), n),
    }
}

pub fn group_deck(deck: &Deck) -> Result<&GroupToeplitz> {
    deck.array.group_toeplitz().ok_or_else(|| Error::Config(format!("{} is not a group deck", deck.name())))
}
