//! Homomorphisms φ(v, f) = ⟨w, v⟩ onto Z, the pullback φ*x = x ∘ φ, and transport of
//! independence certificates along a section of φ.

use std::collections::{HashMap, HashSet};

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::array::{Cell, Configuration, Lookup, Patch, Shifted, Symbol, Window};
use crate::error::{Error, Result};
use crate::independence::{check_certificate, Certificate, Cylinder, Witness};
use crate::lattice::{GroupElement, GroupSpec, MAX_RANK};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomSpec {
    pub w: Vec<i64>,
}

impl HomSpec {
    pub fn new(w: Vec<i64>) -> Self {
        HomSpec { w }
    }

    pub fn apply(&self, g: &GroupElement) -> i64 {
        self.w.iter().zip(g.coords()).map(|(a, b)| a * b).sum()
    }

    /// u with ⟨w, u⟩ = 1, by extended Euclid along the entries.
    pub fn section_vector(&self) -> Result<Vec<i64>> {
        let mut u = vec![0i64; self.w.len()];
        let mut g = 0i64;
        for (j, &wj) in self.w.iter().enumerate() {
            let e = Integer::extended_gcd(&g, &wj);
            for x in u.iter_mut().take(j) {
                *x *= e.x;
            }
            u[j] = e.y;
            g = e.gcd;
        }
        if g != 1 {
            return Err(Error::Config(format!("w = {:?} is not surjective onto Z", self.w)));
        }
        Ok(u)
    }

    /// g_h = (h·u, identity).
    pub fn section(&self, u: &[i64], h: i64) -> GroupElement {
        let v: Vec<i64> = u.iter().map(|x| x * h).collect();
        GroupElement::new(&v, 0)
    }
}

/// w(M_f − I) = 0 for every f, and gcd(w) = 1.
pub fn validate_hom(spec: &HomSpec, group: &GroupSpec) -> bool {
    let r = group.rank();
    if spec.w.len() != r || spec.w.iter().fold(0i64, |a, b| a.gcd(b)) != 1 {
        return false;
    }
    let mut w = [0i64; MAX_RANK];
    w[..r].copy_from_slice(&spec.w);
    (0..group.finite_order()).all(|f| group.matrix(f).left_apply(&w)[..r] == w[..r])
}

fn require_valid(spec: &HomSpec, group: &GroupSpec) -> Result<()> {
    if validate_hom(spec, group) {
        Ok(())
    } else {
        Err(Error::Config(format!("w = {:?} does not define a surjective homomorphism onto Z", spec.w)))
    }
}

/// φ*x read lazily from a configuration over Z.
pub struct Pullback<'a, C: Configuration + ?Sized> {
    pub spec: &'a HomSpec,
    pub source: &'a C,
}

impl<C: Configuration + ?Sized> Configuration for Pullback<'_, C> {
    fn lookup(&self, g: &GroupElement) -> Lookup {
        self.source.lookup(&GroupElement::new(&[self.spec.apply(g)], 0))
    }
}

/// φ*x on `window`, cells (with their levels) copied from the source patch over Z.
pub fn pullback_patch(spec: &HomSpec, group: &GroupSpec, source: &Patch, window: Window) -> Result<Patch> {
    require_valid(spec, group)?;
    if source.window.rank() != 1 || window.rank() != group.rank() || window.sheets() > group.finite_order() {
        return Err(Error::Config("pullback needs a Z patch and a window on the group".into()));
    }
    let mut cells: Vec<Option<Cell>> = Vec::with_capacity(window.len());
    for g in window.elements() {
        let n = GroupElement::new(&[spec.apply(&g)], 0);
        match source.get(&n) {
            Some(c) => cells.push(c),
            None => {
                return Err(Error::Config(format!("{g} maps to {} outside the source patch", n.coords()[0])));
            }
        }
    }
    Ok(Patch { window, cells })
}

/// σ^g φ*x = φ*(σ^{φ(g)} x) pointwise on `window`.
pub fn equivariance_check<C: Configuration + ?Sized>(
    spec: &HomSpec,
    group: &GroupSpec,
    x: &C,
    g: &GroupElement,
    window: &Window,
) -> Result<bool> {
    require_valid(spec, group)?;
    group.conforms(g)?;
    if window.rank() != group.rank() || window.sheets() > group.finite_order() {
        return Err(Error::Config("window does not match the group".into()));
    }
    let z = GroupSpec::lattice(1)?;
    let pulled = Pullback { spec, source: x };
    let lhs = Shifted::new(group, &pulled, g);
    let phi_g = GroupElement::new(&[spec.apply(g)], 0);
    let shifted_x = Shifted::new(&z, x, &phi_g);
    let rhs = Pullback { spec, source: &shifted_x };
    for h in window.elements() {
        let (a, b) = (lhs.lookup(&h), rhs.lookup(&h));
        if matches!(a, Lookup::Outside) || matches!(b, Lookup::Outside) {
            return Err(Error::Config(format!("equivariance check at {h} leaves the source patch")));
        }
        if a != b {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Maps a certificate over Z to one over G through the section h ↦ (h·u, 1) and re-verifies it
/// against φ*η.
pub fn transport_certificate<C: Configuration + ?Sized>(
    spec: &HomSpec,
    group: &GroupSpec,
    cert: &Certificate,
    source_eta: &C,
) -> Result<Certificate> {
    require_valid(spec, group)?;
    let u = spec.section_vector()?;
    let lift = |g: &GroupElement| -> Result<GroupElement> {
        if g.coords().len() != 1 || g.finite() != 0 {
            return Err(Error::Config(format!("{g} is not an element of Z")));
        }
        Ok(spec.section(&u, g.coords()[0]))
    };
    let cylinders = cert
        .cylinders
        .iter()
        .map(|c| Ok(Cylinder { shape: c.shape.iter().map(lift).collect::<Result<_>>()?, pattern: c.pattern.clone() }))
        .collect::<Result<Vec<_>>>()?;
    let j: Vec<GroupElement> = cert.j.iter().map(lift).collect::<Result<_>>()?;
    let witnesses = cert
        .witnesses
        .iter()
        .map(|w| Ok(Witness { assignment: w.assignment.clone(), h: lift(&w.h)? }))
        .collect::<Result<Vec<_>>>()?;
    let out = Certificate { convention: cert.convention.clone(), cylinders, j, witnesses };
    if out.size() != cert.size() {
        return Err(Error::invariant("section is not injective on J"));
    }
    if !check_certificate(&out, group, &Pullback { spec, source: source_eta })? {
        return Err(Error::invariant("transported certificate does not re-verify against φ*η"));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct RecurrenceReport {
    pub shape_radius: i64,
    pub patterns: usize,
    /// Largest max-norm distance from a central position to the nearest occurrence of a pattern.
    pub gap: i64,
}

/// Minimality proxy on the identity sheet: for every pattern on B(0, s) seen in the patch,
/// the distance from each central position to its nearest occurrence.
pub fn recurrence_gap(patch: &Patch, s: i64, central: i64) -> Result<RecurrenceReport> {
    let w = &patch.window;
    let r = w.rank();
    let shape: Vec<GroupElement> = Window::ball(r, s, 1).elements().collect();
    let lo: Vec<i64> = w.lower().iter().map(|x| x + s).collect();
    let hi: Vec<i64> = w.upper().iter().map(|x| x - s).collect();
    let places = Window::new(r, &lo, &hi, 1).map_err(|_| Error::Config("shape does not fit the patch".into()))?;
    let mut occ: HashMap<Vec<Symbol>, Vec<GroupElement>> = HashMap::new();
    for c in places.elements() {
        let read: Option<Vec<Symbol>> = shape
            .iter()
            .map(|d| {
                let mut p = c;
                for j in 0..r {
                    p.v[j] += d.v[j];
                }
                patch.symbol(&p)
            })
            .collect();
        if let Some(read) = read {
            occ.entry(read).or_default().push(c);
        }
    }
    let centre = Window::ball(r, central, 1);
    let mut gap = 0;
    for positions in occ.values() {
        for h in centre.elements() {
            let d = positions
                .iter()
                .map(|p| (0..r).map(|j| (p.v[j] - h.v[j]).abs()).max().unwrap())
                .min()
                .unwrap();
            gap = gap.max(d);
        }
    }
    let distinct: HashSet<&Vec<Symbol>> = occ.keys().collect();
    Ok(RecurrenceReport { shape_radius: s, patterns: distinct.len(), gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{SymbolPatch, ToeplitzArray};
    use crate::independence::{find_independence_set, Budget, LanguageOracle};
    use crate::lattice::Matrix;
    use crate::toeplitz_z::{williams_generate, WilliamsArray, WilliamsParams};

    fn swap() -> GroupSpec {
        GroupSpec::with_involution(Matrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap()).unwrap()
    }

    fn dihedral() -> GroupSpec {
        GroupSpec::with_involution(Matrix::from_rows(&[vec![-1]]).unwrap()).unwrap()
    }

    #[test]
    fn validation_examples() {
        assert!(validate_hom(&HomSpec::new(vec![1, 0]), &GroupSpec::lattice(2).unwrap()));
        for w in [1, 2, -3] {
            assert!(!validate_hom(&HomSpec::new(vec![w]), &dihedral()));
        }
        assert!(validate_hom(&HomSpec::new(vec![1, 1]), &swap()));
        assert!(!validate_hom(&HomSpec::new(vec![1, -1]), &swap()));
        assert!(!validate_hom(&HomSpec::new(vec![2, 4]), &GroupSpec::lattice(2).unwrap()));
        assert!(!validate_hom(&HomSpec::new(vec![1]), &GroupSpec::lattice(2).unwrap()));
    }

    #[test]
    fn sections() {
        for w in [vec![1, 1], vec![3, 5], vec![6, 10, 15], vec![-4, 7], vec![0, 1]] {
            let s = HomSpec::new(w.clone());
            let u = s.section_vector().unwrap();
            assert_eq!(w.iter().zip(&u).map(|(a, b)| a * b).sum::<i64>(), 1, "{w:?}");
        }
        assert!(HomSpec::new(vec![2, 4]).section_vector().is_err());
    }

    #[test]
    fn pullback_rows_and_kernel() {
        let params = WilliamsParams::new(2, vec![9, 108, 1296]).unwrap();
        let src = williams_generate(&params, 200).unwrap();
        let spec = HomSpec::new(vec![1, 0]);
        let z2 = GroupSpec::lattice(2).unwrap();
        let p = pullback_patch(&spec, &z2, &src, Window::ball(2, 20, 1)).unwrap();
        for g in p.window.elements() {
            assert_eq!(p.symbol(&g), src.symbol(&GroupElement::new(&[g.v[0]], 0)));
        }
        let sw = swap();
        let spec = HomSpec::new(vec![1, 1]);
        let p = pullback_patch(&spec, &sw, &src, Window::ball(2, 20, 2)).unwrap();
        let origin = src.symbol(&GroupElement::new(&[0], 0));
        for f in 0..2 {
            assert_eq!(p.symbol(&GroupElement::new(&[0, 0], f)), origin);
            assert_eq!(p.symbol(&GroupElement::new(&[5, -5], f)), origin);
        }
        assert!(pullback_patch(&spec, &sw, &src, Window::ball(2, 150, 2)).is_err());
        assert!(pullback_patch(&HomSpec::new(vec![1]), &dihedral(), &src, Window::ball(1, 5, 2)).is_err());
        // level-1 periods pull back
        let arr = WilliamsArray::new(params).unwrap();
        let lvl1: Vec<GroupElement> = p.iter().filter(|(_, c)| c.is_some_and(|c| c.level == 1)).map(|(g, _)| g).collect();
        for g in lvl1 {
            assert_eq!(arr.cell(&GroupElement::new(&[spec.apply(&g)], 0)).unwrap().level, 1);
            let moved = sw.op(&g, &GroupElement::new(&[9, 0], 0));
            if let Some(Some(c)) = p.get(&moved) {
                assert_eq!(c.level, 1);
            }
        }
    }

    #[test]
    fn equivariance() {
        let params = WilliamsParams::new(2, vec![9, 108, 1296]).unwrap();
        let src = williams_generate(&params, 400).unwrap();
        let sw = swap();
        let spec = HomSpec::new(vec![1, 1]);
        let w = Window::ball(2, 10, 2);
        for g in [GroupElement::new(&[3, 4], 1), GroupElement::new(&[-7, 2], 0), GroupElement::new(&[5, -5], 1)] {
            assert!(equivariance_check(&spec, &sw, &src, &g, &w).unwrap());
        }
        let z2 = GroupSpec::lattice(2).unwrap();
        let w1 = Window::ball(2, 10, 1);
        assert!(equivariance_check(&HomSpec::new(vec![1, 0]), &z2, &src, &GroupElement::new(&[3, 4], 0), &w1).unwrap());
        assert!(equivariance_check(&HomSpec::new(vec![1, 0]), &z2, &src, &GroupElement::new(&[0, 0], 0), &w).is_err());
    }

    #[test]
    fn transport_preserves_size() {
        let arr = WilliamsArray::new(WilliamsParams::new(2, vec![9, 108, 1296, 15552]).unwrap()).unwrap();
        let patch = SymbolPatch::from_config(&arr, Window::interval(3000));
        let oracle = LanguageOracle::new(arr.group().clone(), patch).unwrap();
        let cyl: Vec<Cylinder> = (0..2).map(|s| Cylinder::single(arr.group(), s)).collect();
        for size in [1, 2, 3] {
            let out = find_independence_set(&cyl, size, 200, &oracle, &Budget::nodes(100_000)).unwrap();
            let cert = out.certificate().unwrap();
            for (spec, g) in [(HomSpec::new(vec![1, 1]), swap()), (HomSpec::new(vec![1, 0]), GroupSpec::lattice(2).unwrap())] {
                let t = transport_certificate(&spec, &g, cert, &oracle.patch).unwrap();
                assert_eq!(t.size(), size);
            }
        }
    }

    #[test]
    fn recurrence_diagnostic() {
        let params = WilliamsParams::new(2, vec![9, 108, 1296, 15552]).unwrap();
        let src = williams_generate(&params, 2000).unwrap();
        let rep = recurrence_gap(&src, 2, 50).unwrap();
        assert!(rep.patterns > 1 && rep.gap < 1000);
    }
}
