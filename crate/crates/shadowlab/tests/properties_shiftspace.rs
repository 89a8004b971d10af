//! Property tests for shift spaces and linear cellular automata: local
//! membership, restriction monotonicity, shift invariance, linearity,
//! equivariance, composition, monomials, and commutation verdicts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shadowlab::cellauto::{commute, monomial, LinearCA};
use shadowlab::fplinalg::{FieldSpec, Matrix, Subspace};
use shadowlab::lattice::{Site, SiteSet};
use shadowlab::shiftspace::{projection_matrix, shift_pattern, Alphabet, Pattern, SubshiftSpec};

fn alphabet(p: u64, k: usize) -> Alphabet {
    Alphabet::new(FieldSpec::new(p).unwrap(), k).unwrap()
}

fn boxed(r: usize, hi: u32) -> SiteSet {
    SiteSet::cube(r, hi).unwrap()
}

fn random_sites(rng: &mut ChaCha8Rng, r: usize, max_coord: u32, count: usize, with_origin: bool) -> SiteSet {
    let mut sites = if with_origin { vec![Site::origin(r)] } else { vec![] };
    while sites.len() < count {
        sites.push(Site::new((0..r).map(|_| rng.random_range(0..=max_coord)).collect()));
    }
    SiteSet::from_sites(r, sites).unwrap()
}

fn random_subspace(rng: &mut ChaCha8Rng, p: u64, ambient: usize) -> Subspace {
    let f = FieldSpec::new(p).unwrap();
    let nrows = rng.random_range(0..=ambient);
    let rows: Vec<Vec<u64>> = (0..nrows)
        .map(|_| (0..ambient).map(|_| rng.random_range(0..p)).collect())
        .collect();
    Subspace::from_spanning(f, ambient, &rows).unwrap()
}

fn random_sft(rng: &mut ChaCha8Rng, p: u64, k: usize, r: usize) -> SubshiftSpec {
    let a = alphabet(p, k);
    let count = rng.random_range(1..=3);
    let window = random_sites(rng, r, 1, count, true);
    let constraint = random_subspace(rng, p, a.ambient_dim(window.len()));
    SubshiftSpec::linear_sft(a, r, window, constraint).unwrap()
}

fn random_ca(rng: &mut ChaCha8Rng, a: Alphabet, r: usize, max_coord: u32) -> LinearCA {
    let count = rng.random_range(1..=3);
    let memory = random_sites(rng, r, max_coord, count, false);
    let k = a.k();
    let p = a.field().p();
    let cols = k * memory.len();
    let data: Vec<u64> = (0..k * cols).map(|_| rng.random_range(0..p)).collect();
    let rule = Matrix::new(a.field(), k, cols, data).unwrap();
    LinearCA::new(a, r, memory, rule).unwrap()
}

fn random_pattern(rng: &mut ChaCha8Rng, a: Alphabet, domain: &SiteSet) -> Pattern {
    let p = a.field().p();
    let values = (0..a.ambient_dim(domain.len())).map(|_| rng.random_range(0..p)).collect();
    Pattern::new(a, domain.clone(), values).unwrap()
}

/// A random member of a subspace: a random combination of basis rows.
fn random_member(rng: &mut ChaCha8Rng, s: &Subspace, p: u64) -> Vec<u64> {
    let mut v = vec![0u64; s.ambient()];
    for i in 0..s.dim() {
        let c = rng.random_range(0..p);
        for (slot, &x) in v.iter_mut().zip(s.basis().row(i)) {
            *slot = (*slot + c * x) % p;
        }
    }
    v
}

#[test]
fn membership_agrees_with_local_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE);
    for case in 0..40u32 {
        let p = [2u64, 3][case as usize % 2];
        let k = 1 + case as usize % 2;
        let r = 1 + (case as usize / 2) % 2;
        let sig = random_sft(&mut rng, p, k, r);
        let a = *sig.alphabet();
        let b = boxed(r, 2);
        let space = sig.local_pattern_space(&b).unwrap();

        // The zero configuration always satisfies a linear constraint.
        assert!(space.member(&vec![0u64; space.ambient()]).unwrap());
        assert!(sig.satisfies_locally(&Pattern::zero(a, b.clone())).unwrap());

        for _ in 0..25 {
            let x = random_pattern(&mut rng, a, &b);
            assert_eq!(
                space.member(x.values()).unwrap(),
                sig.satisfies_locally(&x).unwrap(),
                "membership and the translate-by-translate check disagree"
            );
        }
        for _ in 0..10 {
            let v = random_member(&mut rng, &space, p);
            let x = Pattern::new(a, b.clone(), v).unwrap();
            assert!(sig.satisfies_locally(&x).unwrap());
        }
    }
}

#[test]
fn restriction_to_e_is_monotone_in_the_box() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 1);
    for case in 0..30u32 {
        let r = 1 + case as usize % 2;
        let sig = random_sft(&mut rng, 2, 1, r);
        let a = *sig.alphabet();
        let e = boxed(r, 1);
        let project = |b: &SiteSet| -> Subspace {
            let space = sig.local_pattern_space(b).unwrap();
            let proj = projection_matrix(&a, b, &e).unwrap();
            let rows: Vec<Vec<u64>> = (0..space.dim())
                .map(|i| proj.mul_vec(space.basis().row(i)).unwrap())
                .collect();
            Subspace::from_spanning(a.field(), a.ambient_dim(e.len()), &rows).unwrap()
        };
        // Projections along a growing chain of boxes can only shrink.
        let mut prev: Option<Subspace> = None;
        for t in 1..=(4 - r as u32) {
            let cur = project(&boxed(r, 1 + t));
            if let Some(bigger) = prev {
                assert!(
                    bigger.contains(&cur).unwrap(),
                    "projection grew when the box grew (t = {t})"
                );
            }
            prev = Some(cur);
        }
    }
}

#[test]
fn members_stay_members_under_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 2);
    for case in 0..30u32 {
        let p = [2u64, 3, 5][case as usize % 3];
        let r = 1 + case as usize % 2;
        let sig = random_sft(&mut rng, p, 1 + case as usize % 2, r);
        let a = *sig.alphabet();
        let b = boxed(r, 3);
        let space = sig.local_pattern_space(&b).unwrap();
        for _ in 0..8 {
            let x = Pattern::new(a, b.clone(), random_member(&mut rng, &space, p)).unwrap();
            let g = Site::new((0..r).map(|_| rng.random_range(0..=2u32)).collect());
            let shifted = shift_pattern(&g, &x).unwrap();
            assert!(
                sig.satisfies_locally(&shifted).unwrap(),
                "shift by {g} broke local membership"
            );
        }
    }
}

#[test]
fn application_is_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 3);
    for case in 0..40u32 {
        let p = [2u64, 3, 5][case as usize % 3];
        let a = alphabet(p, 1 + case as usize % 2);
        let r = 1 + (case as usize / 3) % 2;
        let t = random_ca(&mut rng, a, r, 2);
        let d = boxed(r, 4);
        let x = random_pattern(&mut rng, a, &d);
        let y = random_pattern(&mut rng, a, &d);
        let c = rng.random_range(0..p);
        assert_eq!(
            t.apply(&x.add(&y).unwrap()).unwrap(),
            t.apply(&x).unwrap().add(&t.apply(&y).unwrap()).unwrap()
        );
        assert_eq!(t.apply(&x.scale(c)).unwrap(), t.apply(&x).unwrap().scale(c));
    }
}

#[test]
fn application_commutes_with_shifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 4);
    for case in 0..40u32 {
        let p = [2u64, 3][case as usize % 2];
        let a = alphabet(p, 1 + case as usize % 2);
        let r = 1 + (case as usize / 2) % 2;
        let t = random_ca(&mut rng, a, r, 2);
        let d = boxed(r, 5);
        let x = random_pattern(&mut rng, a, &d);
        let g = Site::new((0..r).map(|_| rng.random_range(0..=2u32)).collect());
        let lhs = t.apply(&shift_pattern(&g, &x).unwrap()).unwrap();
        let rhs = shift_pattern(&g, &t.apply(&x).unwrap()).unwrap();
        assert_eq!(lhs, rhs, "equivariance failed for shift {g}");
    }
}

#[test]
fn composition_matches_sequential_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 5);
    for case in 0..40u32 {
        let p = [2u64, 3, 5][case as usize % 3];
        let a = alphabet(p, 1 + case as usize % 2);
        let r = 1 + (case as usize / 3) % 2;
        let t1 = random_ca(&mut rng, a, r, 1);
        let t2 = random_ca(&mut rng, a, r, 1);
        let d = boxed(r, 4);
        let x = random_pattern(&mut rng, a, &d);
        let composed = t1.compose(&t2).unwrap();
        // Pruning zero blocks can shrink the composed memory, so the
        // composed map may be defined on a larger box; agreement is on the
        // sequential (smaller) domain.
        let seq = t1.apply(&t2.apply(&x).unwrap()).unwrap();
        let whole = composed.apply(&x).unwrap();
        assert!(whole.domain().covers(seq.domain()));
        assert_eq!(whole.restrict(seq.domain()).unwrap(), seq, "(t1.t2)(x) != t1(t2(x))");
    }
}

#[test]
fn monomials_match_iterated_application() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 6);
    for case in 0..20u32 {
        let p = [2u64, 3][case as usize % 2];
        let k = 2usize;
        let a = alphabet(p, k);
        let r = 1 + case as usize % 2;
        // A commuting family: a shift, an identity-coefficient two-site sum,
        // and a pointwise matrix rule (scalar-free commutation).
        let shift = LinearCA::shift(a, Site::new({
            let mut c = vec![0u32; r];
            c[r - 1] = 1;
            c
        })).unwrap();
        let mut sum_data = vec![0u64; k * 2 * k];
        for i in 0..k {
            sum_data[i * 2 * k + i] = 1;
            sum_data[i * 2 * k + k + i] = 1;
        }
        let sum = LinearCA::new(
            a,
            r,
            SiteSet::from_sites(r, vec![Site::origin(r), Site::new({
                let mut c = vec![0u32; r];
                c[0] = 1;
                c
            })]).unwrap(),
            Matrix::new(a.field(), k, 2 * k, sum_data).unwrap(),
        ).unwrap();
        let gens = [shift, sum];
        let alpha: Vec<u32> = (0..2).map(|_| rng.random_range(0..=2u32)).collect();
        let m = monomial(&gens, &alpha, true).unwrap();

        let d = boxed(r, 7);
        let x = random_pattern(&mut rng, a, &d);
        let mut iterated = x.clone();
        for (t, &e) in gens.iter().zip(&alpha) {
            for _ in 0..e {
                iterated = t.apply(&iterated).unwrap();
            }
        }
        let whole = m.apply(&x).unwrap();
        assert!(whole.domain().covers(iterated.domain()));
        assert_eq!(
            whole.restrict(iterated.domain()).unwrap(),
            iterated,
            "monomial != iterated for {alpha:?}"
        );
    }
}

#[test]
fn commute_verdict_matches_pointwise_behaviour() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5817_5ACE + 7);
    let mut false_verdicts = 0u32;
    for case in 0..60u32 {
        let p = [2u64, 3][case as usize % 2];
        let a = alphabet(p, 1 + case as usize % 2);
        let r = 1 + (case as usize / 2) % 2;
        let t1 = random_ca(&mut rng, a, r, 1);
        let t2 = random_ca(&mut rng, a, r, 1);
        let verdict = commute(&t1, &t2).unwrap();

        // Compare both application orders on every indicator pattern over a
        // box that spans the combined memory; by linearity this decides
        // functional equality outright.
        let span = t1.memory().minkowski_sum(t2.memory()).unwrap();
        let (_, hi) = span.bounding_box().unwrap();
        let d = SiteSet::rect(&Site::origin(r), &hi).unwrap();
        let mut functional_equal = true;
        for i in 0..a.ambient_dim(d.len()) {
            let mut values = vec![0u64; a.ambient_dim(d.len())];
            values[i] = 1;
            let x = Pattern::new(a, d.clone(), values).unwrap();
            let lhs = t1.apply(&t2.apply(&x).unwrap()).unwrap();
            let rhs = t2.apply(&t1.apply(&x).unwrap()).unwrap();
            if lhs != rhs {
                functional_equal = false;
                break;
            }
        }
        assert_eq!(
            verdict, functional_equal,
            "commute() verdict contradicts pointwise behaviour"
        );
        if !verdict {
            false_verdicts += 1;
        }

        // When the verdict holds, random patterns must agree everywhere too.
        if verdict {
            let big = boxed(r, 4);
            for _ in 0..5 {
                let x = random_pattern(&mut rng, a, &big);
                assert_eq!(
                    t1.apply(&t2.apply(&x).unwrap()).unwrap(),
                    t2.apply(&t1.apply(&x).unwrap()).unwrap()
                );
            }
        }
    }
    // The sample must exercise the negative branch.
    assert!(false_verdicts >= 10, "too few non-commuting pairs: {false_verdicts}");
}
