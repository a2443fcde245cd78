use hyperlattice::group::{Letter, SurfaceGroup, Word};
use hyperlattice::halfplane::{cosh_dist, Moebius};
use hyperlattice::{MoebiusMap, Point};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-3.0..3.0f64, 0.05..5.0f64).prop_map(|(re, im)| Point::new(re, im).unwrap())
}

/// Random PSL2 maps as products of rotations about `i` and vertical moves.
fn moebius() -> impl Strategy<Value = MoebiusMap> {
    (0.0..6.3f64, -2.5..2.5f64, 0.0..6.3f64).prop_map(|(t1, len, t2)| {
        Moebius::rotation_about_i(t1)
            .compose(&Moebius::vertical_translation(len))
            .unwrap()
            .compose(&Moebius::rotation_about_i(t2))
            .unwrap()
    })
}

fn word(genus: usize, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(0..4 * genus, 0..=max_len)
        .prop_map(|codes| Word::from_letters(codes.into_iter().map(Letter::from_code).collect()))
}

fn g2() -> SurfaceGroup {
    SurfaceGroup::octagon(2).unwrap()
}

fn close(a: &MoebiusMap, b: &MoebiusMap, tol: f64) -> bool {
    a.entries()
        .iter()
        .zip(b.entries())
        .all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn moebius_maps_are_isometries(m in moebius(), z in point(), w in point()) {
        let before = cosh_dist(&z, &w);
        let after = cosh_dist(&m.apply(&z), &m.apply(&w));
        prop_assert!((after - before).abs() < 1e-9 * before);
    }

    #[test]
    fn composition_matches_sequential_action(m1 in moebius(), m2 in moebius(), z in point()) {
        let p = m1.compose(&m2).unwrap().apply(&z);
        let q = m1.apply(&m2.apply(&z));
        prop_assert!((p.re - q.re).abs() <= 1e-9 * (1.0 + q.re.abs()));
        prop_assert!((p.im - q.im).abs() <= 1e-9 * q.im);
    }

    #[test]
    fn canonicalize_is_idempotent(m in moebius()) {
        let again = m.canonicalize().unwrap();
        prop_assert_eq!(again, m);
        let [a, b, c, d] = m.entries();
        let neg = Moebius::new(-a, -b, -c, -d).unwrap();
        prop_assert_eq!(neg, m);
    }

    #[test]
    fn abelianization_is_a_homomorphism(u in word(2, 5), v in word(2, 5)) {
        let g = g2();
        let lhs = g.abelianize(&g.reduce(&u.concat(&v)).unwrap());
        let rhs: Vec<i64> = g.abelianize(&u).iter().zip(g.abelianize(&v)).map(|(a, b)| a + b).collect();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn abelianization_is_conjugation_invariant(s in word(2, 3), w in word(2, 4)) {
        let g = g2();
        let conj = g.reduce(&s.concat(&w).concat(&s.inverse())).unwrap();
        prop_assert_eq!(g.abelianize(&conj), g.abelianize(&g.reduce(&w).unwrap()));
    }

    #[test]
    fn reduce_shortens_and_is_idempotent(w in word(2, 10)) {
        let g = g2();
        let r = g.reduce(&w).unwrap();
        prop_assert!(r.len() <= w.len());
        prop_assert!(r.is_freely_reduced());
        prop_assert_eq!(g.reduce(&r).unwrap(), r.clone());
        let dehn = g.dehn_reduce(&w);
        prop_assert!(dehn.len() <= w.len());
        prop_assert!(close(&g.word_matrix(&r).unwrap(), &g.word_matrix(&w).unwrap(), 1e-8));
    }

    #[test]
    fn equal_elements_give_identical_records(w in word(2, 8), s in word(2, 4)) {
        // w and w s s^-1 (unreduced) are the same element
        let g = g2();
        let padded = w.concat(&s).concat(&s.inverse());
        prop_assert_eq!(g.element_from_word(&w).unwrap(), g.element_from_word(&padded).unwrap());
    }

    /// Past the precision horizon reduction refuses rather than guesses;
    /// whatever it does return agrees with exact integer invariants.
    #[test]
    fn long_words_reduce_consistently_or_refuse(w in word(2, 30)) {
        let g = g2();
        match g.reduce(&w) {
            Ok(r) => {
                prop_assert!(r.len() <= g.dehn_reduce(&w).len());
                prop_assert_eq!(g.abelianize(&r), g.abelianize(&w));
                prop_assert_eq!(g.reduce(&r).unwrap(), r);
            }
            Err(e) => {
                let refused = matches!(
                    e,
                    hyperlattice::Error::AmbiguousNormalForm | hyperlattice::Error::MatrixDecay { .. }
                );
                prop_assert!(refused, "unexpected error {:?}", e);
            }
        }
    }

    #[test]
    fn genus_three_reduction(w in word(3, 6)) {
        let g = SurfaceGroup::octagon(3).unwrap();
        let r = g.reduce(&w).unwrap();
        prop_assert!(r.len() <= w.len());
        prop_assert!(close(&g.word_matrix(&r).unwrap(), &g.word_matrix(&w).unwrap(), 1e-8));
    }
}

/// All canonical words up to `len`, by extending canonical words one
/// letter at a time and keeping those that stay canonical.
fn canonical_words(g: &SurfaceGroup, len: usize) -> Vec<Vec<Word>> {
    let mut spheres = vec![vec![Word::empty()]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in spheres.last().unwrap() {
            for l in g.letters() {
                let mut c = w.clone();
                c.push(l);
                if c.is_freely_reduced() && g.normal_form(&g.word_matrix(&c).unwrap()).unwrap() == c
                {
                    next.push(c);
                }
            }
        }
        spheres.push(next);
    }
    spheres
}

#[test]
fn sphere_growth_and_faithfulness_to_length_eight() {
    let g = g2();
    let spheres = canonical_words(&g, 8);
    let sizes: Vec<usize> = spheres.iter().map(Vec::len).collect();
    // growth series of the genus-2 surface group
    assert_eq!(sizes[..7], [1, 8, 56, 392, 2736, 19096, 133288]);
    assert_eq!(sizes[7], 930328);
    // every canonical word is recovered from its matrix, so distinct
    // canonical words have distinct matrices
    for w in spheres.iter().flatten().step_by(7) {
        assert_eq!(&g.normal_form(&g.word_matrix(w).unwrap()).unwrap(), w);
    }
}

#[test]
fn short_canonical_words_have_separated_matrices() {
    let g = g2();
    let words: Vec<Word> = canonical_words(&g, 3).into_iter().flatten().collect();
    let mats: Vec<MoebiusMap> = words.iter().map(|w| g.word_matrix(w).unwrap()).collect();
    for i in 0..mats.len() {
        for j in i + 1..mats.len() {
            let gap = mats[i]
                .entries()
                .iter()
                .zip(mats[j].entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(gap > 1e-6, "{} vs {}", words[i], words[j]);
        }
    }
}
