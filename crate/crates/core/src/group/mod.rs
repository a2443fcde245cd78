//! The genus-g surface group acting on the upper half-plane.
//!
//! Generators are the side pairings of the regular hyperbolic `4g`-gon
//! centred at `i` with all vertex angles `pi / (2g)`. Sides are numbered
//! counter-clockwise from the one crossed by the positive imaginary axis
//! and labelled `a_j, b_j, a_j^-1, b_j^-1` in blocks of four; `a_j` maps
//! side `4j+2` onto side `4j` and `b_j` maps side `4j+1` onto side `4j+3`.
//! With this labelling the relator is `[a1,b1] ... [ag,bg]`.
//!
//! Because an even number of polygons meet at every vertex, the tiling
//! edges extend to complete geodesics. The wall between the base tile and
//! its neighbour across letter `l` is the perpendicular bisector of `i` and
//! `l(i)`, and word length equals the number of walls separating two tile
//! centres. ShortLex normal forms therefore come from a greedy walk: strip
//! the smallest letter whose wall separates the point from `i`.

mod word;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::halfplane::cosh_dist;
use crate::tolerance::Tolerances;
use crate::{MoebiusMap, Point};

pub use word::{Letter, Word};

/// Step cap for the normal-form walk; far beyond any displacement that
/// double precision can resolve.
const MAX_WALK: usize = 4096;

/// A group element with its canonical word, matrix and homology class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub word: Word,
    pub matrix: MoebiusMap,
    pub abelianization: Vec<i64>,
}

impl GroupElement {
    pub fn is_identity(&self) -> bool {
        self.word.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct SurfaceGroup {
    genus: usize,
    /// `a1, b1, ..., ag, bg`.
    generators: Vec<MoebiusMap>,
    /// Indexed by letter code.
    letter_maps: Vec<MoebiusMap>,
    /// `l(i)` for each letter code: the centre of the neighbouring tile.
    centers: Vec<Point>,
    relator: Word,
    /// Cyclic permutations of the relator and its inverse, for Dehn's algorithm.
    cyclic_relators: Vec<Vec<Letter>>,
    volume: f64,
    inradius: f64,
    circumradius: f64,
}

/// Portable description of a group: genus, generator matrices row-major
/// and the relator letters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRecord {
    pub genus: usize,
    pub generators: Vec<[f64; 4]>,
    pub relator: String,
}

impl SurfaceGroup {
    /// Side pairings of the regular `4g`-gon with angle sum `2 pi`.
    pub fn octagon(genus: usize) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidGenus(genus));
        }
        let sides = 4 * genus;
        let theta = |k: usize| 2.0 * PI * k as f64 / sides as f64;
        // cosh(inradius) = cos(angle/2) / sin(pi/sides) with angle = pi/(2g).
        let half = PI / sides as f64;
        let inradius = (half.cos() / half.sin()).acosh();
        let step = MoebiusMap::vertical_translation(2.0 * inradius);
        // Maps side `from` onto side `to`, carrying the polygon across `to`.
        let pairing = |to: usize, from: usize| -> Result<MoebiusMap> {
            MoebiusMap::rotation_about_i(theta(to))
                .mul_raw(&step)
                .mul_raw(&MoebiusMap::rotation_about_i(PI - theta(from)))
                .canonicalize()
        };
        let mut generators = Vec::with_capacity(2 * genus);
        for j in 0..genus {
            generators.push(pairing(4 * j, 4 * j + 2)?);
            generators.push(pairing(4 * j + 3, 4 * j + 1)?);
        }
        Self::from_generators(genus, generators)
    }

    /// Validates generator matrices against the relator, trace and
    /// volume invariants.
    pub fn from_generators(genus: usize, generators: Vec<MoebiusMap>) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidGenus(genus));
        }
        if generators.len() != 2 * genus {
            return Err(Error::DimensionMismatch {
                expected: 2 * genus,
                got: generators.len(),
            });
        }
        let tol = Tolerances::DEFAULT;
        let generators = generators
            .into_iter()
            .map(|g| g.canonicalize())
            .collect::<Result<Vec<_>>>()?;
        for (k, g) in generators.iter().enumerate() {
            if g.trace().abs() <= 2.0 + tol.hyperbolic_trace {
                return Err(Error::InvalidGroup(format!(
                    "generator {k} is not hyperbolic (trace {})",
                    g.trace()
                )));
            }
        }
        let mut letter_maps = Vec::with_capacity(4 * genus);
        for g in &generators {
            letter_maps.push(*g);
            letter_maps.push(g.inverse());
        }
        let centers = letter_maps.iter().map(|m| m.apply(&Point::i())).collect();
        let relator = Self::commutator_relator(genus);
        let mut cyclic_relators = Vec::with_capacity(8 * genus);
        for r in [relator.letters().to_vec(), relator.inverse().into_letters()] {
            for shift in 0..r.len() {
                let mut c = r[shift..].to_vec();
                c.extend_from_slice(&r[..shift]);
                cyclic_relators.push(c);
            }
        }
        let half = PI / (4 * genus) as f64;
        let cot = half.cos() / half.sin();
        let group = Self {
            genus,
            generators,
            letter_maps,
            centers,
            relator,
            cyclic_relators,
            volume: 4.0 * PI * (genus as f64 - 1.0),
            inradius: cot.acosh(),
            circumradius: (cot * cot).acosh(),
        };
        let product = group.word_matrix(&group.relator)?;
        let err = product.distance_psl2(&MoebiusMap::identity());
        if err > tol.relator {
            return Err(Error::InvalidGroup(format!(
                "relator product differs from identity by {err:e}"
            )));
        }
        Ok(group)
    }

    fn commutator_relator(genus: usize) -> Word {
        let mut letters = Vec::with_capacity(4 * genus);
        for j in 0..genus {
            let a = Letter::new(2 * j, false);
            let b = Letter::new(2 * j + 1, false);
            letters.extend([a, b, a.inverse(), b.inverse()]);
        }
        Word::from_letters(letters)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    /// Number of generators (`2g`); also the homology rank.
    pub fn rank(&self) -> usize {
        2 * self.genus
    }

    /// Number of letters, generators and inverses (`4g`).
    pub fn letter_count(&self) -> usize {
        4 * self.genus
    }

    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..4 * self.genus).map(Letter::from_code)
    }

    #[inline]
    pub fn letter_map(&self, l: Letter) -> &MoebiusMap {
        &self.letter_maps[l.code()]
    }

    pub fn relator(&self) -> &Word {
        &self.relator
    }

    /// Hyperbolic area of the quotient, `4 pi (g - 1)`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Distance from `i` to the midpoint of each side of the polygon.
    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    /// Distance from `i` to each vertex of the polygon.
    pub fn circumradius(&self) -> f64 {
        self.circumradius
    }

    /// Largest displacement `r(z, l z)` over all letters.
    pub fn max_displacement(&self, z: &Point) -> f64 {
        self.letter_maps
            .iter()
            .map(|m| z.dist(&m.apply(z)))
            .fold(0.0, f64::max)
    }

    pub fn validate_word(&self, w: &Word) -> Result<()> {
        for l in w.letters() {
            if l.code() >= self.letter_count() {
                return Err(Error::InvalidLetter {
                    letter: format!("code {}", l.code()),
                    generators: self.rank(),
                });
            }
        }
        Ok(())
    }

    /// Product of letter matrices along `w`, renormalized after every step.
    pub fn word_matrix(&self, w: &Word) -> Result<MoebiusMap> {
        self.validate_word(w)?;
        w.letters().iter().try_fold(MoebiusMap::identity(), |m, l| {
            m.compose(self.letter_map(*l))
        })
    }

    pub fn abelianize(&self, w: &Word) -> Vec<i64> {
        w.abelianize(self.rank())
    }

    /// Dehn's algorithm: after free reduction, repeatedly replace any
    /// subword covering more than half of a cyclic relator by the shorter
    /// complement.
    pub fn dehn_reduce(&self, w: &Word) -> Word {
        let half = 2 * self.genus;
        let mut letters = w.free_reduce().into_letters();
        'outer: loop {
            for start in 0..letters.len() {
                for r in &self.cyclic_relators {
                    if r[0] != letters[start] {
                        continue;
                    }
                    let matched = letters[start..]
                        .iter()
                        .zip(r)
                        .take_while(|(x, y)| x == y)
                        .count();
                    if matched > half {
                        let replacement = r[matched..].iter().rev().map(|l| l.inverse());
                        let tail = letters.split_off(start + matched);
                        letters.truncate(start);
                        letters.extend(replacement);
                        letters.extend(tail);
                        letters = Word::from_letters(letters).free_reduce().into_letters();
                        continue 'outer;
                    }
                }
            }
            return Word::from_letters(letters);
        }
    }

    /// Canonical (ShortLex-least geodesic) word for the element `w`.
    ///
    /// Free reduction and Dehn's algorithm shorten the word symbolically;
    /// the ShortLex representative is then read off the tiling. Fails with
    /// [`Error::AmbiguousNormalForm`] once the element's displacement is
    /// beyond what double precision resolves (roughly 30).
    pub fn reduce(&self, w: &Word) -> Result<Word> {
        self.validate_word(w)?;
        let short = self.dehn_reduce(w);
        if short.len() <= 1 {
            return Ok(short);
        }
        let m = self.word_matrix(&short)?;
        self.normal_form(&m)
    }

    /// ShortLex normal form of the element with matrix `m`.
    pub fn normal_form(&self, m: &MoebiusMap) -> Result<Word> {
        self.normal_form_of_center(m.apply(&Point::i()))
    }

    /// ShortLex normal form of the element `g` with `g(i) = center`.
    ///
    /// Every wall test on a tile centre has an absolute gap of at least
    /// `2 sinh^2(inradius)` in `cosh` units; a gap that is not clearly
    /// resolved against rounding is reported as an error rather than guessed.
    pub fn normal_form_of_center(&self, center: Point) -> Result<Word> {
        let i = Point::i();
        let mut p = center;
        let mut word = Word::empty();
        for _ in 0..MAX_WALK {
            let c0 = cosh_dist(&p, &i);
            let noise = 1e3 * f64::EPSILON * c0;
            let mut crossed = None;
            for (code, c) in self.centers.iter().enumerate() {
                let gap = c0 - cosh_dist(&p, c);
                if gap.abs() <= noise {
                    return Err(Error::AmbiguousNormalForm);
                }
                if gap > 0.0 {
                    crossed = Some(Letter::from_code(code));
                    break;
                }
            }
            match crossed {
                Some(l) => {
                    word.push(l);
                    p = self.letter_map(l.inverse()).apply(&p);
                }
                None => {
                    // Inside the base tile; a tile centre must be `i` itself.
                    if c0 > 1.0 + 1e-6 {
                        return Err(Error::AmbiguousNormalForm);
                    }
                    return Ok(word);
                }
            }
        }
        Err(Error::AmbiguousNormalForm)
    }

    /// Canonical word of a tile containing `p` (any point, not only tile
    /// centres). Points on a wall may be assigned to either side.
    pub fn tile_of(&self, p: &Point) -> Word {
        let i = Point::i();
        let mut p = *p;
        let mut word = Word::empty();
        for _ in 0..MAX_WALK {
            let c0 = cosh_dist(&p, &i);
            let crossed = self
                .centers
                .iter()
                .position(|c| cosh_dist(&p, c) < c0)
                .map(Letter::from_code);
            match crossed {
                Some(l) => {
                    word.push(l);
                    p = self.letter_map(l.inverse()).apply(&p);
                }
                None => break,
            }
        }
        word
    }

    /// Whether crossing from the tile centred at `parent` to the adjacent
    /// tile centred at `child` lengthens the canonical word.
    #[inline]
    pub fn steps_outward(parent: &Point, child: &Point) -> bool {
        let i = Point::i();
        cosh_dist(child, &i) > cosh_dist(parent, &i)
    }

    /// Bundles the canonical word, matrix and abelianization of `w`.
    pub fn element_from_word(&self, w: &Word) -> Result<GroupElement> {
        let word = self.reduce(w)?;
        self.element_from_canonical(word)
    }

    /// Like [`Self::element_from_word`] for a word already in normal form.
    pub fn element_from_canonical(&self, word: Word) -> Result<GroupElement> {
        let matrix = self.word_matrix(&word)?;
        let abelianization = self.abelianize(&word);
        Ok(GroupElement {
            word,
            matrix,
            abelianization,
        })
    }

    pub fn identity_element(&self) -> GroupElement {
        GroupElement {
            word: Word::empty(),
            matrix: MoebiusMap::identity(),
            abelianization: vec![0; self.rank()],
        }
    }

    pub fn to_record(&self) -> GroupRecord {
        GroupRecord {
            genus: self.genus,
            generators: self.generators.iter().map(|m| m.entries()).collect(),
            relator: self.relator.to_string(),
        }
    }

    pub fn from_record(record: &GroupRecord) -> Result<Self> {
        let generators = record
            .generators
            .iter()
            .map(|[a, b, c, d]| MoebiusMap::new(*a, *b, *c, *d))
            .collect::<Result<Vec<_>>>()?;
        let group = Self::from_generators(record.genus, generators)?;
        if Word::parse(&record.relator, record.genus)? != group.relator {
            return Err(Error::InvalidGroup(
                "only the product-of-commutators relator is supported".into(),
            ));
        }
        Ok(group)
    }

    /// Pretty-printed JSON of [`GroupRecord`]; floats use shortest
    /// round-trip formatting, so export and re-import is exact.
    pub fn export(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_record()).expect("serializable record");
        s.push('\n');
        s
    }

    pub fn import(text: &str) -> Result<Self> {
        let record: GroupRecord = serde_json::from_str(text)?;
        Self::from_record(&record)
    }

    /// SHA-256 of [`Self::export`], hex encoded.
    pub fn fingerprint(&self) -> String {
        hex_digest(self.export().as_bytes())
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> SurfaceGroup {
        SurfaceGroup::octagon(2).unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    #[test]
    fn octagon_group_invariants() {
        for genus in [2, 3, 4] {
            let g = SurfaceGroup::octagon(genus).unwrap();
            assert_eq!(g.letter_count(), 4 * genus);
            assert_eq!(g.generators().len(), 2 * genus);
            // independent oracle: direct product of the raw matrices
            let mut m = MoebiusMap::identity();
            for l in g.relator().letters() {
                m = m.mul_raw(g.letter_map(*l));
            }
            assert!(
                m.distance_psl2(&MoebiusMap::identity()) < 1e-8,
                "genus {genus}"
            );
            for gen in g.generators() {
                assert!(gen.trace().abs() > 2.0 + 1e-6);
            }
            assert!((g.volume() - 4.0 * PI * (genus as f64 - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn genus_two_traces_and_displacement() {
        let g = g2();
        for gen in g.generators() {
            assert!((gen.trace().abs() - (2.0 + 2f64.sqrt())).abs() < 1e-12);
        }
        // every letter moves i by twice the inradius
        for l in g.letters() {
            let d = Point::i().dist(&g.letter_map(l).apply(&Point::i()));
            assert!((d - 2.0 * g.inradius()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_genus() {
        assert!(matches!(
            SurfaceGroup::octagon(1),
            Err(Error::InvalidGenus(1))
        ));
        assert!(SurfaceGroup::octagon(0).is_err());
    }

    #[test]
    fn rejects_bad_generators() {
        let g = g2();
        let mut gens = g.generators().to_vec();
        gens.swap(0, 1);
        assert!(SurfaceGroup::from_generators(2, gens).is_err());
        let elliptic = vec![MoebiusMap::rotation_about_i(0.3); 4];
        assert!(SurfaceGroup::from_generators(2, elliptic).is_err());
    }

    #[test]
    fn reduce_examples() {
        let g = g2();
        assert!(g.reduce(g.relator()).unwrap().is_empty());
        assert!(g.reduce(&w("a1 A1")).unwrap().is_empty());
        assert!(g.reduce(&g.relator().inverse()).unwrap().is_empty());
        // five of the eight relator letters: Dehn replaces them by the
        // inverse of the remaining three
        let five = w("a1 b1 A1 B1 a2");
        let r = g.dehn_reduce(&five);
        assert_eq!(r.len(), 3);
        let red = g.reduce(&five).unwrap();
        assert!(red.len() <= 3);
        let lhs = g.word_matrix(&five).unwrap();
        let rhs = g.word_matrix(&red).unwrap();
        assert!(lhs.distance_psl2(&rhs) < 1e-8);
    }

    #[test]
    fn single_letters_are_canonical() {
        let g = g2();
        for l in g.letters() {
            let word = Word::from_letters(vec![l]);
            assert_eq!(g.reduce(&word).unwrap(), word);
            assert_eq!(g.normal_form(g.letter_map(l)).unwrap(), word);
        }
    }

    #[test]
    fn half_relator_ties_resolve_to_shortlex_least() {
        let g = g2();
        // a1 b1 A1 B1 = b2 a2 B2 A2 (inverse of the second commutator);
        // both are length 4 geodesics, and so is every half-relator split.
        let left = w("a1 b1 A1 B1");
        let right = w("b2 a2 B2 A2");
        let cl = g.reduce(&left).unwrap();
        let cr = g.reduce(&right).unwrap();
        assert_eq!(cl, cr);
        assert_eq!(cl.len(), 4);
        assert!(cl <= left && cl <= right);
    }

    #[test]
    fn element_from_word_examples() {
        let g = g2();
        let e = g.element_from_word(&Word::empty()).unwrap();
        assert_eq!(e, g.identity_element());
        let a1 = g.element_from_word(&w("a1")).unwrap();
        assert_eq!(a1.word, w("a1"));
        assert_eq!(a1.matrix, g.generators()[0]);
        assert_eq!(a1.abelianization, vec![1, 0, 0, 0]);
        let rel = g.element_from_word(g.relator()).unwrap();
        assert!(rel.is_identity());
        assert_eq!(rel.abelianization, vec![0; 4]);
        // equal elements give identical outputs
        let x = g.element_from_word(&w("a1 b1 B1 a2")).unwrap();
        let y = g.element_from_word(&w("a1 a2")).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn abelianization_kills_relator() {
        let g = g2();
        assert_eq!(g.abelianize(g.relator()), vec![0; 4]);
    }

    #[test]
    fn tile_of_finds_containing_tile() {
        let g = g2();
        assert!(g.tile_of(&Point::i()).is_empty());
        let e = g.element_from_word(&w("a1 b2 A1")).unwrap();
        let p = e.matrix.apply(&Point::new(0.05, 1.1).unwrap());
        assert_eq!(g.tile_of(&p), e.word);
    }

    #[test]
    fn export_import_is_exact() {
        let g = g2();
        let text = g.export();
        let back = SurfaceGroup::import(&text).unwrap();
        assert_eq!(back.generators(), g.generators());
        assert_eq!(back.export(), text);
        assert_eq!(back.fingerprint(), g.fingerprint());
    }
}
