//! Enumeration of the orbit ball `{g in G : r(g z, w) <= x}`.
//!
//! The search walks the tiling adjacency graph (right multiplication by
//! each letter) from the identity and from the tile containing `w`,
//! expanding only elements with `r(g z, w) <= x + margin`. Elements are
//! keyed by canonical word, so dedup is exact.
//!
//! With the default margin `R + 2 r(i, z)` (`R` the polygon circumradius)
//! the search is complete: every tile meeting the closed ball of radius
//! `x + r(i, z)` about `w` satisfies the expansion bound, those tiles form
//! a side-connected family containing the tile of `w`, and every target
//! element lies in it.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, SurfaceGroup, Word};
use crate::halfplane::{cosh_dist, dist};
use crate::{MoebiusMap, Point};

/// Default cap on the projected ball size `pi e^x / vol`.
pub const DEFAULT_ELEMENT_CAP: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub element: GroupElement,
    /// `r(g z, w)`.
    pub distance: f64,
    pub cosh_distance: f64,
    /// `g z`.
    pub orbit_point: Point,
}

/// Search statistics for one word length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellStat {
    pub word_length: usize,
    /// Distinct elements inside the expansion bound.
    pub admitted: usize,
    /// Of those, how many were expanded.
    pub expanded: usize,
    /// Smallest `r(g z, w)` seen at this length, including elements
    /// rejected by the expansion bound.
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumerationOptions {
    /// Expansion slack beyond `x`. `None` uses [`covering_margin`] times
    /// `margin_scale`.
    pub margin: Option<f64>,
    /// Multiplier (`>= 1`) on the default margin.
    pub margin_scale: f64,
    pub element_cap: usize,
    pub workers: usize,
    /// Re-run with the margin doubled and require the identical record set.
    pub paranoid: bool,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        Self {
            margin: None,
            margin_scale: 1.0,
            element_cap: DEFAULT_ELEMENT_CAP,
            workers: 1,
            paranoid: false,
        }
    }
}

impl EnumerationOptions {
    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = Some(margin);
        self
    }

    pub fn with_margin_scale(mut self, scale: f64) -> Self {
        self.margin_scale = scale;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitBall {
    pub base_z: Point,
    pub base_w: Point,
    pub radius: f64,
    /// Sorted by `(distance, word)`, words in ShortLex order.
    pub records: Vec<OrbitRecord>,
    pub shell_stats: Vec<ShellStat>,
    /// Slack beyond `radius` that the search explored.
    pub stopping_margin: f64,
    /// Number of distinct elements the search admitted.
    pub explored: usize,
}

impl OrbitBall {
    /// `N(z, w, x)`.
    pub fn count(&self) -> usize {
        self.records.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.base_z == self.base_w
    }

    /// The sub-ball of radius `x <= self.radius`.
    pub fn restrict(&self, x: f64) -> Result<OrbitBall> {
        if !(x >= 0.0) || x > self.radius {
            return Err(Error::InvalidArgument(format!(
                "cannot restrict a ball of radius {} to {x}",
                self.radius
            )));
        }
        let records: Vec<OrbitRecord> = self
            .records
            .iter()
            .take_while(|r| r.distance <= x)
            .cloned()
            .collect();
        Ok(OrbitBall {
            base_z: self.base_z,
            base_w: self.base_w,
            radius: x,
            records,
            shell_stats: self.shell_stats.clone(),
            stopping_margin: self.stopping_margin + (self.radius - x),
            explored: self.explored,
        })
    }

    /// Stopping-rule audit: the longest explored word length must contain
    /// no expanded element and its minimum distance must exceed
    /// `radius + stopping_margin`.
    pub fn audit(&self) -> Result<()> {
        let last = self
            .shell_stats
            .last()
            .ok_or_else(|| Error::StoppingAudit("no shells recorded".into()))?;
        let bound = self.radius + self.stopping_margin;
        if last.expanded > 0 || !(last.min_distance > bound - 1e-9) {
            return Err(Error::StoppingAudit(format!(
                "final shell (length {}) has min distance {} against bound {bound}",
                last.word_length, last.min_distance
            )));
        }
        Ok(())
    }
}

/// Smallest margin for which the search is provably complete.
pub fn covering_margin(group: &SurfaceGroup, z: &Point) -> f64 {
    group.circumradius() + 2.0 * dist(&Point::i(), z) + 1e-9
}

/// The default margin prescribed by the displacement heuristic,
/// `2 max_k r(z, g_k z)`. Larger than [`covering_margin`] near `i`.
pub fn displacement_margin(group: &SurfaceGroup, z: &Point) -> f64 {
    2.0 * group.max_displacement(z)
}

struct Node {
    word: Word,
    matrix: MoebiusMap,
    center: Point,
    cosh_zw: f64,
    expandable: bool,
}

enum Child {
    Admitted(Node),
    Rejected { length: usize, cosh_zw: f64 },
}

/// Enumerates `{g : r(g z, w) <= x}`.
pub fn enumerate_ball(
    group: &SurfaceGroup,
    z: &Point,
    w: &Point,
    x: f64,
    opts: &EnumerationOptions,
) -> Result<OrbitBall> {
    let ball = enumerate_once(group, z, w, x, opts)?;
    if opts.paranoid {
        let doubled = EnumerationOptions {
            margin: Some(2.0 * ball.stopping_margin),
            paranoid: false,
            ..opts.clone()
        };
        let check = enumerate_once(group, z, w, x, &doubled)?;
        let same = check.records.len() == ball.records.len()
            && check
                .records
                .iter()
                .zip(&ball.records)
                .all(|(a, b)| a.element.word == b.element.word);
        if !same {
            return Err(Error::StoppingAudit(format!(
                "doubling the margin changed the ball: {} vs {} records",
                ball.records.len(),
                check.records.len()
            )));
        }
    }
    Ok(ball)
}

/// Radius slack for the recentred search, so that elements on the sphere
/// survive the change of frame.
const FRAME_SLACK: f64 = 1e-9;

/// Moves both basepoints into the base tile before searching, so that every
/// tile centre the search touches stays close to `i`, where canonical words
/// are reliable. With `w = h w0` and `z = k z0`, `r(g z, w) = r(g' z0, w0)`
/// for `g' = h^-1 g k`.
fn enumerate_once(
    group: &SurfaceGroup,
    z: &Point,
    w: &Point,
    x: f64,
    opts: &EnumerationOptions,
) -> Result<OrbitBall> {
    let h = group.element_from_word(&group.tile_of(w))?;
    let k = group.element_from_word(&group.tile_of(z))?;
    if h.is_identity() && k.is_identity() {
        return search(group, z, w, x, opts);
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be >= 0, got {x}"
        )));
    }
    let k_inv = k.matrix.inverse();
    let (z0, w0) = (k_inv.apply(z), h.matrix.inverse().apply(w));
    let core = search(group, &z0, &w0, x + FRAME_SLACK, opts)?;
    let mut records = Vec::with_capacity(core.records.len());
    for r in &core.records {
        let m = h.matrix.compose(&r.element.matrix)?.compose(&k_inv)?;
        let word = group.normal_form(&m)?;
        let rec = make_record(group, word, z, w)?;
        if rec.distance <= x {
            records.push(rec);
        }
    }
    sort_records(&mut records);
    Ok(OrbitBall {
        base_z: *z,
        base_w: *w,
        radius: x,
        records,
        shell_stats: core.shell_stats,
        stopping_margin: core.stopping_margin + FRAME_SLACK,
        explored: core.explored,
    })
}

fn make_record(group: &SurfaceGroup, word: Word, z: &Point, w: &Point) -> Result<OrbitRecord> {
    let matrix = group.word_matrix(&word)?;
    let orbit_point = matrix.apply(z);
    Ok(OrbitRecord {
        distance: dist(&orbit_point, w),
        cosh_distance: cosh_dist(&orbit_point, w),
        orbit_point,
        element: GroupElement {
            abelianization: group.abelianize(&word),
            word,
            matrix,
        },
    })
}

fn sort_records(records: &mut [OrbitRecord]) {
    records.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.element.word.cmp(&b.element.word))
    });
}

/// Breadth-first search over adjacent tiles.
fn search(
    group: &SurfaceGroup,
    z: &Point,
    w: &Point,
    x: f64,
    opts: &EnumerationOptions,
) -> Result<OrbitBall> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "radius must be >= 0, got {x}"
        )));
    }
    if opts.workers == 0 {
        return Err(Error::InvalidArgument("workers must be >= 1".into()));
    }
    if !(opts.margin_scale >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "margin scale must be >= 1, got {}",
            opts.margin_scale
        )));
    }
    let required = covering_margin(group, z);
    let margin = opts.margin.unwrap_or(required * opts.margin_scale);
    if !(margin >= required) {
        return Err(Error::InsufficientMargin { margin, required });
    }
    let projected = std::f64::consts::PI * x.exp() / group.volume();
    if projected > opts.element_cap as f64 {
        return Err(Error::BudgetExceeded {
            projected,
            cap: opts.element_cap,
        });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let limit = (x + margin).cosh();
    // Hard stop for runaway searches; the explored set is roughly
    // e^margin times the ball.
    let explore_cap = (projected * (margin + 1.0).exp() * 8.0).max(1e4);

    let make_node = |word: Word| -> Result<Node> {
        let matrix = group.word_matrix(&word)?;
        let cosh_zw = cosh_dist(&matrix.apply(z), w);
        Ok(Node {
            center: matrix.apply(&Point::i()),
            expandable: cosh_zw <= limit,
            word,
            matrix,
            cosh_zw,
        })
    };

    let mut nodes: Vec<Node> = Vec::new();
    let mut index: HashMap<Word, u32> = HashMap::new();
    let mut shells: BTreeMap<usize, ShellStat> = BTreeMap::new();
    let mut layer: Vec<u32> = Vec::new();

    let admit = |node: Node,
                 nodes: &mut Vec<Node>,
                 index: &mut HashMap<Word, u32>,
                 shells: &mut BTreeMap<usize, ShellStat>,
                 layer: &mut Vec<u32>| {
        if index.contains_key(&node.word) {
            return;
        }
        let shell = shell_entry(shells, node.word.len());
        shell.admitted += 1;
        shell.min_distance = shell.min_distance.min(node.cosh_zw.acosh());
        if node.expandable {
            shell.expanded += 1;
            layer.push(nodes.len() as u32);
        }
        index.insert(node.word.clone(), nodes.len() as u32);
        nodes.push(node);
    };

    let seed_tile = group.normal_form(&group.word_matrix(&group.tile_of(w))?)?;
    for seed in [Word::empty(), seed_tile] {
        let node = make_node(seed)?;
        admit(node, &mut nodes, &mut index, &mut shells, &mut layer);
    }

    while !layer.is_empty() {
        let children: Vec<Result<Vec<Child>>> = pool.install(|| {
            layer
                .par_iter()
                .map(|&idx| expand(group, &nodes[idx as usize], z, w, limit, &make_node))
                .collect()
        });
        let mut next = Vec::new();
        for batch in children {
            for child in batch? {
                match child {
                    Child::Admitted(node) => {
                        admit(node, &mut nodes, &mut index, &mut shells, &mut next)
                    }
                    Child::Rejected { length, cosh_zw } => {
                        let shell = shell_entry(&mut shells, length);
                        shell.min_distance = shell.min_distance.min(cosh_zw.acosh());
                    }
                }
            }
        }
        if nodes.len() as f64 > explore_cap {
            return Err(Error::BudgetExceeded {
                projected: nodes.len() as f64,
                cap: explore_cap as usize,
            });
        }
        layer = next;
    }

    let mut records: Vec<OrbitRecord> = nodes
        .iter()
        .filter_map(|n| {
            let orbit_point = n.matrix.apply(z);
            let distance = dist(&orbit_point, w);
            (distance <= x).then(|| OrbitRecord {
                element: GroupElement {
                    word: n.word.clone(),
                    matrix: n.matrix,
                    abelianization: group.abelianize(&n.word),
                },
                distance,
                cosh_distance: cosh_dist(&orbit_point, w),
                orbit_point,
            })
        })
        .collect();
    sort_records(&mut records);
    if records.len() > opts.element_cap {
        return Err(Error::BudgetExceeded {
            projected: records.len() as f64,
            cap: opts.element_cap,
        });
    }
    let ball = OrbitBall {
        base_z: *z,
        base_w: *w,
        radius: x,
        records,
        shell_stats: shells.into_values().collect(),
        stopping_margin: margin,
        explored: nodes.len(),
    };
    ball.audit()?;
    Ok(ball)
}

fn shell_entry(shells: &mut BTreeMap<usize, ShellStat>, length: usize) -> &mut ShellStat {
    shells.entry(length).or_insert(ShellStat {
        word_length: length,
        admitted: 0,
        expanded: 0,
        min_distance: f64::INFINITY,
    })
}

fn expand<F>(
    group: &SurfaceGroup,
    parent: &Node,
    z: &Point,
    w: &Point,
    limit: f64,
    make_node: &F,
) -> Result<Vec<Child>>
where
    F: Fn(Word) -> Result<Node>,
{
    let mut out = Vec::with_capacity(group.letter_count());
    for letter in group.letters() {
        let m = parent.matrix.compose(group.letter_map(letter))?;
        let cosh_zw = cosh_dist(&m.apply(z), w);
        let center = m.apply(&Point::i());
        if cosh_zw > limit {
            let length = if SurfaceGroup::steps_outward(&parent.center, &center) {
                parent.word.len() + 1
            } else {
                parent.word.len().saturating_sub(1)
            };
            out.push(Child::Rejected { length, cosh_zw });
            continue;
        }
        let word = group.normal_form_of_center(center)?;
        out.push(Child::Admitted(make_node(word)?));
    }
    Ok(out)
}

/// `N(z, w, x)` for a ball.
pub fn count(ball: &OrbitBall) -> usize {
    ball.count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g2() -> SurfaceGroup {
        SurfaceGroup::octagon(2).unwrap()
    }

    #[test]
    fn radius_zero_is_identity_only() {
        let g = g2();
        let i = Point::i();
        let ball = enumerate_ball(&g, &i, &i, 0.0, &EnumerationOptions::default()).unwrap();
        assert_eq!(ball.count(), 1);
        assert!(ball.records[0].element.is_identity());
        assert_eq!(ball.records[0].distance, 0.0);
    }

    #[test]
    fn below_minimal_displacement_is_identity_only() {
        let g = g2();
        let i = Point::i();
        // every nonidentity element moves i by at least twice the inradius
        let x = 2.0 * g.inradius() - 1e-6;
        let ball = enumerate_ball(&g, &i, &i, x, &EnumerationOptions::default()).unwrap();
        assert_eq!(ball.count(), 1);
        let ball = enumerate_ball(&g, &i, &i, x + 2e-6, &EnumerationOptions::default()).unwrap();
        assert_eq!(ball.count(), 1 + g.letter_count());
    }

    #[test]
    fn identity_membership_follows_basepoint_distance() {
        let g = g2();
        let z = Point::new(0.1, 1.2).unwrap();
        let w = Point::new(-0.2, 0.9).unwrap();
        let d = dist(&z, &w);
        let opts = EnumerationOptions::default();
        let inside = enumerate_ball(&g, &z, &w, d + 1e-9, &opts).unwrap();
        assert!(inside.records.iter().any(|r| r.element.is_identity()));
        let outside = enumerate_ball(&g, &z, &w, d - 1e-9, &opts).unwrap();
        assert!(!outside.records.iter().any(|r| r.element.is_identity()));
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = g2();
        let i = Point::i();
        let opts = EnumerationOptions::default();
        assert!(enumerate_ball(&g, &i, &i, -1.0, &opts).is_err());
        assert!(matches!(
            enumerate_ball(&g, &i, &i, 2.0, &opts.clone().with_margin(0.5)),
            Err(Error::InsufficientMargin { .. })
        ));
        assert!(enumerate_ball(&g, &i, &i, 2.0, &opts.clone().with_margin_scale(0.5)).is_err());
        let capped = EnumerationOptions {
            element_cap: 100,
            ..EnumerationOptions::default()
        };
        assert!(matches!(
            enumerate_ball(&g, &i, &i, 8.0, &capped),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn records_are_sorted_distinct_and_within_radius() {
        let g = g2();
        let z = Point::new(0.3, 1.1).unwrap();
        let w = Point::new(-0.4, 0.8).unwrap();
        let ball = enumerate_ball(&g, &z, &w, 6.0, &EnumerationOptions::default()).unwrap();
        let mut words: Vec<_> = ball
            .records
            .iter()
            .map(|r| r.element.word.clone())
            .collect();
        words.sort();
        words.dedup();
        assert_eq!(words.len(), ball.count());
        for pair in ball.records.windows(2) {
            assert!(pair[0].distance <= pair[1].distance);
        }
        for r in &ball.records {
            assert!(r.distance <= 6.0);
            assert!((r.cosh_distance - r.distance.cosh()).abs() <= 1e-9 * r.cosh_distance);
            assert_eq!(g.reduce(&r.element.word).unwrap(), r.element.word);
        }
        ball.audit().unwrap();
    }

    #[test]
    fn far_basepoints_are_handled() {
        let g = g2();
        let z = Point::i();
        let w = Point::new(3.0, 0.05).unwrap();
        let ball = enumerate_ball(&g, &z, &w, 4.0, &EnumerationOptions::default()).unwrap();
        let sym = enumerate_ball(&g, &w, &z, 4.0, &EnumerationOptions::default()).unwrap();
        assert_eq!(ball.count(), sym.count());
        assert!(ball.count() > 0);
    }

    #[test]
    fn wider_margins_find_the_same_ball() {
        let g = g2();
        let z = Point::new(0.3, 0.8).unwrap();
        let w = Point::new(-2.0, 0.2).unwrap();
        let base = enumerate_ball(&g, &z, &w, 5.0, &EnumerationOptions::default()).unwrap();
        let wide = EnumerationOptions::default().with_margin_scale(1.7);
        let wider = enumerate_ball(&g, &z, &w, 5.0, &wide).unwrap();
        assert_eq!(base.records, wider.records);
        assert!(wider.stopping_margin > base.stopping_margin);
    }

    #[test]
    fn paranoid_mode_agrees() {
        let g = g2();
        let i = Point::i();
        let opts = EnumerationOptions {
            paranoid: true,
            ..EnumerationOptions::default()
        };
        let ball = enumerate_ball(&g, &i, &i, 5.0, &opts).unwrap();
        assert!(ball.count() > 1);
    }

    #[test]
    fn restrict_matches_direct_enumeration() {
        let g = g2();
        let i = Point::i();
        let opts = EnumerationOptions::default();
        let big = enumerate_ball(&g, &i, &i, 7.0, &opts).unwrap();
        let small = enumerate_ball(&g, &i, &i, 5.5, &opts).unwrap();
        let cut = big.restrict(5.5).unwrap();
        assert_eq!(cut.records, small.records);
        assert!(big.restrict(7.5).is_err());
    }
}
