//! Sequences of weights `α_N ∈ N P ∩ Z^m` that stay within bounded distance of
//! the ray `N ξ`, and the vanishing-order data that classifies them.

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact;
use crate::lattice::{round_half_down, Rational, RationalPoint, Weight};
use crate::polytope::{Face, FacetPolytope, PolytopeError};

/// Consecutive admissible N required before a sequence is declared valid.
const N0_WINDOW: u64 = 32;
/// Largest N probed when scanning for a first admissible dilate.
const N0_SCAN_LIMIT: u64 = 4096;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RaysError {
    #[error("point {0} is not in the polytope")]
    NotInPolytope(String),
    #[error("no admissible lattice point for N = {n}; retry at N = {retry_at:?}")]
    NoPointForN { n: u64, retry_at: Option<u64> },
    #[error("weight {alpha} has negative order {order} along facet {facet} at N = {n}; it is not in N P")]
    NegativeOrder { alpha: String, n: u64, facet: usize, order: i64 },
    #[error("offset dimension {found} does not match {expected}")]
    OffsetDimension { expected: usize, found: usize },
    #[error("offset rule needs a positive period and at least one offset")]
    EmptyOffsets,
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
}

/// The base rule of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseRule {
    Rounded,
    Tame,
}

/// How `α_N` is produced; offsets model non-tame sequences as a tame (or
/// rounded) rule shifted by a periodic bounded integer vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    Rounded,
    Tame,
    /// `α_N = base(N) + offsets[N mod offsets.len()]`.
    Offset { base: BaseRule, offsets: Vec<Weight> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionSequence {
    pub polytope: FacetPolytope,
    pub xi: RationalPoint,
    pub kind: SequenceKind,
    /// A priori bound on `‖α_N − N ξ‖_∞`.
    pub bound: Rational,
    /// First N from which the rule produced admissible weights over a full scan window.
    pub n0: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderProfile {
    /// `k_j = <ξ, v_j> + a_j` per facet.
    pub k: Vec<Rational>,
    /// Facets with `k_j > 0`.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TameReport {
    pub tame: bool,
    /// First `(N, facet)` with a nonzero order along a facet that contains ξ.
    pub witness: Option<(u64, usize)>,
}

/// Lattice point of `N P` nearest to `N ξ` in the sup norm, searched in a box of
/// radius `m + 1`; ties go to the lexicographically smallest point.
pub fn round_to_polytope(p: &FacetPolytope, xi: &RationalPoint, n: u64) -> Result<Weight, RaysError> {
    ensure_in(p, xi)?;
    let radius = Rational::from_integer(p.dim() as i64 + 1);
    match nearest_in_box(p, xi, n, radius, |_| true)? {
        Some(a) => Ok(a),
        None => Err(RaysError::NoPointForN {
            n,
            retry_at: scan_admissible(n, |k| nearest_in_box(p, xi, k, radius, |_| true)),
        }),
    }
}

/// Lattice point of `N F` (F the face through ξ) at bounded distance from `N ξ`.
///
/// Uses face-lattice coordinates of `N ξ − N b` rounded half down, then a local
/// search over bounded integer offsets in face coordinates.
pub fn tame_sequence(p: &FacetPolytope, xi: &RationalPoint, n: u64) -> Result<Weight, RaysError> {
    ensure_in(p, xi)?;
    let face = p.face_of(xi)?;
    tame_point(p, xi, &face, n).map_err(|_| RaysError::NoPointForN {
        n,
        retry_at: scan_admissible(n, |k| Ok(tame_point(p, xi, &face, k).ok())),
    })
}

/// Search radius of the offset loop in face coordinates.
fn tame_search_radius(p: &FacetPolytope) -> i64 {
    p.dim() as i64 + 1
}

/// Distance bound guaranteed by the tame construction.
fn tame_bound(p: &FacetPolytope, face: &Face) -> Rational {
    let r = Rational::from_integer(tame_search_radius(p)) + Rational::new(1, 2);
    let row_sum = (0..p.dim())
        .map(|i| face.lattice_basis.iter().map(|w| w[i].abs()).sum::<i64>())
        .max()
        .unwrap_or(0);
    // fallback box search also uses this radius; never below the rounding box
    (r * Rational::from_integer(row_sum)).max(Rational::from_integer(p.dim() as i64 + 1))
}

fn on_face(p: &FacetPolytope, face: &Face, alpha: &Weight, n: u64) -> bool {
    face.active.iter().all(|&i| {
        let f = &p.facets()[i];
        alpha.pair(&f.normal).expect("dims") + n as i64 * f.offset == 0
    })
}

fn tame_point(p: &FacetPolytope, xi: &RationalPoint, face: &Face, n: u64) -> Result<Weight, ()> {
    let nn = n as i64;
    let target = xi.scale(nn);
    if face.dim == 0 {
        // a vertex: N ξ itself when integral
        return target.to_weight().filter(|a| p.dilate_contains(a, n).unwrap_or(false)).ok_or(());
    }
    let base = face.basepoint.scale(nn);
    let Some(base_w) = base.to_weight() else {
        // N b not integral: search the face directly near N ξ
        let bound = tame_bound(p, face);
        return nearest_in_box(p, xi, n, bound, |a| on_face(p, face, a, n))
            .ok()
            .flatten()
            .ok_or(());
    };
    let diff: Vec<Rational> = target.0.iter().zip(&base.0).map(|(a, b)| a - b).collect();
    let y = exact::coordinates_in_basis(&face.lattice_basis, &diff).expect("N ξ − N b is parallel to F");
    let y0: Vec<i64> = y.iter().map(round_half_down).collect();
    let build = |c: &[i64]| -> Weight {
        let mut a = base_w.0.clone();
        for (w, &ci) in face.lattice_basis.iter().zip(c) {
            for (ai, wi) in a.iter_mut().zip(w) {
                *ai += ci * wi;
            }
        }
        Weight(a)
    };
    let first = build(&y0);
    if p.dilate_contains(&first, n).unwrap_or(false) {
        return Ok(first);
    }
    // bounded offsets in face coordinates, nearest to N ξ first, then lexicographic
    let r = tame_search_radius(p);
    let mut best: Option<(Rational, Weight)> = None;
    for delta in offsets_box(face.dim, r) {
        let c: Vec<i64> = y0.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let a = build(&c);
        if !p.dilate_contains(&a, n).unwrap_or(false) {
            continue;
        }
        let d = target.linf_distance(&a).expect("dims");
        let better = match &best {
            None => true,
            Some((bd, bw)) => d < *bd || (d == *bd && a < *bw),
        };
        if better {
            best = Some((d, a));
        }
    }
    best.map(|(_, a)| a).ok_or(())
}

fn offsets_box(k: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|v: Vec<i64>| {
                (-r..=r).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// Nearest point of `N P` (sup norm) in the box of the given radius around `N ξ`
/// that also passes `filter`.
fn nearest_in_box(
    p: &FacetPolytope,
    xi: &RationalPoint,
    n: u64,
    radius: Rational,
    filter: impl Fn(&Weight) -> bool,
) -> Result<Option<Weight>, RaysError> {
    let target = xi.scale(n as i64);
    let ranges: Vec<(i64, i64)> = target
        .0
        .iter()
        .map(|t| ((t - radius).ceil().to_integer(), (t + radius).floor().to_integer()))
        .collect();
    let mut best: Option<(Rational, Weight)> = None;
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return Ok(None);
    }
    loop {
        let a = Weight(cur.clone());
        if p.dilate_contains(&a, n)? && filter(&a) {
            let d = target.linf_distance(&a).expect("dims");
            // lexicographic scan order: strict improvement keeps the smallest tie
            if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
                best = Some((d, a));
            }
        }
        let mut i = cur.len();
        loop {
            if i == 0 {
                return Ok(best.map(|(_, a)| a));
            }
            i -= 1;
            if cur[i] < ranges[i].1 {
                cur[i] += 1;
                for j in i + 1..cur.len() {
                    cur[j] = ranges[j].0;
                }
                break;
            }
        }
    }
}

fn scan_admissible(
    n: u64,
    f: impl Fn(u64) -> Result<Option<Weight>, RaysError>,
) -> Option<u64> {
    (n + 1..=n + N0_SCAN_LIMIT).find(|&k| matches!(f(k), Ok(Some(_))))
}

fn ensure_in(p: &FacetPolytope, xi: &RationalPoint) -> Result<(), RaysError> {
    if p.contains(xi)? {
        Ok(())
    } else {
        Err(RaysError::NotInPolytope(xi.to_string()))
    }
}

/// Order of vanishing `<α, v_j> + N a_j` along facet `j`.
pub fn vanishing_order(p: &FacetPolytope, alpha: &Weight, n: u64, j: usize) -> Result<i64, RaysError> {
    let f = &p.facets()[j];
    let order = alpha.pair(&f.normal).map_err(PolytopeError::from)? + n as i64 * f.offset;
    if order < 0 {
        return Err(RaysError::NegativeOrder { alpha: alpha.to_string(), n, facet: j, order });
    }
    Ok(order)
}

pub fn order_profile(p: &FacetPolytope, xi: &RationalPoint) -> Result<OrderProfile, RaysError> {
    ensure_in(p, xi)?;
    let k: Vec<Rational> = p.facets().iter().map(|f| f.slack(xi)).collect();
    let support = (0..k.len()).filter(|&j| k[j].is_positive()).collect();
    Ok(OrderProfile { k, support })
}

/// Facets along which the sections of a tame sequence concentrate their zeros.
pub fn limiting_support(p: &FacetPolytope, xi: &RationalPoint) -> Result<Vec<usize>, RaysError> {
    Ok(order_profile(p, xi)?.support)
}

impl SectionSequence {
    pub fn new(p: &FacetPolytope, xi: &RationalPoint, kind: SequenceKind) -> Result<Self, RaysError> {
        ensure_in(p, xi)?;
        let face = p.face_of(xi)?;
        let base_bound = |b: BaseRule| match b {
            BaseRule::Rounded => Rational::from_integer(p.dim() as i64 + 1),
            BaseRule::Tame => tame_bound(p, &face),
        };
        let bound = match &kind {
            SequenceKind::Rounded => base_bound(BaseRule::Rounded),
            SequenceKind::Tame => base_bound(BaseRule::Tame),
            SequenceKind::Offset { base, offsets } => {
                if offsets.is_empty() {
                    return Err(RaysError::EmptyOffsets);
                }
                if let Some(o) = offsets.iter().find(|o| o.dim() != p.dim()) {
                    return Err(RaysError::OffsetDimension { expected: p.dim(), found: o.dim() });
                }
                let max_off = offsets.iter().flat_map(|o| o.0.iter().map(|x| x.abs())).max().unwrap_or(0);
                base_bound(*base) + Rational::from_integer(max_off)
            }
        };
        let mut seq = SectionSequence { polytope: p.clone(), xi: xi.clone(), kind, bound, n0: 1 };
        seq.n0 = seq.scan_n0()?;
        Ok(seq)
    }

    fn scan_n0(&self) -> Result<u64, RaysError> {
        let mut run_start = 1;
        for n in 1..=N0_SCAN_LIMIT {
            if self.raw_alpha(n).is_err() {
                run_start = n + 1;
            } else if n + 1 - run_start >= N0_WINDOW {
                return Ok(run_start);
            }
        }
        Err(RaysError::NoPointForN { n: N0_SCAN_LIMIT, retry_at: None })
    }

    fn raw_alpha(&self, n: u64) -> Result<Weight, RaysError> {
        let p = &self.polytope;
        let base = |b: BaseRule| match b {
            BaseRule::Rounded => round_to_polytope(p, &self.xi, n),
            BaseRule::Tame => tame_sequence(p, &self.xi, n),
        };
        let alpha = match &self.kind {
            SequenceKind::Rounded => base(BaseRule::Rounded)?,
            SequenceKind::Tame => base(BaseRule::Tame)?,
            SequenceKind::Offset { base: b, offsets } => {
                let off = &offsets[(n % offsets.len() as u64) as usize];
                base(*b)?.add(off).map_err(PolytopeError::from)?
            }
        };
        if p.dilate_contains(&alpha, n)? {
            Ok(alpha)
        } else {
            Err(RaysError::NoPointForN { n, retry_at: None })
        }
    }

    /// The weight `α_N`; defined for `N >= n0`.
    pub fn alpha(&self, n: u64) -> Result<Weight, RaysError> {
        self.raw_alpha(n).map_err(|e| match e {
            RaysError::NoPointForN { n, .. } => RaysError::NoPointForN {
                n,
                retry_at: (n < self.n0).then_some(self.n0),
            },
            other => other,
        })
    }

    /// Sup distance `‖α_N − N ξ‖_∞`.
    pub fn deviation(&self, n: u64) -> Result<Rational, RaysError> {
        let a = self.alpha(n)?;
        Ok(self.xi.scale(n as i64).linf_distance(&a).map_err(PolytopeError::from)?)
    }

    /// Checks that α_N does not vanish along any facet containing ξ, for every
    /// `N >= n0` in the range.
    pub fn is_tame(&self, range: impl IntoIterator<Item = u64>) -> Result<TameReport, RaysError> {
        let profile = order_profile(&self.polytope, &self.xi)?;
        for n in range.into_iter().filter(|&n| n >= self.n0) {
            let alpha = self.alpha(n)?;
            for (j, kj) in profile.k.iter().enumerate() {
                if kj.is_zero() && vanishing_order(&self.polytope, &alpha, n, j)? != 0 {
                    return Ok(TameReport { tame: false, witness: Some((n, j)) });
                }
            }
        }
        Ok(TameReport { tame: true, witness: None })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn interval() -> FacetPolytope {
        FacetPolytope::unit_interval()
    }

    fn simplex() -> FacetPolytope {
        FacetPolytope::unit_simplex(2)
    }

    fn pt(c: &[(i64, i64)]) -> RationalPoint {
        RationalPoint::from_fractions(c)
    }

    /// Brute force: nearest point of N F to N ξ over all lattice points of N P.
    fn brute_tame(p: &FacetPolytope, xi: &RationalPoint, n: u64) -> Weight {
        let face = p.face_of(xi).unwrap();
        let target = xi.scale(n as i64);
        p.lattice_points(n)
            .unwrap()
            .into_iter()
            .filter(|a| on_face(p, &face, a, n))
            .min_by(|a, b| {
                let da = target.linf_distance(a).unwrap();
                let db = target.linf_distance(b).unwrap();
                da.cmp(&db).then(a.cmp(b))
            })
            .unwrap()
    }

    #[test]
    fn rounding_examples() {
        assert_eq!(round_to_polytope(&interval(), &pt(&[(1, 2)]), 4).unwrap(), Weight::new([2]));
        assert_eq!(round_to_polytope(&interval(), &pt(&[(1, 2)]), 5).unwrap(), Weight::new([2]));
        assert_eq!(round_to_polytope(&simplex(), &pt(&[(1, 3), (1, 3)]), 3).unwrap(), Weight::new([1, 1]));
        assert!(matches!(
            round_to_polytope(&interval(), &pt(&[(3, 2)]), 3),
            Err(RaysError::NotInPolytope(_))
        ));
    }

    #[test]
    fn tame_examples() {
        for n in 1..10 {
            assert_eq!(tame_sequence(&interval(), &pt(&[(0, 1)]), n).unwrap(), Weight::new([0]));
        }
        assert_eq!(tame_sequence(&simplex(), &pt(&[(1, 2), (0, 1)]), 4).unwrap(), Weight::new([2, 0]));
        assert_eq!(tame_sequence(&simplex(), &pt(&[(1, 3), (0, 1)]), 4).unwrap(), Weight::new([1, 0]));
    }

    #[test]
    fn tame_matches_brute_force_on_faces() {
        let p = simplex();
        let points = [pt(&[(1, 3), (0, 1)]), pt(&[(2, 7), (5, 7)]), pt(&[(0, 1), (3, 5)]), pt(&[(1, 5), (2, 5)])];
        for xi in &points {
            for n in 1..30 {
                let t = tame_sequence(&p, xi, n).unwrap();
                let b = brute_tame(&p, xi, n);
                let target = xi.scale(n as i64);
                // rounding half down may pick the other member of a tie
                assert_eq!(target.linf_distance(&t).unwrap(), target.linf_distance(&b).unwrap(), "xi={xi} n={n}");
            }
        }
    }

    #[test]
    fn vanishing_order_examples() {
        let p = interval();
        let n = 7;
        assert_eq!(vanishing_order(&p, &Weight::new([0]), n, 1).unwrap(), 7);
        assert_eq!(vanishing_order(&p, &Weight::new([0]), n, 0).unwrap(), 0);
        assert_eq!(vanishing_order(&p, &Weight::new([1]), n, 1).unwrap(), 6);
        assert!(matches!(
            vanishing_order(&p, &Weight::new([8]), n, 1),
            Err(RaysError::NegativeOrder { .. })
        ));
    }

    #[test]
    fn order_profile_examples() {
        let r = |a, b| Rational::new(a, b);
        let prof = order_profile(&interval(), &pt(&[(0, 1)])).unwrap();
        assert_eq!(prof.k, vec![r(0, 1), r(1, 1)]);
        assert_eq!(prof.support, vec![1]);
        let prof = order_profile(&interval(), &pt(&[(1, 2)])).unwrap();
        assert_eq!(prof.k, vec![r(1, 2), r(1, 2)]);
        let prof = order_profile(&simplex(), &pt(&[(1, 2), (0, 1)])).unwrap();
        assert_eq!(prof.k, vec![r(1, 2), r(0, 1), r(1, 2)]);
        assert_eq!(limiting_support(&simplex(), &pt(&[(1, 2), (0, 1)])).unwrap(), vec![0, 2]);
        assert_eq!(limiting_support(&interval(), &pt(&[(1, 2)])).unwrap(), vec![0, 1]);
    }

    #[test]
    fn tameness_examples() {
        let p = interval();
        let xi = pt(&[(0, 1)]);
        let tame = SectionSequence::new(&p, &xi, SequenceKind::Tame).unwrap();
        assert!(tame.is_tame(1..200).unwrap().tame);

        let shifted = SequenceKind::Offset { base: BaseRule::Tame, offsets: vec![Weight::new([1])] };
        let seq = SectionSequence::new(&p, &xi, shifted).unwrap();
        let report = seq.is_tame(1..200).unwrap();
        assert!(!report.tame);
        assert_eq!(report.witness.unwrap().1, 0);

        let alternating =
            SequenceKind::Offset { base: BaseRule::Tame, offsets: vec![Weight::new([1]), Weight::new([0])] };
        let seq = SectionSequence::new(&p, &xi, alternating).unwrap();
        assert_eq!(seq.alpha(3).unwrap(), Weight::new([0]));
        assert_eq!(seq.alpha(4).unwrap(), Weight::new([1]));
        let report = seq.is_tame(1..200).unwrap();
        assert!(!report.tame);
    }

    #[test]
    fn interior_rounding_is_tame_and_bounded() {
        let p = simplex();
        let xi = pt(&[(2, 7), (3, 11)]);
        let seq = SectionSequence::new(&p, &xi, SequenceKind::Rounded).unwrap();
        assert!(seq.is_tame(seq.n0..400).unwrap().tame);
        for n in seq.n0..400 {
            assert!(seq.deviation(n).unwrap() <= seq.bound);
        }
    }

    #[test]
    fn orders_converge_to_profile() {
        let p = simplex();
        let xi = pt(&[(1, 3), (0, 1)]);
        let seq = SectionSequence::new(&p, &xi, SequenceKind::Tame).unwrap();
        let prof = order_profile(&p, &xi).unwrap();
        for n in [10u64, 100, 1000] {
            let a = seq.alpha(n).unwrap();
            for (j, f) in p.facets().iter().enumerate() {
                let ord = Rational::new(vanishing_order(&p, &a, n, j).unwrap(), n as i64);
                let l1: i64 = f.normal.0.iter().map(|x| x.abs()).sum();
                let tol = seq.bound * Rational::from_integer(l1) / Rational::from_integer(n as i64);
                assert!((ord - prof.k[j]).abs() <= tol);
            }
        }
    }
}
