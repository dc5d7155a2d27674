//! Facet-presented lattice polytopes `P = {u : <u, v_j> >= -a_j}`, their faces,
//! dilate lattice points, and the decay exponent attached to a face.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exact;
use crate::lattice::{CoWeight, LatticeError, Rational, RationalPoint, Weight};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolytopeError {
    #[error("polytope needs at least one facet")]
    NoFacets,
    #[error("facet {index} has dimension {found}, expected {expected}")]
    FacetDimension { index: usize, expected: usize, found: usize },
    #[error("facet normal {index} is zero")]
    ZeroNormal { index: usize },
    #[error("facet normal {index} = {normal:?} is not primitive; divide by the gcd to get {hint:?} (and adjust the offset)")]
    NonPrimitive { index: usize, normal: Vec<i64>, hint: Vec<i64> },
    #[error("polytope is unbounded (recession direction {direction:?})")]
    Unbounded { direction: Vec<i64> },
    #[error("polytope is empty")]
    Empty,
    #[error("polytope has empty interior")]
    EmptyInterior,
    #[error("point {0} is not in the polytope")]
    NotInPolytope(String),
    #[error("dilation factor must be positive")]
    ZeroDilation,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// One facet inequality `<u, normal> >= -offset`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Facet {
    pub normal: CoWeight,
    pub offset: i64,
}

impl Facet {
    pub fn new(normal: impl Into<Vec<i64>>, offset: i64) -> Self {
        Facet { normal: CoWeight::new(normal), offset }
    }

    /// Slack `<u, v> + a`; zero exactly on the supporting hyperplane.
    pub fn slack(&self, u: &RationalPoint) -> Rational {
        u.pair(&self.normal).expect("dimension checked at construction")
            + Rational::from_integer(self.offset)
    }
}

/// Construction report: vertex witness and facets that do not support a
/// codimension-one face.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub vertices: Vec<RationalPoint>,
    pub redundant_facets: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacetPolytope {
    m: usize,
    facets: Vec<Facet>,
    vertices: Vec<RationalPoint>,
    redundant: Vec<usize>,
}

/// A face `F = P ∩ ⋂_{i∈I} H_i` together with an affine lattice chart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    /// Facets whose hyperplanes contain the face.
    pub active: Vec<usize>,
    pub dim: usize,
    /// Lexicographically smallest vertex of the face.
    pub basepoint: RationalPoint,
    /// Basis of the lattice of integer directions parallel to the face.
    pub lattice_basis: Vec<Vec<i64>>,
}

impl FacetPolytope {
    pub fn new(facets: Vec<Facet>) -> Result<Self, PolytopeError> {
        let m = facets.first().ok_or(PolytopeError::NoFacets)?.normal.dim();
        for (index, f) in facets.iter().enumerate() {
            if f.normal.dim() != m {
                return Err(PolytopeError::FacetDimension { index, expected: m, found: f.normal.dim() });
            }
            if f.normal.0.iter().all(|&x| x == 0) {
                return Err(PolytopeError::ZeroNormal { index });
            }
            if !f.normal.is_primitive() {
                return Err(PolytopeError::NonPrimitive {
                    index,
                    normal: f.normal.0.clone(),
                    hint: f.normal.primitive_part().0,
                });
            }
        }
        check_bounded(&facets, m)?;
        let vertices = enumerate_vertices(&facets, m);
        if vertices.is_empty() {
            return Err(PolytopeError::Empty);
        }
        let centroid = centroid(&vertices);
        if facets.iter().any(|f| f.slack(&centroid) <= Rational::zero()) {
            return Err(PolytopeError::EmptyInterior);
        }
        let redundant = (0..facets.len())
            .filter(|&j| {
                let on: Vec<&RationalPoint> =
                    vertices.iter().filter(|v| facets[j].slack(v).is_zero()).collect();
                affine_dim(&on) + 1 < m
            })
            .collect();
        Ok(FacetPolytope { m, facets, vertices, redundant })
    }

    /// The unit interval `[0, 1]`, the moment polytope of the projective line.
    pub fn unit_interval() -> Self {
        Self::new(vec![Facet::new([1], 0), Facet::new([-1], 1)]).expect("valid")
    }

    /// The standard simplex `{u >= 0, sum u <= 1}` in dimension `m`.
    pub fn unit_simplex(m: usize) -> Self {
        let mut facets: Vec<Facet> = (0..m)
            .map(|i| Facet::new((0..m).map(|j| i64::from(i == j)).collect::<Vec<_>>(), 0))
            .collect();
        facets.push(Facet::new(vec![-1; m], 1));
        Self::new(facets).expect("valid")
    }

    /// The unit cube `[0, 1]^m`.
    pub fn unit_cube(m: usize) -> Self {
        let mut facets = Vec::new();
        for i in 0..m {
            let e: Vec<i64> = (0..m).map(|j| i64::from(i == j)).collect();
            facets.push(Facet::new(e.clone(), 0));
            facets.push(Facet::new(e.iter().map(|x| -x).collect::<Vec<_>>(), 1));
        }
        Self::new(facets).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn vertices(&self) -> &[RationalPoint] {
        &self.vertices
    }

    pub fn validate(&self) -> Diagnostics {
        Diagnostics { vertices: self.vertices.clone(), redundant_facets: self.redundant.clone() }
    }

    /// True when every vertex is a lattice point.
    pub fn is_lattice(&self) -> bool {
        self.vertices.iter().all(RationalPoint::is_integral)
    }

    pub fn contains(&self, u: &RationalPoint) -> Result<bool, PolytopeError> {
        self.check_dim(u.dim())?;
        Ok(self.facets.iter().all(|f| f.slack(u) >= Rational::zero()))
    }

    /// True when `u` satisfies every facet inequality strictly.
    pub fn interior_contains(&self, u: &RationalPoint) -> Result<bool, PolytopeError> {
        self.check_dim(u.dim())?;
        Ok(self.facets.iter().all(|f| f.slack(u) > Rational::zero()))
    }

    /// Membership of an integer point in the dilate `N P`.
    pub fn dilate_contains(&self, alpha: &Weight, n: u64) -> Result<bool, PolytopeError> {
        self.check_dim(alpha.dim())?;
        let n = n as i64;
        Ok(self
            .facets
            .iter()
            .all(|f| alpha.pair(&f.normal).expect("dims") + n * f.offset >= 0))
    }

    /// All lattice points of `N P`, sorted lexicographically.
    pub fn lattice_points(&self, n: u64) -> Result<Vec<Weight>, PolytopeError> {
        if n == 0 {
            return Err(PolytopeError::ZeroDilation);
        }
        let scale = Rational::from_integer(n as i64);
        let lo: Vec<i64> = (0..self.m)
            .map(|i| {
                self.vertices.iter().map(|v| (v.0[i] * scale).floor().to_integer()).min().unwrap()
            })
            .collect();
        let hi: Vec<i64> = (0..self.m)
            .map(|i| {
                self.vertices.iter().map(|v| (v.0[i] * scale).ceil().to_integer()).max().unwrap()
            })
            .collect();
        let mut out = Vec::new();
        let mut cur = lo.clone();
        'scan: loop {
            let alpha = Weight(cur.clone());
            if self.dilate_contains(&alpha, n)? {
                out.push(alpha);
            }
            // odometer with the last coordinate fastest keeps lexicographic order
            let mut i = self.m;
            loop {
                if i == 0 {
                    break 'scan;
                }
                i -= 1;
                if cur[i] < hi[i] {
                    cur[i] += 1;
                    for c in cur.iter_mut().skip(i + 1).zip(lo.iter().skip(i + 1)) {
                        *c.0 = *c.1;
                    }
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Indices of facets whose hyperplane contains `u`.
    pub fn active_facets(&self, u: &RationalPoint) -> Vec<usize> {
        (0..self.facets.len()).filter(|&j| self.facets[j].slack(u).is_zero()).collect()
    }

    /// The unique face containing `xi` in its relative interior.
    pub fn face_of(&self, xi: &RationalPoint) -> Result<Face, PolytopeError> {
        if !self.contains(xi)? {
            return Err(PolytopeError::NotInPolytope(xi.to_string()));
        }
        let active = self.active_facets(xi);
        Ok(self.face_from_active(active))
    }

    fn face_from_active(&self, active: Vec<usize>) -> Face {
        let rows: Vec<Vec<i64>> = active.iter().map(|&i| self.facets[i].normal.0.clone()).collect();
        let dim = self.m - exact::rank_int(&rows);
        let basepoint = self
            .vertices
            .iter()
            .find(|v| active.iter().all(|&i| self.facets[i].slack(v).is_zero()))
            .cloned()
            .expect("a nonempty face has a vertex");
        let lattice_basis = exact::integer_kernel(&rows, self.m);
        debug_assert_eq!(lattice_basis.len(), dim);
        Face { active, dim, basepoint, lattice_basis }
    }

    /// Decay exponent `(m - k) + k/2` of the face through `xi`.
    pub fn kappa(&self, xi: &RationalPoint) -> Result<Rational, PolytopeError> {
        let k = self.face_of(xi)?.dim as i64;
        Ok(Rational::from_integer(self.m as i64 - k) + Rational::new(k, 2))
    }

    /// Vertices of `P` lying on the face.
    pub fn face_vertices(&self, face: &Face) -> Vec<RationalPoint> {
        self.vertices
            .iter()
            .filter(|v| face.active.iter().all(|&i| self.facets[i].slack(v).is_zero()))
            .cloned()
            .collect()
    }

    /// Euclidean volume, computed exactly by a recursive pulling triangulation.
    pub fn volume(&self) -> Rational {
        let all: Vec<usize> = (0..self.vertices.len()).collect();
        let simplices = self.triangulate(&all, self.m);
        let mut fact = Rational::one();
        for i in 2..=self.m as i64 {
            fact *= Rational::from_integer(i);
        }
        simplices
            .iter()
            .map(|s| {
                let apex = &self.vertices[s[0]];
                let rows: Vec<Vec<Rational>> = s[1..]
                    .iter()
                    .map(|&i| {
                        self.vertices[i].0.iter().zip(&apex.0).map(|(a, b)| a - b).collect()
                    })
                    .collect();
                num_traits::Signed::abs(&exact::determinant(&rows)) / fact
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    fn triangulate(&self, verts: &[usize], d: usize) -> Vec<Vec<usize>> {
        if d == 0 {
            return vec![vec![verts[0]]];
        }
        let apex = verts[0];
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        let mut out = Vec::new();
        for f in &self.facets {
            let sub: Vec<usize> =
                verts.iter().copied().filter(|&v| f.slack(&self.vertices[v]).is_zero()).collect();
            if sub.contains(&apex) || sub.is_empty() || !seen.insert(sub.clone()) {
                continue;
            }
            let pts: Vec<&RationalPoint> = sub.iter().map(|&v| &self.vertices[v]).collect();
            if affine_dim(&pts) + 1 != d {
                continue;
            }
            for mut s in self.triangulate(&sub, d - 1) {
                s.insert(0, apex);
                out.push(s);
            }
        }
        out
    }

    fn check_dim(&self, d: usize) -> Result<(), PolytopeError> {
        if d == self.m {
            Ok(())
        } else {
            Err(LatticeError::DimensionMismatch { left: d, right: self.m }.into())
        }
    }
}

impl Face {
    /// Dimension of the cone dual to this face.
    pub fn codim(&self, m: usize) -> usize {
        m - self.dim
    }
}

fn check_bounded(facets: &[Facet], m: usize) -> Result<(), PolytopeError> {
    let rows: Vec<Vec<i64>> = facets.iter().map(|f| f.normal.0.clone()).collect();
    if exact::rank_int(&rows) < m {
        // a nontrivial lineality space
        let k = exact::integer_kernel(&rows, m);
        return Err(PolytopeError::Unbounded { direction: k[0].clone() });
    }
    // a pointed recession cone {d : V d >= 0} is trivial iff none of its
    // candidate extreme rays (kernels of m-1 facet normals) is feasible
    for subset in exact::combinations(facets.len(), m - 1) {
        let sub: Vec<Vec<i64>> = subset.iter().map(|&i| rows[i].clone()).collect();
        let ker = exact::integer_kernel(&sub, m);
        if ker.len() != 1 {
            continue;
        }
        for sign in [1i64, -1] {
            let d: Vec<i64> = ker[0].iter().map(|x| sign * x).collect();
            let ok = rows.iter().all(|r| r.iter().zip(&d).map(|(a, b)| a * b).sum::<i64>() >= 0);
            if ok {
                return Err(PolytopeError::Unbounded { direction: d });
            }
        }
    }
    Ok(())
}

fn enumerate_vertices(facets: &[Facet], m: usize) -> Vec<RationalPoint> {
    let mut found: BTreeSet<RationalPoint> = BTreeSet::new();
    for subset in exact::combinations(facets.len(), m) {
        let a: Vec<Vec<Rational>> = subset.iter().map(|&i| facets[i].normal.to_rational()).collect();
        let b: Vec<Rational> =
            subset.iter().map(|&i| Rational::from_integer(-facets[i].offset)).collect();
        if let Some(x) = exact::solve_square(&a, &b) {
            let p = RationalPoint(x);
            if facets.iter().all(|f| f.slack(&p) >= Rational::zero()) {
                found.insert(p);
            }
        }
    }
    found.into_iter().collect()
}

fn centroid(points: &[RationalPoint]) -> RationalPoint {
    let m = points[0].dim();
    let n = Rational::from_integer(points.len() as i64);
    RationalPoint(
        (0..m)
            .map(|i| points.iter().fold(Rational::zero(), |s, p| s + p.0[i]) / n)
            .collect(),
    )
}

fn affine_dim(points: &[&RationalPoint]) -> usize {
    let Some(first) = points.first() else {
        return 0;
    };
    let rows: Vec<Vec<Rational>> = points[1..]
        .iter()
        .map(|p| p.0.iter().zip(&first.0).map(|(a, b)| a - b).collect())
        .collect();
    if rows.is_empty() {
        0
    } else {
        exact::rank(&rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p, d)
    }

    #[test]
    fn validate_examples() {
        let interval = FacetPolytope::unit_interval();
        let diag = interval.validate();
        assert_eq!(diag.vertices, vec![RationalPoint::from_integers(&[0]), RationalPoint::from_integers(&[1])]);
        assert!(diag.redundant_facets.is_empty());

        let simplex = FacetPolytope::unit_simplex(2);
        let v: Vec<String> = simplex.vertices().iter().map(|p| p.to_string()).collect();
        assert_eq!(v, vec!["(0, 0)", "(0, 1)", "(1, 0)"]);

        let half = FacetPolytope::new(vec![Facet::new([1, 0], 0)]);
        assert!(matches!(half, Err(PolytopeError::Unbounded { .. })));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            FacetPolytope::new(vec![Facet::new([2], 0), Facet::new([-1], 1)]),
            Err(PolytopeError::NonPrimitive { hint, .. }) if hint == vec![1]
        ));
        assert!(matches!(
            FacetPolytope::new(vec![Facet::new([1], 0), Facet::new([-1], -1)]),
            Err(PolytopeError::Empty)
        ));
        assert!(matches!(
            FacetPolytope::new(vec![Facet::new([1], 0), Facet::new([-1], 0)]),
            Err(PolytopeError::EmptyInterior)
        ));
        // unbounded strip in the plane
        assert!(matches!(
            FacetPolytope::new(vec![Facet::new([1, 0], 0), Facet::new([-1, 0], 1)]),
            Err(PolytopeError::Unbounded { .. })
        ));
        // a wedge: bounded below, open upwards
        assert!(matches!(
            FacetPolytope::new(vec![Facet::new([1, 0], 0), Facet::new([0, 1], 0), Facet::new([1, -1], 1)]),
            Err(PolytopeError::Unbounded { .. })
        ));
    }

    #[test]
    fn redundant_facet_is_reported() {
        let p = FacetPolytope::new(vec![
            Facet::new([1, 0], 0),
            Facet::new([0, 1], 0),
            Facet::new([-1, -1], 1),
            Facet::new([-1, 0], 1), // touches only the vertex (1, 0)
        ])
        .unwrap();
        assert_eq!(p.validate().redundant_facets, vec![3]);
    }

    #[test]
    fn containment() {
        let interval = FacetPolytope::unit_interval();
        assert!(interval.contains(&RationalPoint::from_fractions(&[(1, 2)])).unwrap());
        assert!(!interval.contains(&RationalPoint::from_integers(&[2])).unwrap());
        let simplex = FacetPolytope::unit_simplex(2);
        assert!(simplex.contains(&RationalPoint::from_fractions(&[(1, 3), (1, 3)])).unwrap());
        assert!(simplex.contains(&RationalPoint::from_integers(&[1])).is_err());
    }

    #[test]
    fn lattice_point_examples() {
        let interval = FacetPolytope::unit_interval();
        let pts = interval.lattice_points(3).unwrap();
        assert_eq!(pts, (0..=3).map(|a| Weight::new([a])).collect::<Vec<_>>());
        for n in 1..20 {
            assert_eq!(interval.lattice_points(n).unwrap().len() as u64, n + 1);
        }
        let simplex = FacetPolytope::unit_simplex(2);
        let pts = simplex.lattice_points(2).unwrap();
        let expected: Vec<Weight> = [[0, 0], [0, 1], [0, 2], [1, 0], [1, 1], [2, 0]]
            .iter()
            .map(|a| Weight::new(*a))
            .collect();
        assert_eq!(pts, expected);
        assert!(matches!(interval.lattice_points(0), Err(PolytopeError::ZeroDilation)));
    }

    #[test]
    fn square_has_four_vertices() {
        assert_eq!(FacetPolytope::unit_cube(2).vertices().len(), 4);
        assert_eq!(FacetPolytope::unit_cube(3).vertices().len(), 8);
    }

    #[test]
    fn face_examples() {
        let interval = FacetPolytope::unit_interval();
        let f = interval.face_of(&RationalPoint::from_fractions(&[(1, 2)])).unwrap();
        assert!(f.active.is_empty());
        assert_eq!(f.dim, 1);
        let f = interval.face_of(&RationalPoint::from_integers(&[0])).unwrap();
        assert_eq!(f.active, vec![0]);
        assert_eq!(f.dim, 0);
        assert!(f.lattice_basis.is_empty());

        let simplex = FacetPolytope::unit_simplex(2);
        let f = simplex.face_of(&RationalPoint::from_fractions(&[(1, 2), (0, 1)])).unwrap();
        assert_eq!(f.active, vec![1]);
        assert_eq!(f.dim, 1);
        assert_eq!(f.lattice_basis.len(), 1);
        assert_eq!(f.lattice_basis[0].iter().map(|x| x.abs()).collect::<Vec<_>>(), vec![1, 0]);
        assert_eq!(f.basepoint, RationalPoint::from_integers(&[0, 0]));

        assert!(matches!(
            interval.face_of(&RationalPoint::from_integers(&[2])),
            Err(PolytopeError::NotInPolytope(_))
        ));
    }

    #[test]
    fn kappa_examples() {
        let interval = FacetPolytope::unit_interval();
        assert_eq!(interval.kappa(&RationalPoint::from_fractions(&[(1, 2)])).unwrap(), q(1, 2));
        assert_eq!(interval.kappa(&RationalPoint::from_integers(&[0])).unwrap(), q(1, 1));
        let simplex = FacetPolytope::unit_simplex(2);
        assert_eq!(simplex.kappa(&RationalPoint::from_fractions(&[(1, 2), (0, 1)])).unwrap(), q(3, 2));
        assert_eq!(simplex.kappa(&RationalPoint::from_fractions(&[(1, 3), (1, 3)])).unwrap(), q(1, 1));
        assert_eq!(simplex.kappa(&RationalPoint::from_integers(&[0, 1])).unwrap(), q(2, 1));
    }

    #[test]
    fn exact_volumes() {
        assert_eq!(FacetPolytope::unit_interval().volume(), q(1, 1));
        assert_eq!(FacetPolytope::unit_simplex(2).volume(), q(1, 2));
        assert_eq!(FacetPolytope::unit_simplex(3).volume(), q(1, 6));
        assert_eq!(FacetPolytope::unit_cube(2).volume(), q(1, 1));
        assert_eq!(FacetPolytope::unit_cube(3).volume(), q(1, 1));
        // hexagon: the cube [-1,1]^2 with two corners cut, area 4 - 1 = 3
        let hex = FacetPolytope::new(vec![
            Facet::new([1, 0], 1),
            Facet::new([-1, 0], 1),
            Facet::new([0, 1], 1),
            Facet::new([0, -1], 1),
            Facet::new([1, 1], 1),
            Facet::new([-1, -1], 1),
        ])
        .unwrap();
        assert_eq!(hex.vertices().len(), 6);
        assert_eq!(hex.volume(), q(3, 1));
    }
}
