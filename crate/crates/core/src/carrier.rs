//! Carrier-space points, finite point configurations and ground pseudometrics.
//!
//! Configurations are explicit multisets: every process handled here is
//! almost surely finite, so "locally finite" reduces to "finite".

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Maximum dimension of a real carrier.
pub const MAX_DIM: usize = 3;

/// The space a configuration lives on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Carrier {
    /// Positive integer indices `1, 2, ...`.
    Discrete,
    /// The unit interval `[0, 1]`.
    Interval,
    /// The unit cube `[0, 1]^dim`, `2 <= dim <= 3`.
    Cube { dim: usize },
    /// Mark space crossed with trial indices.
    Lifted { marks: Box<Carrier> },
}

impl Carrier {
    pub fn lifted(marks: Carrier) -> Result<Self> {
        if matches!(marks, Carrier::Lifted { .. }) {
            return invalid("lifted carriers cannot be nested");
        }
        Ok(Carrier::Lifted { marks: Box::new(marks) })
    }

    /// Unit interval for `dim == 1`, cube otherwise.
    pub fn unit(dim: usize) -> Result<Self> {
        match dim {
            1 => Ok(Carrier::Interval),
            2 | 3 => Ok(Carrier::Cube { dim }),
            _ => invalid(format!("dimension {dim} outside 1..=3")),
        }
    }

    /// Whether `p` lies on this carrier.
    pub fn contains(&self, p: &CarrierPoint) -> bool {
        match (self, p) {
            (Carrier::Discrete, CarrierPoint::Index(i)) => *i >= 1,
            (Carrier::Interval, CarrierPoint::Real(x)) => (0.0..=1.0).contains(x),
            (Carrier::Cube { dim }, CarrierPoint::Vector { coords, dim: pd }) => {
                dim == &(*pd as usize) && coords[..*dim].iter().all(|x| (0.0..=1.0).contains(x))
            }
            (Carrier::Lifted { marks }, CarrierPoint::Lifted { mark, trial }) => {
                *trial >= 1 && marks.contains(mark)
            }
            _ => false,
        }
    }
}

/// A point of a carrier space.
#[derive(Debug, Clone, PartialEq)]
pub enum CarrierPoint {
    Index(u32),
    Real(f64),
    Vector { coords: [f64; MAX_DIM], dim: u8 },
    /// A mark together with the index of the trial that produced it.
    Lifted { mark: Box<CarrierPoint>, trial: u32 },
}

impl CarrierPoint {
    /// Point of `[0,1]^d` from a coordinate slice; 1-d slices become `Real`.
    pub fn from_coords(coords: &[f64]) -> Result<Self> {
        match coords.len() {
            1 => Ok(CarrierPoint::Real(coords[0])),
            2 | 3 => {
                let mut c = [0.0; MAX_DIM];
                c[..coords.len()].copy_from_slice(coords);
                Ok(CarrierPoint::Vector { coords: c, dim: coords.len() as u8 })
            }
            d => invalid(format!("dimension {d} outside 1..=3")),
        }
    }

    pub fn lifted(mark: CarrierPoint, trial: u32) -> Result<Self> {
        if matches!(mark, CarrierPoint::Lifted { .. }) {
            return invalid("a mark cannot itself be lifted");
        }
        if trial == 0 {
            return invalid("trial indices start at 1");
        }
        Ok(CarrierPoint::Lifted { mark: Box::new(mark), trial })
    }

    /// Coordinates of a real point (empty for discrete and lifted points).
    pub fn coords(&self) -> &[f64] {
        match self {
            CarrierPoint::Real(x) => std::slice::from_ref(x),
            CarrierPoint::Vector { coords, dim } => &coords[..*dim as usize],
            _ => &[],
        }
    }

    /// Deterministic total order used for multiset comparisons.
    fn sort_key(&self) -> (u8, u32, [f64; MAX_DIM]) {
        match self {
            CarrierPoint::Index(i) => (0, *i, [0.0; MAX_DIM]),
            CarrierPoint::Real(x) => (1, 0, [*x, 0.0, 0.0]),
            CarrierPoint::Vector { coords, dim } => (2, *dim as u32, *coords),
            CarrierPoint::Lifted { mark, trial } => {
                let (_, _, c) = mark.sort_key();
                (3, *trial, c)
            }
        }
    }
}

fn total_cmp_points(a: &CarrierPoint, b: &CarrierPoint) -> std::cmp::Ordering {
    let (ka, ia, ca) = a.sort_key();
    let (kb, ib, cb) = b.sort_key();
    ka.cmp(&kb).then(ia.cmp(&ib)).then_with(|| {
        ca.iter()
            .zip(cb.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// A finite counting measure: a multiset of points on one carrier.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    carrier: Carrier,
    points: Vec<CarrierPoint>,
}

impl PointConfig {
    pub fn empty(carrier: Carrier) -> Self {
        Self { carrier, points: Vec::new() }
    }

    pub fn new(carrier: Carrier, points: Vec<CarrierPoint>) -> Result<Self> {
        if let Some(bad) = points.iter().find(|p| !carrier.contains(p)) {
            return invalid(format!("point {bad:?} is not on carrier {carrier:?}"));
        }
        Ok(Self { carrier, points })
    }

    /// Configuration on `[0,1]` from its coordinates.
    pub fn on_interval(xs: &[f64]) -> Result<Self> {
        Self::new(Carrier::Interval, xs.iter().map(|&x| CarrierPoint::Real(x)).collect())
    }

    /// Constructor for points the caller already knows lie on `carrier`.
    pub(crate) fn from_trusted(carrier: Carrier, points: Vec<CarrierPoint>) -> Self {
        debug_assert!(points.iter().all(|p| carrier.contains(p)));
        Self { carrier, points }
    }

    pub fn carrier(&self) -> &Carrier {
        &self.carrier
    }

    pub fn points(&self) -> &[CarrierPoint] {
        &self.points
    }

    /// Total mass `|xi|`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn add_point(&self, p: CarrierPoint) -> Result<Self> {
        if !self.carrier.contains(&p) {
            return invalid(format!("point {p:?} is not on carrier {:?}", self.carrier));
        }
        let mut out = self.clone();
        out.points.push(p);
        Ok(out)
    }

    /// Removes one copy of `p`.
    pub fn remove_point(&self, p: &CarrierPoint) -> Result<Self> {
        let Some(pos) = self.points.iter().position(|q| q == p) else {
            return invalid(format!("point {p:?} is not in the configuration"));
        };
        let mut out = self.clone();
        out.points.remove(pos);
        Ok(out)
    }

    /// Sub-multiset of points satisfying `region`.
    pub fn restrict<F: Fn(&CarrierPoint) -> bool>(&self, region: F) -> Self {
        Self {
            carrier: self.carrier.clone(),
            points: self.points.iter().filter(|p| region(p)).cloned().collect(),
        }
    }

    /// Multiset union.
    pub fn union(&self, other: &PointConfig) -> Result<Self> {
        if self.carrier != other.carrier {
            return invalid("configurations live on different carriers");
        }
        let mut out = self.clone();
        out.points.extend(other.points.iter().cloned());
        Ok(out)
    }

    /// Multiset equality, ignoring point order.
    pub fn same_multiset(&self, other: &PointConfig) -> bool {
        if self.carrier != other.carrier || self.len() != other.len() {
            return false;
        }
        let mut a = self.points.clone();
        let mut b = other.points.clone();
        a.sort_by(total_cmp_points);
        b.sort_by(total_cmp_points);
        a == b
    }

    /// Projection of a lifted configuration onto its marks.
    pub fn project_marks(&self) -> Result<Self> {
        let Carrier::Lifted { marks } = &self.carrier else {
            return invalid("only lifted configurations can be projected");
        };
        let points = self
            .points
            .iter()
            .map(|p| match p {
                CarrierPoint::Lifted { mark, .. } => (**mark).clone(),
                _ => unreachable!("lifted carrier holds lifted points"),
            })
            .collect();
        Ok(Self { carrier: (**marks).clone(), points })
    }
}

/// Boundary treatment for real carriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Geometry {
    #[default]
    Box,
    Torus,
}

impl std::str::FromStr for Geometry {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(Geometry::Box),
            "torus" => Ok(Geometry::Torus),
            other => invalid(format!("unknown geometry `{other}` (expected box|torus)")),
        }
    }
}

/// Ground pseudometric on a carrier, bounded by 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum GroundDistance {
    /// Identically zero.
    Zero,
    /// `|x - y| ∧ 1` on a real carrier; `1{x != y}` on discrete indices.
    CappedEuclidean { geometry: Geometry },
    /// Distance between marks, ignoring trial indices.
    LiftedMark { inner: Box<GroundDistance> },
}

impl GroundDistance {
    pub fn capped(geometry: Geometry) -> Self {
        GroundDistance::CappedEuclidean { geometry }
    }

    pub fn lifted(inner: GroundDistance) -> Self {
        GroundDistance::LiftedMark { inner: Box::new(inner) }
    }

    /// Checks that this distance can be evaluated on `carrier`.
    pub fn check_carrier(&self, carrier: &Carrier) -> Result<()> {
        match (self, carrier) {
            (GroundDistance::Zero, _) => Ok(()),
            (GroundDistance::CappedEuclidean { .. }, Carrier::Lifted { .. }) => {
                invalid("capped Euclidean distance cannot act on a lifted carrier")
            }
            (GroundDistance::CappedEuclidean { .. }, _) => Ok(()),
            (GroundDistance::LiftedMark { inner }, Carrier::Lifted { marks }) => inner.check_carrier(marks),
            (GroundDistance::LiftedMark { .. }, _) => invalid("lifted-mark distance needs a lifted carrier"),
        }
    }

    /// Distance between two points already known to share a compatible carrier.
    pub(crate) fn eval_unchecked(&self, p: &CarrierPoint, q: &CarrierPoint) -> f64 {
        match self {
            GroundDistance::Zero => 0.0,
            GroundDistance::CappedEuclidean { geometry } => match (p, q) {
                (CarrierPoint::Index(i), CarrierPoint::Index(j)) => f64::from(u8::from(i != j)),
                _ => euclidean(p.coords(), q.coords(), *geometry).min(1.0),
            },
            GroundDistance::LiftedMark { inner } => match (p, q) {
                (CarrierPoint::Lifted { mark: a, .. }, CarrierPoint::Lifted { mark: b, .. }) => {
                    inner.eval_unchecked(a, b)
                }
                _ => unreachable!("carrier checked"),
            },
        }
    }
}

/// Euclidean distance, with wrap-around coordinate differences on the torus.
pub fn euclidean(a: &[f64], b: &[f64], geometry: Geometry) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut d = (x - y).abs();
            if geometry == Geometry::Torus {
                d = d.min(1.0 - d);
            }
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

fn same_kind(p: &CarrierPoint, q: &CarrierPoint) -> bool {
    match (p, q) {
        (CarrierPoint::Index(_), CarrierPoint::Index(_)) | (CarrierPoint::Real(_), CarrierPoint::Real(_)) => true,
        (CarrierPoint::Vector { dim: a, .. }, CarrierPoint::Vector { dim: b, .. }) => a == b,
        (CarrierPoint::Lifted { mark: a, .. }, CarrierPoint::Lifted { mark: b, .. }) => same_kind(a, b),
        _ => false,
    }
}

/// Ground distance `rho0(p, q)`.
pub fn rho0(g: &GroundDistance, p: &CarrierPoint, q: &CarrierPoint) -> Result<f64> {
    if !same_kind(p, q) {
        return invalid(format!("points {p:?} and {q:?} are on different carriers"));
    }
    match (g, p) {
        (GroundDistance::LiftedMark { .. }, CarrierPoint::Lifted { .. }) => {}
        (GroundDistance::LiftedMark { .. }, _) => return invalid("lifted-mark distance needs lifted points"),
        (GroundDistance::CappedEuclidean { .. }, CarrierPoint::Lifted { .. }) => {
            return invalid("capped Euclidean distance cannot act on lifted points")
        }
        _ => {}
    }
    Ok(g.eval_unchecked(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(x: f64) -> CarrierPoint {
        CarrierPoint::Real(x)
    }

    #[test]
    fn rho0_examples() {
        assert_eq!(rho0(&GroundDistance::Zero, &r(0.1), &r(0.8)).unwrap(), 0.0);
        let boxed = GroundDistance::capped(Geometry::Box);
        assert!((rho0(&boxed, &r(0.2), &r(0.9)).unwrap() - 0.7).abs() < 1e-15);
        // the two arcs between 0.05 and 0.95 have lengths 0.9 and 0.1
        let torus = GroundDistance::capped(Geometry::Torus);
        assert!((rho0(&torus, &r(0.05), &r(0.95)).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn capped_at_one_in_the_cube() {
        let g = GroundDistance::capped(Geometry::Box);
        let a = CarrierPoint::from_coords(&[0.0, 0.0, 0.0]).unwrap();
        let b = CarrierPoint::from_coords(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(rho0(&g, &a, &b).unwrap(), 1.0);
    }

    #[test]
    fn carrier_mismatch_is_rejected() {
        let g = GroundDistance::capped(Geometry::Box);
        let v = CarrierPoint::from_coords(&[0.1, 0.2]).unwrap();
        assert!(rho0(&g, &r(0.1), &v).is_err());
        assert!(rho0(&g, &r(0.1), &CarrierPoint::Index(1)).is_err());
        let lifted = CarrierPoint::lifted(r(0.1), 1).unwrap();
        assert!(rho0(&g, &lifted, &lifted).is_err());
    }

    #[test]
    fn lifted_mark_ignores_trial() {
        let g = GroundDistance::lifted(GroundDistance::capped(Geometry::Box));
        let a = CarrierPoint::lifted(r(0.25), 1).unwrap();
        let b = CarrierPoint::lifted(r(0.75), 9).unwrap();
        assert!((rho0(&g, &a, &b).unwrap() - 0.5).abs() < 1e-15);
        assert!(CarrierPoint::lifted(a.clone(), 2).is_err());
        assert!(Carrier::lifted(Carrier::lifted(Carrier::Interval).unwrap()).is_err());
    }

    #[test]
    fn restrict_examples() {
        let xi = PointConfig::on_interval(&[0.1, 0.5, 0.9]).unwrap();
        let sub = xi.restrict(|p| p.coords()[0] <= 0.6);
        assert!(sub.same_multiset(&PointConfig::on_interval(&[0.1, 0.5]).unwrap()));
        assert!(xi.restrict(|_| true).same_multiset(&xi));
        let empty = PointConfig::empty(Carrier::Interval);
        assert!(empty.restrict(|_| true).is_empty());
        // input unchanged
        assert_eq!(xi.len(), 3);
    }

    #[test]
    fn add_remove_examples() {
        let p = r(0.3);
        let xi = PointConfig::on_interval(&[0.3, 0.7]).unwrap();
        let back = xi.remove_point(&p).unwrap().add_point(p.clone()).unwrap();
        assert!(back.same_multiset(&xi));
        let single = PointConfig::empty(Carrier::Interval).add_point(p.clone()).unwrap();
        assert_eq!(single.len(), 1);
        let doubled = PointConfig::on_interval(&[0.3, 0.3]).unwrap();
        assert_eq!(doubled.remove_point(&p).unwrap().len(), 1);
        assert!(single.remove_point(&r(0.4)).is_err());
        assert!(single.add_point(r(1.5)).is_err());
    }

    fn point_in(dim: usize) -> impl Strategy<Value = CarrierPoint> {
        proptest::collection::vec(0.0f64..=1.0, dim).prop_map(|c| CarrierPoint::from_coords(&c).unwrap())
    }

    fn distances() -> Vec<GroundDistance> {
        vec![
            GroundDistance::Zero,
            GroundDistance::capped(Geometry::Box),
            GroundDistance::capped(Geometry::Torus),
        ]
    }

    proptest! {
        #[test]
        fn ground_distances_are_bounded_pseudometrics(
            dim in 1usize..=3,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut pt = || {
                let c: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
                CarrierPoint::from_coords(&c).unwrap()
            };
            let (x, y, z) = (pt(), pt(), pt());
            for g in distances() {
                let dxy = rho0(&g, &x, &y).unwrap();
                let dyz = rho0(&g, &y, &z).unwrap();
                let dxz = rho0(&g, &x, &z).unwrap();
                prop_assert!(dxz <= dxy + dyz + 1e-12);
                prop_assert_eq!(dxy, rho0(&g, &y, &x).unwrap());
                prop_assert_eq!(rho0(&g, &x, &x).unwrap(), 0.0);
                prop_assert!((0.0..=1.0).contains(&dxy));
            }
        }

        #[test]
        fn restrict_partitions_the_multiset(xs in proptest::collection::vec(0.0f64..=1.0, 0..20), cut in 0.0f64..=1.0) {
            let xi = PointConfig::on_interval(&xs).unwrap();
            let lo = xi.restrict(|p| p.coords()[0] < cut);
            let hi = xi.restrict(|p| p.coords()[0] >= cut);
            prop_assert!(lo.union(&hi).unwrap().same_multiset(&xi));
        }

        #[test]
        fn add_point_increments_mass(xs in proptest::collection::vec(0.0f64..=1.0, 0..20), p in point_in(1)) {
            let xi = PointConfig::on_interval(&xs).unwrap();
            prop_assert_eq!(xi.add_point(p).unwrap().len(), xi.len() + 1);
        }
    }
}
