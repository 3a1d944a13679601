//! Seedable samplers for the point processes under study, with their mean measures.

mod fasta;
mod matern;
mod occupancy;
mod palindrome;
mod trials;

pub use fasta::{read_fasta, read_fasta_str, Base};
pub use matern::{kappa, matern_ball_volume, matern_mean_measure, matern_thin, sample_matern};
pub use occupancy::{occupancy_pi, sample_occupancy, OccupancyLaw, OccupancyModel, OccupancySample};
pub use palindrome::{
    palindrome_indicators, sample_dna, PalindromeLaw, PalindromeModel, PalindromeSample,
};
pub use trials::{
    sample_marked_trials, ExplicitPmfLaw, IndependentLaw, IndicatorModel, JointPmf, MarkLaw, Marks,
    Relation, TrialLaw,
};
pub(crate) use trials::grid_config;
#[cfg(test)]
pub(crate) use trials::mask_of;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};

use crate::carrier::{Carrier, CarrierPoint, Geometry, PointConfig};
use crate::error::{invalid, Result};
use crate::special::kahan_sum;

/// Density of a mean measure on `[0,1]^d`.
pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Mean measure of a finite point process.
#[derive(Clone)]
pub enum MeanMeasure {
    /// Finitely many weighted atoms on one carrier.
    DiscreteAtoms { carrier: Carrier, atoms: Vec<(CarrierPoint, f64)>, total_mass: f64 },
    /// A density on the unit box (or torus) integrated on a midpoint grid.
    BoxDensity(BoxDensity),
}

/// A density on `[0,1]^d` together with its grid quadrature.
#[derive(Clone)]
pub struct BoxDensity {
    pub dim: usize,
    pub geometry: Geometry,
    pub grid: usize,
    density: DensityFn,
    sup: f64,
    total_mass: f64,
}

impl fmt::Debug for MeanMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeanMeasure::DiscreteAtoms { atoms, total_mass, .. } => f
                .debug_struct("DiscreteAtoms")
                .field("atoms", &atoms.len())
                .field("total_mass", total_mass)
                .finish(),
            MeanMeasure::BoxDensity(b) => f
                .debug_struct("BoxDensity")
                .field("dim", &b.dim)
                .field("geometry", &b.geometry)
                .field("grid", &b.grid)
                .field("total_mass", &b.total_mass)
                .finish(),
        }
    }
}

/// Calls `f` with each midpoint of a `grid^dim` partition of the unit box.
pub(crate) fn for_each_cell_center(dim: usize, grid: usize, mut f: impl FnMut(&[f64])) {
    let h = 1.0 / grid as f64;
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        for (xk, ik) in x.iter_mut().zip(&idx) {
            *xk = (*ik as f64 + 0.5) * h;
        }
        f(&x);
        let mut k = 0;
        loop {
            if k == dim {
                return;
            }
            idx[k] += 1;
            if idx[k] < grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

impl MeanMeasure {
    pub fn discrete(carrier: Carrier, atoms: Vec<(CarrierPoint, f64)>) -> Result<Self> {
        for (p, w) in &atoms {
            if !carrier.contains(p) {
                return invalid(format!("atom {p:?} is not on carrier {carrier:?}"));
            }
            if !(w.is_finite() && *w > 0.0) {
                return invalid(format!("atom weights must be positive, found {w}"));
            }
        }
        let total_mass = kahan_sum(atoms.iter().map(|(_, w)| *w));
        Ok(MeanMeasure::DiscreteAtoms { carrier, atoms, total_mass })
    }

    /// Density measure; `sup` must dominate the density everywhere (used for rejection sampling).
    pub fn density(dim: usize, geometry: Geometry, grid: usize, sup: f64, density: DensityFn) -> Result<Self> {
        Carrier::unit(dim)?;
        if grid == 0 {
            return invalid("quadrature grid must be positive");
        }
        if !(sup.is_finite() && sup >= 0.0) {
            return invalid("density bound must be finite and nonnegative");
        }
        let cell = (1.0 / grid as f64).powi(dim as i32);
        let mut acc = crate::special::KahanSum::new();
        let mut bad = None;
        for_each_cell_center(dim, grid, |x| {
            let v = density(x);
            if !(v.is_finite() && v >= 0.0 && v <= sup * (1.0 + 1e-12)) {
                bad = Some(v);
            }
            acc.add(v * cell);
        });
        if let Some(v) = bad {
            return invalid(format!("density value {v} is negative or exceeds the declared bound {sup}"));
        }
        Ok(MeanMeasure::BoxDensity(BoxDensity { dim, geometry, grid, density, sup, total_mass: acc.value() }))
    }

    /// Constant density `lambda` on `[0,1]^dim`.
    pub fn uniform(dim: usize, geometry: Geometry, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return invalid(format!("intensity must be finite and nonnegative, found {lambda}"));
        }
        Self::density(dim, geometry, 1, lambda, Arc::new(move |_| lambda))
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            MeanMeasure::DiscreteAtoms { total_mass, .. } => *total_mass,
            MeanMeasure::BoxDensity(b) => b.total_mass,
        }
    }

    pub fn carrier(&self) -> Carrier {
        match self {
            MeanMeasure::DiscreteAtoms { carrier, .. } => carrier.clone(),
            MeanMeasure::BoxDensity(b) => Carrier::unit(b.dim).expect("validated at construction"),
        }
    }

    /// Density value at `x` (box densities only).
    pub fn density_at(&self, x: &[f64]) -> Option<f64> {
        match self {
            MeanMeasure::BoxDensity(b) => Some((b.density)(x)),
            MeanMeasure::DiscreteAtoms { .. } => None,
        }
    }

    /// Quadrature nodes `(point, weight)` whose weights sum to the total mass.
    pub fn quadrature(&self) -> Vec<(CarrierPoint, f64)> {
        match self {
            MeanMeasure::DiscreteAtoms { atoms, .. } => atoms.clone(),
            MeanMeasure::BoxDensity(b) => {
                let cell = (1.0 / b.grid as f64).powi(b.dim as i32);
                let mut out = Vec::with_capacity(b.grid.pow(b.dim as u32));
                for_each_cell_center(b.dim, b.grid, |x| {
                    out.push((CarrierPoint::from_coords(x).expect("dim checked"), (b.density)(x) * cell));
                });
                out
            }
        }
    }

    /// One location from the normalized measure.
    pub fn sample_location<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<CarrierPoint> {
        match self {
            MeanMeasure::DiscreteAtoms { atoms, total_mass, .. } => {
                if atoms.is_empty() {
                    return invalid("cannot sample from an empty measure");
                }
                let u = rng.random::<f64>() * total_mass;
                let mut acc = 0.0;
                for (p, w) in atoms {
                    acc += w;
                    if u < acc {
                        return Ok(p.clone());
                    }
                }
                Ok(atoms.last().expect("nonempty").0.clone())
            }
            MeanMeasure::BoxDensity(b) => {
                if b.sup <= 0.0 {
                    return invalid("cannot sample from a zero density");
                }
                let mut x = [0.0; crate::carrier::MAX_DIM];
                for _ in 0..10_000_000u64 {
                    for xk in x.iter_mut().take(b.dim) {
                        *xk = rng.random::<f64>();
                    }
                    let f = (b.density)(&x[..b.dim]);
                    if rng.random::<f64>() * b.sup < f {
                        return CarrierPoint::from_coords(&x[..b.dim]);
                    }
                }
                Err(crate::Error::Resource("rejection sampler for the density did not accept".into()))
            }
        }
    }
}

/// Draws a Poisson process with mean measure `mm`.
pub fn sample_poisson_process<R: Rng + ?Sized>(mm: &MeanMeasure, rng: &mut R) -> Result<PointConfig> {
    let carrier = mm.carrier();
    match mm {
        MeanMeasure::DiscreteAtoms { atoms, .. } => {
            let mut points = Vec::new();
            for (p, w) in atoms {
                for _ in 0..poisson_count(*w, rng) {
                    points.push(p.clone());
                }
            }
            Ok(PointConfig::from_trusted(carrier, points))
        }
        MeanMeasure::BoxDensity(_) => {
            let n = poisson_count(mm.total_mass(), rng);
            let points = (0..n).map(|_| mm.sample_location(rng)).collect::<Result<Vec<_>>>()?;
            Ok(PointConfig::from_trusted(carrier, points))
        }
    }
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> usize {
    if lambda <= 0.0 {
        return 0;
    }
    let draw: f64 = Poisson::new(lambda).expect("positive finite rate").sample(rng);
    draw as usize
}

/// Immigration-death process `Z_{xi0}(t)`: immigrants arrive at rate `lambda`
/// with locations from `mm` normalized, and every point dies at rate 1.
pub fn sample_immigration_death<R: Rng + ?Sized>(
    xi0: &PointConfig,
    mm: &MeanMeasure,
    t: f64,
    rng: &mut R,
) -> Result<PointConfig> {
    if !(t.is_finite() && t >= 0.0) {
        return invalid(format!("time must be finite and nonnegative, found {t}"));
    }
    if xi0.carrier() != &mm.carrier() {
        return invalid("initial configuration and mean measure live on different carriers");
    }
    let lambda = mm.total_mass();
    let mut alive: Vec<CarrierPoint> = xi0.points().to_vec();
    let mut now = 0.0;
    loop {
        let rate = lambda + alive.len() as f64;
        if rate <= 0.0 {
            break;
        }
        now += Exp::new(rate).expect("positive rate").sample(rng);
        if now > t {
            break;
        }
        if rng.random::<f64>() * rate < lambda {
            alive.push(mm.sample_location(rng)?);
        } else {
            let k = rng.random_range(0..alive.len());
            alive.swap_remove(k);
        }
    }
    Ok(PointConfig::from_trusted(xi0.carrier().clone(), alive))
}
