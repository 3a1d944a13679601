//! Matérn hard-core thinning of a homogeneous Poisson process on `[0,1]^d`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use super::{sample_poisson_process, MeanMeasure};
use crate::carrier::{euclidean, Carrier, CarrierPoint, Geometry, PointConfig};
use crate::error::{invalid, Result};
use crate::special::KahanSum;

/// Volume of the unit ball in dimension `d`.
pub fn kappa(d: usize) -> Result<f64> {
    match d {
        1 => Ok(2.0),
        2 => Ok(PI),
        3 => Ok(4.0 * PI / 3.0),
        _ => invalid(format!("dimension {d} outside 1..=3")),
    }
}

fn capped_distance(a: &[f64], b: &[f64], geometry: Geometry) -> f64 {
    euclidean(a, b, geometry).min(1.0)
}

/// Keeps the points of `z` with no other point of `z` strictly within distance `r`.
pub fn matern_thin(z: &PointConfig, r: f64, geometry: Geometry) -> Result<PointConfig> {
    if !(r.is_finite() && r >= 0.0) {
        return invalid(format!("radius must be finite and nonnegative, found {r}"));
    }
    let dim = match z.carrier() {
        Carrier::Interval => 1,
        Carrier::Cube { dim } => *dim,
        other => return invalid(format!("Matérn thinning needs a real carrier, got {other:?}")),
    };
    let pts: Vec<&[f64]> = z.points().iter().map(CarrierPoint::coords).collect();
    let n = pts.len();
    if r == 0.0 || n < 2 {
        return Ok(z.clone());
    }
    let mut deleted = vec![false; n];

    // cells of side >= r, so every close pair lies in neighbouring cells
    let per_axis = ((1.0 / r).floor() as usize).min((n as f64).powf(1.0 / dim as f64) as usize + 1);
    if per_axis < 3 {
        for i in 0..n {
            for j in (i + 1)..n {
                if capped_distance(pts[i], pts[j], geometry) < r {
                    deleted[i] = true;
                    deleted[j] = true;
                }
            }
        }
    } else {
        let k = per_axis;
        let cell_of = |x: &[f64]| -> Vec<usize> { x.iter().map(|c| ((c * k as f64) as usize).min(k - 1)).collect() };
        let flat = |c: &[usize]| c.iter().fold(0usize, |acc, &ci| acc * k + ci);
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); k.pow(dim as u32)];
        for (i, p) in pts.iter().enumerate() {
            cells[flat(&cell_of(p))].push(i);
        }
        let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
            .map(|mut code| {
                (0..dim)
                    .map(|_| {
                        let o = (code % 3) as i64 - 1;
                        code /= 3;
                        o
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            let home = cell_of(pts[i]);
            'offsets: for off in &offsets {
                let mut nb = Vec::with_capacity(dim);
                for (h, o) in home.iter().zip(off) {
                    let c = *h as i64 + o;
                    match geometry {
                        Geometry::Torus => nb.push(c.rem_euclid(k as i64) as usize),
                        Geometry::Box if c < 0 || c >= k as i64 => continue 'offsets,
                        Geometry::Box => nb.push(c as usize),
                    }
                }
                for &j in &cells[flat(&nb)] {
                    if j != i && capped_distance(pts[i], pts[j], geometry) < r {
                        deleted[i] = true;
                        break;
                    }
                }
            }
        }
    }
    let points = z.points().iter().zip(&deleted).filter(|(_, d)| !**d).map(|(p, _)| p.clone()).collect();
    Ok(PointConfig::from_trusted(z.carrier().clone(), points))
}

/// Draws `(z, xi)`: a Poisson(`mu`) uniform sample on `[0,1]^d` and its Matérn thinning.
pub fn sample_matern<R: Rng + ?Sized>(
    mu: f64,
    r: f64,
    d: usize,
    geometry: Geometry,
    rng: &mut R,
) -> Result<(PointConfig, PointConfig)> {
    if !(mu.is_finite() && mu > 0.0) {
        return invalid(format!("intensity must be positive, found {mu}"));
    }
    let base = MeanMeasure::uniform(d, geometry, mu)?;
    let z = sample_poisson_process(&base, rng)?;
    let xi = matern_thin(&z, r, geometry)?;
    Ok((z, xi))
}

/// Length of `[a - h, a + h] ∩ [0, 1]`.
fn clipped_len(a: f64, h: f64) -> f64 {
    ((a + h).min(1.0) - (a - h).max(0.0)).max(0.0)
}

const ARC_NODES: usize = 256;

/// `∫ inner(x, r cos(phi)) r cos(phi) dphi` over the chord `x = a + r sin(phi)`
/// restricted to `x ∈ [0, 1]`, by the midpoint rule in `phi`.
fn arc_integral(a: f64, r: f64, nodes: usize, mut inner: impl FnMut(f64, f64) -> f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let lo = ((0.0 - a) / r).clamp(-1.0, 1.0).asin();
    let hi = ((1.0 - a) / r).clamp(-1.0, 1.0).asin();
    if hi <= lo {
        return 0.0;
    }
    let h = (hi - lo) / nodes as f64;
    let mut acc = crate::special::KahanSum::new();
    for k in 0..nodes {
        let phi = lo + (k as f64 + 0.5) * h;
        let half = r * phi.cos();
        acc.add(inner(a + r * phi.sin(), half) * half * h);
    }
    acc.value()
}

/// `V(alpha, r)`: volume of the open ball `B(alpha, r)` inside the carrier.
///
/// On the torus this is `kappa_d r^d` (for `r <= 1/2`); in the box the ball is
/// intersected with `[0,1]^d`, exactly in one dimension and by quadrature over
/// the chord parameter otherwise.
pub fn matern_ball_volume(alpha: &[f64], r: f64, geometry: Geometry) -> Result<f64> {
    let d = alpha.len();
    let full = kappa(d)? * r.powi(d as i32);
    if geometry == Geometry::Torus {
        if r > 0.5 {
            return invalid("torus ball volumes are only closed-form for r <= 1/2");
        }
        return Ok(full);
    }
    if alpha.iter().all(|a| *a - r >= 0.0 && *a + r <= 1.0) {
        return Ok(full);
    }
    Ok(match d {
        1 => clipped_len(alpha[0], r),
        // chord in x0, clipped segment in x1
        2 => arc_integral(alpha[0], r, ARC_NODES, |_, half| clipped_len(alpha[1], half)),
        _ => arc_integral(alpha[0], r, 64, |_, rad| {
            arc_integral(alpha[1], rad, 64, |_, half| clipped_len(alpha[2], half))
        }),
    }
    .min(full))
}

/// Mean measure of the Matérn process: density `mu * exp(-mu V(alpha, r))`.
pub fn matern_mean_measure(mu: f64, r: f64, d: usize, geometry: Geometry, grid: usize) -> Result<MeanMeasure> {
    if grid < 32 {
        return invalid(format!("quadrature grid {grid} below the minimum of 32 per axis"));
    }
    if !(mu.is_finite() && mu > 0.0 && r.is_finite() && r >= 0.0) {
        return invalid("need mu > 0 and r >= 0");
    }
    kappa(d)?;
    if geometry == Geometry::Torus || r == 0.0 {
        let v = if r == 0.0 { 0.0 } else { matern_ball_volume(&vec![0.5; d], r, geometry)? };
        let value = mu * (-mu * v).exp();
        return MeanMeasure::density(d, geometry, grid, value, Arc::new(move |_| value));
    }
    // the smallest intersection volume sits at a corner
    let v_min = matern_ball_volume(&vec![0.0; d], r, geometry)?;
    let sup = mu * (-mu * v_min).exp();
    let mut mm = MeanMeasure::density(
        d,
        geometry,
        grid,
        sup * (1.0 + 1e-9),
        Arc::new(move |x| mu * (-mu * matern_ball_volume(x, r, Geometry::Box).unwrap_or(0.0)).exp()),
    )?;
    if let MeanMeasure::BoxDensity(b) = &mut mm {
        b.total_mass = matern_box_mass(mu, r, d)?;
    }
    Ok(mm)
}

/// `mu ∫ exp(-mu V(x, r)) dx` over the box.
///
/// Along each axis the clipped volume only varies within `r` of a face, so
/// the quadrature puts Gauss-Legendre panels on `[0, r]` (doubled by symmetry)
/// and a single node for the interior slab.
#[allow(clippy::excessive_precision)]
const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
#[allow(clippy::excessive_precision)]
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn matern_box_mass(mu: f64, r: f64, d: usize) -> Result<f64> {
    let axis: Vec<(f64, f64)> = if 2.0 * r < 1.0 {
        // composite 8-point Gauss-Legendre on [0, r], doubled by symmetry
        let panels = if d == 3 { 4 } else { 8 };
        let h = r / panels as f64;
        let mut nodes = Vec::with_capacity(8 * panels + 1);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (&t, &w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
                nodes.push((mid + 0.5 * h * t, h * w));
            }
        }
        nodes.push((0.5, 1.0 - 2.0 * r));
        nodes
    } else {
        let q = if d == 3 { 48 } else { 256 };
        (0..q).map(|k| ((k as f64 + 0.5) / q as f64, 1.0 / q as f64)).collect()
    };
    let mut acc = KahanSum::new();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = 1.0;
        for (k, &i) in idx.iter().enumerate() {
            x[k] = axis[i].0;
            w *= axis[i].1;
        }
        acc.add(w * (-mu * matern_ball_volume(&x, r, Geometry::Box)?).exp());
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < axis.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    Ok(mu * acc.value())
}
