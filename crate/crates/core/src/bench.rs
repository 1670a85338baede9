//! Noiseless black-box test functions with seeded instances.
//!
//! Twelve functions follow the usual BBOB raw definitions, two from each
//! class plus extras for the separable one:
//!
//! | id  | function                     |
//! |-----|------------------------------|
//! | 1   | sphere                       |
//! | 2   | separable ellipsoid          |
//! | 3   | separable Rastrigin          |
//! | 5   | linear slope                 |
//! | 6   | attractive sector            |
//! | 8   | Rosenbrock                   |
//! | 10  | rotated ellipsoid            |
//! | 12  | bent cigar                   |
//! | 15  | rotated Rastrigin            |
//! | 17  | Schaffer F7                  |
//! | 21  | Gallagher, 101 peaks         |
//! | 24  | Lunacek bi-Rastrigin         |
//!
//! Instances are generated from `(fid, iid, dim)` by this crate's own seeded
//! stream, so they do not coincide with COCO's instance tables.

use alloc::vec;
use alloc::vec::Vec;

use crate::engine::Objective;
use crate::linalg::Matrix;
use crate::rng::{mix_seed, RandomStream};
use crate::{Error, Result};

pub const IMPLEMENTED: [u32; 12] = [1, 2, 3, 5, 6, 8, 10, 12, 15, 17, 21, 24];
pub const DOMAIN: (f64, f64) = (-5.0, 5.0);

const GALLAGHER_PEAKS: usize = 101;
const LUNACEK_MU0: f64 = 2.5;

#[derive(Clone, Debug, PartialEq)]
struct Peaks {
    /// Peak centres already multiplied by the rotation.
    rotated_centres: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Per-peak diagonal scaling of the rotated coordinates.
    scales: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub function_id: u32,
    pub instance_id: u32,
    pub dim: usize,
    pub x_opt: Vec<f64>,
    pub f_opt: f64,
    rotation: Matrix,
    rotation2: Matrix,
    peaks: Option<Peaks>,
}

pub fn make_problem(fid: u32, iid: u32, dim: usize) -> Result<Problem> {
    if !IMPLEMENTED.contains(&fid) {
        return Err(Error::UnsupportedFunction {
            fid,
            available: IMPLEMENTED.to_vec(),
        });
    }
    if dim < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: dim,
        });
    }
    let mut rng = RandomStream::new(mix_seed(&[u64::from(fid), u64::from(iid), dim as u64]));
    let f_opt = libm::round(rng.range(-100.0, 100.0) * 100.0) / 100.0;
    let x_opt: Vec<f64> = match fid {
        5 => (0..dim).map(|_| if rng.uniform() < 0.5 { -5.0 } else { 5.0 }).collect(),
        8 => (0..dim).map(|_| rng.range(-3.0, 3.0)).collect(),
        24 => (0..dim)
            .map(|_| {
                if rng.uniform() < 0.5 {
                    -0.5 * LUNACEK_MU0
                } else {
                    0.5 * LUNACEK_MU0
                }
            })
            .collect(),
        _ => (0..dim).map(|_| rng.range(-4.0, 4.0)).collect(),
    };
    let rotation = Matrix::random_orthogonal(dim, &mut rng);
    let rotation2 = Matrix::random_orthogonal(dim, &mut rng);
    let peaks = (fid == 21).then(|| gallagher_peaks(&x_opt, &rotation, &mut rng));
    Ok(Problem {
        function_id: fid,
        instance_id: iid,
        dim,
        x_opt,
        f_opt,
        rotation,
        rotation2,
        peaks,
    })
}

fn gallagher_peaks(x_opt: &[f64], rotation: &Matrix, rng: &mut RandomStream) -> Peaks {
    let dim = x_opt.len();
    let mut centres = vec![x_opt.to_vec()];
    for _ in 1..GALLAGHER_PEAKS {
        centres.push((0..dim).map(|_| rng.range(-4.9, 4.9)).collect());
    }
    let mut weights = vec![10.0];
    for i in 2..=GALLAGHER_PEAKS {
        weights.push(1.1 + 8.0 * (i - 2) as f64 / (GALLAGHER_PEAKS - 2) as f64);
    }
    let mut exponents: Vec<usize> = (0..GALLAGHER_PEAKS - 1).collect();
    rng.shuffle(&mut exponents);
    let mut scales = Vec::with_capacity(GALLAGHER_PEAKS);
    for p in 0..GALLAGHER_PEAKS {
        let cond = if p == 0 {
            1000.0 * 1000.0
        } else {
            libm::pow(1000.0, 2.0 * exponents[p - 1] as f64 / (GALLAGHER_PEAKS - 2) as f64)
        };
        let mut diag: Vec<f64> = (0..dim)
            .map(|j| libm::pow(cond, 0.5 * j as f64 / (dim - 1) as f64) / libm::pow(cond, 0.25))
            .collect();
        rng.shuffle(&mut diag);
        scales.push(diag);
    }
    Peaks {
        rotated_centres: centres.iter().map(|c| rotation.mul_vec(c)).collect(),
        weights,
        scales,
    }
}

fn t_osz_scalar(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let xh = libm::log(libm::fabs(x));
    let (c1, c2) = if x > 0.0 { (10.0, 7.9) } else { (5.5, 3.1) };
    let mag = libm::exp(xh + 0.049 * (libm::sin(c1 * xh) + libm::sin(c2 * xh)));
    if x > 0.0 {
        mag
    } else {
        -mag
    }
}

fn t_osz(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = t_osz_scalar(*v);
    }
}

fn t_asy(x: &mut [f64], beta: f64) {
    let d = x.len();
    for (i, v) in x.iter_mut().enumerate() {
        if *v > 0.0 {
            *v = libm::pow(*v, 1.0 + beta * ratio(i, d) * libm::sqrt(*v));
        }
    }
}

fn ratio(i: usize, d: usize) -> f64 {
    if d <= 1 {
        0.0
    } else {
        i as f64 / (d - 1) as f64
    }
}

/// Multiplies by the diagonal conditioning matrix `alpha^(i / (2 (D-1)))`.
fn lambda(x: &mut [f64], alpha: f64) {
    let d = x.len();
    for (i, v) in x.iter_mut().enumerate() {
        *v *= libm::pow(alpha, 0.5 * ratio(i, d));
    }
}

fn penalty(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| {
            let over = libm::fabs(*v) - 5.0;
            if over > 0.0 {
                over * over
            } else {
                0.0
            }
        })
        .sum()
}

fn rastrigin(z: &[f64]) -> f64 {
    let d = z.len() as f64;
    let cos_sum: f64 = z.iter().map(|v| libm::cos(core::f64::consts::TAU * v)).sum();
    10.0 * (d - cos_sum) + z.iter().map(|v| v * v).sum::<f64>()
}

fn ellipsoid(z: &[f64]) -> f64 {
    let d = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| libm::pow(10.0, 6.0 * ratio(i, d)) * v * v)
        .sum()
}

impl Problem {
    /// Objective value at `x`; panics on a length mismatch.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.try_evaluate(x).expect("evaluate: dimension mismatch")
    }

    pub fn try_evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        Ok(self.f_opt + self.raw(x))
    }

    fn shifted(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.x_opt).map(|(a, b)| a - b).collect()
    }

    fn raw(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let r = &self.rotation;
        let q = &self.rotation2;
        match self.function_id {
            1 => self.shifted(x).iter().map(|v| v * v).sum(),
            2 => {
                let mut z = self.shifted(x);
                t_osz(&mut z);
                ellipsoid(&z)
            }
            3 => {
                let mut z = self.shifted(x);
                t_osz(&mut z);
                t_asy(&mut z, 0.2);
                lambda(&mut z, 10.0);
                rastrigin(&z)
            }
            5 => x
                .iter()
                .zip(&self.x_opt)
                .enumerate()
                .map(|(i, (&xi, &oi))| {
                    let s = oi.signum() * libm::pow(10.0, ratio(i, d));
                    let z = if oi * xi < 25.0 { xi } else { oi };
                    5.0 * libm::fabs(s) - s * z
                })
                .sum(),
            6 => {
                let mut z = r.mul_vec(&self.shifted(x));
                lambda(&mut z, 10.0);
                let z = q.mul_vec(&z);
                let s: f64 = z
                    .iter()
                    .zip(&self.x_opt)
                    .map(|(zi, oi)| {
                        let w = if zi * oi > 0.0 { 100.0 } else { 1.0 };
                        (w * zi) * (w * zi)
                    })
                    .sum();
                libm::pow(t_osz_scalar(s), 0.9)
            }
            8 => {
                let scale = (libm::sqrt(d as f64) / 8.0).max(1.0);
                let z: Vec<f64> = self.shifted(x).iter().map(|v| scale * v + 1.0).collect();
                z.windows(2)
                    .map(|w| {
                        let a = w[0] * w[0] - w[1];
                        let b = w[0] - 1.0;
                        100.0 * a * a + b * b
                    })
                    .sum()
            }
            10 => {
                let mut z = r.mul_vec(&self.shifted(x));
                t_osz(&mut z);
                ellipsoid(&z)
            }
            12 => {
                let mut z = r.mul_vec(&self.shifted(x));
                t_asy(&mut z, 0.5);
                let z = r.mul_vec(&z);
                z[0] * z[0] + 1e6 * z[1..].iter().map(|v| v * v).sum::<f64>()
            }
            15 => {
                let mut z = r.mul_vec(&self.shifted(x));
                t_osz(&mut z);
                t_asy(&mut z, 0.2);
                let mut z = q.mul_vec(&z);
                lambda(&mut z, 10.0);
                rastrigin(&r.mul_vec(&z))
            }
            17 => {
                let mut z = r.mul_vec(&self.shifted(x));
                t_asy(&mut z, 0.5);
                let mut z = q.mul_vec(&z);
                lambda(&mut z, 10.0);
                let mean = z
                    .windows(2)
                    .map(|w| {
                        let s = libm::sqrt(w[0] * w[0] + w[1] * w[1]);
                        let root = libm::sqrt(s);
                        let sine = libm::sin(50.0 * libm::pow(s, 0.2));
                        root + root * sine * sine
                    })
                    .sum::<f64>()
                    / (d - 1) as f64;
                mean * mean + 10.0 * penalty(x)
            }
            21 => {
                let peaks = self.peaks.as_ref().expect("gallagher peaks");
                let rx = r.mul_vec(x);
                let mut best = 0.0f64;
                for ((centre, w), scale) in peaks.rotated_centres.iter().zip(&peaks.weights).zip(&peaks.scales) {
                    let quad: f64 = rx
                        .iter()
                        .zip(centre)
                        .zip(scale)
                        .map(|((a, c), s)| s * (a - c) * (a - c))
                        .sum();
                    best = best.max(w * libm::exp(-quad / (2.0 * d as f64)));
                }
                let v = t_osz_scalar(10.0 - best);
                v * v + penalty(x)
            }
            24 => {
                let df = d as f64;
                let s = 1.0 - 1.0 / (2.0 * libm::sqrt(df + 20.0) - 8.2);
                let mu1 = -libm::sqrt((LUNACEK_MU0 * LUNACEK_MU0 - 1.0) / s);
                let xh: Vec<f64> = x
                    .iter()
                    .zip(&self.x_opt)
                    .map(|(xi, oi)| 2.0 * oi.signum() * xi)
                    .collect();
                let near: f64 = xh.iter().map(|v| (v - LUNACEK_MU0) * (v - LUNACEK_MU0)).sum();
                let far: f64 = df + s * xh.iter().map(|v| (v - mu1) * (v - mu1)).sum::<f64>();
                let mut z = r.mul_vec(&xh.iter().map(|v| v - LUNACEK_MU0).collect::<Vec<_>>());
                lambda(&mut z, 100.0);
                let z = q.mul_vec(&z);
                let cos_sum: f64 = z.iter().map(|v| libm::cos(core::f64::consts::TAU * v)).sum();
                near.min(far) + 10.0 * (df - cos_sum) + 1e4 * penalty(x)
            }
            _ => unreachable!("fid checked at construction"),
        }
    }
}

impl Objective for Problem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn bounds(&self) -> (f64, f64) {
        DOMAIN
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        Problem::evaluate(self, x)
    }

    fn optimum(&self) -> Option<f64> {
        Some(self.f_opt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instances_are_deterministic_and_distinct() {
        let a = make_problem(1, 7, 20).unwrap();
        assert_eq!(a, make_problem(1, 7, 20).unwrap());
        assert_ne!(a.x_opt, make_problem(1, 8, 20).unwrap().x_opt);
    }

    #[test]
    fn optimum_value_at_optimum() {
        for fid in IMPLEMENTED {
            for dim in [2, 5, 10] {
                let p = make_problem(fid, 1, dim).unwrap();
                assert!((p.evaluate(&p.x_opt) - p.f_opt).abs() < 1e-9, "f{fid} dim {dim}");
                assert!(p.x_opt.iter().all(|v| (-5.0..=5.0).contains(v)));
            }
        }
        let s = make_problem(1, 3, 4).unwrap();
        assert_eq!(s.evaluate(&s.x_opt), s.f_opt);
    }

    #[test]
    fn sphere_unit_step() {
        let p = make_problem(1, 2, 6).unwrap();
        let mut x = p.x_opt.clone();
        x[3] += 1.0;
        assert!((p.evaluate(&x) - p.f_opt - 1.0).abs() < 1e-12);
    }

    // raw ellipsoid at axis points: weights 10^(6 i / (D-1)) times the
    // oscillated unit step, identical for both axes
    #[test]
    fn ellipsoid_conditioning() {
        let p = make_problem(2, 1, 10).unwrap();
        let mut first = p.x_opt.clone();
        first[0] += 1.0;
        let mut last = p.x_opt.clone();
        last[9] += 1.0;
        let ratio = (p.evaluate(&last) - p.f_opt) / (p.evaluate(&first) - p.f_opt);
        assert!((ratio - 1e6).abs() < 1e-6 * 1e6, "{ratio}");
    }

    #[test]
    fn unsupported_function_lists_available() {
        assert_eq!(
            make_problem(4, 1, 5),
            Err(Error::UnsupportedFunction {
                fid: 4,
                available: IMPLEMENTED.to_vec()
            })
        );
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = make_problem(1, 1, 3).unwrap();
        assert_eq!(
            p.try_evaluate(&[0.0; 2]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        );
    }

    #[test]
    fn rotations_preserve_norm() {
        let p = make_problem(10, 4, 12).unwrap();
        let mut rng = RandomStream::new(9);
        for _ in 0..100 {
            let z: Vec<f64> = (0..12).map(|_| rng.normal()).collect();
            let n0: f64 = z.iter().map(|v| v * v).sum::<f64>();
            for m in [&p.rotation, &p.rotation2] {
                let n1: f64 = m.mul_vec(&z).iter().map(|v| v * v).sum::<f64>();
                assert!((libm::sqrt(n0) - libm::sqrt(n1)).abs() < 1e-9);
            }
        }
    }
}
