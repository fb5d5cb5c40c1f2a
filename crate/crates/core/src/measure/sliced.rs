use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::stochastic::RandomStream;

use super::EmpiricalMeasure;

/// Exact W₁ between two uniform-weight samples on the line: `∫|F_a - F_b|`.
/// Sorts its inputs in place.
pub fn w1_1d(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_unstable_by(f64::total_cmp);
    b.sort_unstable_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    if na == nb {
        return a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).sum::<f64>() / na as f64;
    }
    let (wa, wb) = (1.0 / na as f64, 1.0 / nb as f64);
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last = a[0].min(b[0]);
    let mut acc = 0.0;
    while i < na || j < nb {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        acc += (fa - fb).abs() * (next - last);
        last = next;
        while i < na && a[i] == next {
            fa += wa;
            i += 1;
        }
        while j < nb && b[j] == next {
            fb += wb;
            j += 1;
        }
    }
    acc
}

/// Mean over `n_projections` uniformly random directions of the 1-D W₁
/// between the projected clouds.
pub fn w1_sliced(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    n_projections: usize,
    stream: &mut RandomStream,
) -> Result<f64> {
    if n_projections == 0 {
        return Err(Error::InvalidArgument("w1_sliced needs at least one projection".into()));
    }
    let mut pa = vec![0.0; mu.len()];
    let mut pb = vec![0.0; nu.len()];
    let mut acc = 0.0;
    for _ in 0..n_projections {
        let (s, c) = (std::f64::consts::TAU * stream.uniform()).sin_cos();
        let theta = Vec2::new(c, s);
        for (d, p) in pa.iter_mut().zip(&mu.points) {
            *d = p.dot(theta);
        }
        for (d, p) in pb.iter_mut().zip(&nu.points) {
            *d = p.dot(theta);
        }
        acc += w1_1d(&mut pa, &mut pb);
    }
    Ok(acc / n_projections as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{stream, EntityClass, StreamKey};

    #[test]
    fn one_dimensional_cases() {
        assert_eq!(w1_1d(&mut [0.0, 1.0], &mut [1.0, 0.0]), 0.0);
        assert!((w1_1d(&mut [0.0], &mut [0.0, 2.0]) - 1.0).abs() < 1e-15);
        // {0,0,3} vs {1}: mean |x - 1| = (1+1+2)/3.
        assert!((w1_1d(&mut [0.0, 3.0, 0.0], &mut [1.0]) - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn translate_converges_to_mean_abs_cos() {
        let mu = EmpiricalMeasure::new(vec![Vec2::ZERO]).unwrap();
        let c = Vec2::new(3.0, 4.0);
        let nu = EmpiricalMeasure::new(vec![c]).unwrap();
        let mut s = stream(StreamKey::new(5, EntityClass::SlicedW1, 0, 0));
        let v = w1_sliced(&mu, &nu, 10_000, &mut s).unwrap();
        let expect = 2.0 / std::f64::consts::PI * 5.0;
        assert!((v - expect).abs() < 0.02 * expect, "{v} vs {expect}");
        assert!(v <= 5.0);
    }

    #[test]
    fn symmetric_and_zero_on_identical() {
        let pts: Vec<Vec2> = (0..20).map(|i| Vec2::new(i as f64 * 0.37 % 1.3, (i * i) as f64 % 2.1)).collect();
        let mu = EmpiricalMeasure::new(pts.clone()).unwrap();
        let nu = EmpiricalMeasure::new(pts.iter().map(|p| *p * 1.1).collect()).unwrap();
        let key = StreamKey::new(1, EntityClass::SlicedW1, 0, 0);
        assert_eq!(w1_sliced(&mu, &mu, 50, &mut stream(key)).unwrap(), 0.0);
        let ab = w1_sliced(&mu, &nu, 50, &mut stream(key)).unwrap();
        let ba = w1_sliced(&nu, &mu, 50, &mut stream(key)).unwrap();
        assert_eq!(ab, ba);
    }
}
