//! Seeded random points for checks and experiments.

use fibrenorm::fibword::Word;
use fibrenorm::golden::{mod1, GoldenRational};
use fibrenorm::metric::{dist_to_k, DistanceResult, Point, Tail, DEFAULT_CAP};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_word<R: Rng>(rng: &mut R, min: usize, max: usize) -> Word {
    let len = rng.gen_range(min..=max);
    Word::new((0..len).map(|_| rng.gen_range(0..2u8)).collect()).expect("binary symbols")
}

/// A short random prefix followed by a ρ, periodic or rotation tail.
pub fn random_point<R: Rng>(rng: &mut R) -> Point {
    let prefix = random_word(rng, 1, 10);
    let tail = match rng.gen_range(0..3) {
        0 => Tail::Rho {
            offset: rng.gen_range(0..50),
        },
        1 => Tail::Periodic(random_word(rng, 1, 4)),
        _ => {
            let a = BigRational::new(rng.gen_range(-20i64..20).into(), rng.gen_range(1i64..15).into());
            let b = BigRational::new(rng.gen_range(-20i64..20).into(), rng.gen_range(1i64..15).into());
            Tail::k(mod1(&GoldenRational::new(a, b)))
        }
    };
    Point::with_prefix(prefix, tail)
}

/// `count` random points at positive distance from K.
pub fn seeded_points(seed: u64, count: usize) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_point(&mut rng);
        if matches!(dist_to_k(&x, DEFAULT_CAP), DistanceResult::Finite(_)) {
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible() {
        assert_eq!(seeded_points(7, 10), seeded_points(7, 10));
        assert_ne!(seeded_points(7, 10), seeded_points(8, 10));
    }
}
