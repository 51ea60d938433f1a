use fibrenorm::fibword::{inverse_substitute, Word};
use fibrenorm::golden::{mod1, GoldenRational, Side};
use fibrenorm::metric::{accidents, dist_to_k, DistanceResult, Point, Tail, DEFAULT_CAP};
use fibrenorm::renorm::DensitySpec;
use fibrenorm::thermo::general_potential_pressure;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_k_point(rng: &mut ChaCha8Rng) -> Point {
    let a = BigRational::new(rng.gen_range(-40i64..40).into(), rng.gen_range(1i64..30).into());
    let b = BigRational::new(rng.gen_range(-40i64..40).into(), rng.gen_range(1i64..30).into());
    let side = if rng.gen() { Side::Left } else { Side::Right };
    Point::with_prefix(Word::empty(), Tail::k_sided(mod1(&GoldenRational::new(a, b)), side))
}

fn random_point(rng: &mut ChaCha8Rng) -> Point {
    let len = rng.gen_range(1..12);
    let prefix = Word::new((0..len).map(|_| rng.gen_range(0..2u8)).collect()).unwrap();
    let tail = if rng.gen() {
        Tail::Rho {
            offset: rng.gen_range(0..40),
        }
    } else {
        let len = rng.gen_range(1..5);
        Tail::Periodic(Word::new((0..len).map(|_| rng.gen_range(0..2u8)).collect()).unwrap())
    };
    Point::with_prefix(prefix, tail)
}

#[test]
fn substitution_keeps_k_and_desubstitutes_back() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let x = random_k_point(&mut rng);
        let y = x.substitute();
        assert_eq!(dist_to_k(&y, DEFAULT_CAP), DistanceResult::Infinite, "H({x}) left K");
        assert_eq!(y.first_symbol(), 0);
        let p = y.take(200);
        let cut = p.symbols().iter().rposition(|&a| a == 0).unwrap();
        let back = inverse_substitute(&p.slice(0, cut)).unwrap();
        assert_eq!(back, x.take(back.len()), "desubstitution of H({x})");
    }
}

#[test]
fn distance_drops_by_one_between_accidents() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 60 {
        let x = random_point(&mut rng);
        let DistanceResult::Finite(_) = dist_to_k(&x, DEFAULT_CAP) else {
            continue;
        };
        checked += 1;
        let horizon = 30;
        let hits = accidents(&x, horizon, DEFAULT_CAP).unwrap();
        let mut cur = x.clone();
        for j in 1..=horizon {
            let before = dist_to_k(&cur, DEFAULT_CAP);
            cur = cur.shift();
            let after = dist_to_k(&cur, DEFAULT_CAP);
            if let (DistanceResult::Finite(p), DistanceResult::Finite(d)) = (before, after) {
                if !hits.contains(&j) {
                    assert_eq!(d + 1, p, "shift {j} of {x}");
                }
            }
        }
    }
}

#[test]
fn general_potential_freezes_past_onset_bound() {
    let density = DensitySpec::DepthTable {
        depth: 2,
        table: vec![1.5, 1.0, 2.0, 1.25],
    };
    let grid: Vec<f64> = (0..=16).map(|i| 0.5 * i as f64).collect();
    let g = general_potential_pressure(&density, &grid, 20, 1e-6).unwrap();
    assert_eq!(g.kappa, 1.0);
    assert!(g.onset_bound < 8.0);
    assert!(g.plateau_verified);
    assert!(g.samples[0].pressure > 0.6);
    assert!(g.samples.windows(2).all(|w| w[1].pressure <= w[0].pressure));
}
