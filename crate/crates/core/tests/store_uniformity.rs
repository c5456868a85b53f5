use mpir::store::{generate_store, ProblemParams};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn symbols_are_uniform_over_seeds() {
    let params = ProblemParams::new(3, 1, 2, 5, 4).unwrap();
    let mut pooled = [0u64; 5];
    let mut first = [0u64; 5];
    for seed in 0..10_000 {
        let s = generate_store(&params, seed);
        first[s.message(0)[0] as usize] += 1;
        for m in 0..3 {
            for &v in s.message(m) {
                pooled[v as usize] += 1;
            }
        }
    }
    assert!(chi_square_p(&pooled) > 0.01, "{pooled:?}");
    assert!(chi_square_p(&first) > 0.01, "{first:?}");
}

#[test]
fn interleaver_positions_are_uniform() {
    let params = ProblemParams::new(2, 1, 2, 3, 6).unwrap();
    let mut counts = [0u64; 6];
    for seed in 0..10_000 {
        counts[generate_store(&params, seed).interleavers().position(1, 0)] += 1;
    }
    assert!(chi_square_p(&counts) > 0.01, "{counts:?}");
}

#[test]
fn replicas_are_identical() {
    let params = ProblemParams::new(4, 2, 3, 7, 9).unwrap();
    let text = generate_store(&params, 12).to_text();
    assert_eq!(generate_store(&params, 12).to_text(), text);
    assert_eq!(mpir::store::MessageStore::from_text(&text).unwrap().to_text(), text);
}
