mod common;

use sdnn::radixnet::{
    self, deepen, kronecker_expand, mixed_radix_butterfly, GeneratorConfig, KroneckerSpec,
    RadixSpec,
};

use common::path_counts;

/// Every ordered radix list (entries >= 2) whose product is at most `limit`.
fn radix_specs(limit: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, product: usize, limit: usize, out: &mut Vec<Vec<usize>>) {
        for r in 2..=limit / product {
            prefix.push(r);
            out.push(prefix.clone());
            extend(prefix, product * r, limit, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::new(), 1, limit, &mut out);
    out
}

fn is_constant(counts: &[u64]) -> bool {
    counts.iter().all(|&c| c == counts[0] && c > 0)
}

#[test]
fn two_stage_product_is_all_ones() {
    let stages = mixed_radix_butterfly(&RadixSpec::new(vec![2, 2]).unwrap()).unwrap();
    assert_eq!(path_counts(&stages), vec![1; 16]);
}

#[test]
fn every_small_butterfly_has_one_path_per_pair() {
    let specs = radix_specs(64);
    assert!(specs.len() > 300);
    for radices in specs {
        let stages = mixed_radix_butterfly(&RadixSpec::new(radices.clone()).unwrap()).unwrap();
        for (s, &r) in stages.iter().zip(&radices) {
            let n = s.n_rows();
            assert!((0..n).all(|i| s.row_nnz(i) == r), "{radices:?}");
            assert!(s.col_nnz().iter().all(|&c| c == r), "{radices:?}");
        }
        assert!(path_counts(&stages).iter().all(|&c| c == 1), "{radices:?}");
    }
}

#[test]
fn deepening_keeps_path_counts_constant() {
    for radices in [
        vec![2, 2],
        vec![2, 2, 2],
        vec![3, 2],
        vec![2, 3, 2],
        vec![4, 4],
    ] {
        let base = mixed_radix_butterfly(&RadixSpec::new(radices.clone()).unwrap()).unwrap();
        for seed in [1, 2, 3] {
            let deep = deepen(&base, base.len() * 3, seed).unwrap();
            assert!(is_constant(&path_counts(&deep)), "{radices:?} seed {seed}");
        }
    }
}

#[test]
fn degree_regularity_and_density_for_challenge_sizes() {
    for (neurons, depth, density) in [(1024usize, 6, 0.03125), (4096, 8, 0.0078125)] {
        let cfg = GeneratorConfig::challenge(neurons, depth, 9).unwrap();
        let model = radixnet::generate(&cfg).unwrap();
        for layer in model.layers() {
            let w = &layer.weights;
            assert!((0..neurons).all(|r| w.row_nnz(r) == 32));
            assert!(w.col_nnz().iter().all(|&c| c == 32));
            assert_eq!(w.nnz() as f64 / (neurons * neurons) as f64, density);
        }
    }
}

#[test]
fn generation_is_seed_deterministic() {
    let cfg = GeneratorConfig::challenge(1024, 12, 42).unwrap();
    let a = radixnet::generate(&cfg).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| radixnet::generate(&cfg).unwrap());
    assert_eq!(a, b);
    let other = radixnet::generate(&GeneratorConfig::challenge(1024, 12, 43).unwrap()).unwrap();
    assert_ne!(a, other);
}

#[test]
fn one_hundred_twenty_layers_of_1024() {
    let base = kronecker_expand(
        &mixed_radix_butterfly(&RadixSpec::new(vec![2; 6]).unwrap()).unwrap(),
        16,
    )
    .unwrap();
    let deep = deepen(&base, 120, 5).unwrap();
    assert_eq!(deep.len(), 120);
    assert!(deep.iter().all(|l| (0..1024).all(|r| l.row_nnz(r) == 32)));
}

#[test]
fn custom_config_uses_explicit_bias() {
    let cfg = GeneratorConfig {
        radix: RadixSpec::new(vec![2, 3]).unwrap(),
        kron: KroneckerSpec::uniform(2, 3).unwrap(),
        target_layers: 4,
        weight_value: 0.25,
        rng_seed: 1,
        bias: Some(-0.1),
    };
    let model = radixnet::generate(&cfg).unwrap();
    assert_eq!(model.neurons(), 12);
    assert!(model.layers().iter().all(|l| l.bias == -0.1));
    let mut no_bias = cfg.clone();
    no_bias.bias = None;
    assert!(radixnet::generate(&no_bias).is_err());
}
