use adaptprune::analysis::{aggregate_attention, AttentionAggregate};
use adaptprune::grid::TokenGrid;
use adaptprune::synth::{bias_field, bias_peak, corpus_rng, generate, Preset};
use adaptprune::GridDims;

fn biased_corpus(count: u64, dims: GridDims) -> Vec<TokenGrid<f64>> {
    (0..count)
        .map(|i| generate(Preset::Biased, dims, 4, &mut corpus_rng(42, i)).unwrap())
        .collect()
}

#[test]
fn recovers_the_bias_field() {
    let dims = GridDims::new(24, 24);
    let corpus = biased_corpus(1000, dims);
    let agg = aggregate_attention(corpus.iter()).unwrap();
    assert_eq!(agg.sample_count, 1000);
    assert_eq!(agg.argmax(), dims.raster_index(bias_peak(dims)));

    let field = bias_field(dims);
    let se = agg.standard_error();
    let z: Vec<f64> = agg
        .mean_scores
        .iter()
        .zip(&field)
        .zip(&se)
        .map(|((m, f), s)| (m - f).abs() / s)
        .collect();
    let within3 = z.iter().filter(|&&z| z <= 3.0).count();
    let worst = z.iter().cloned().fold(0.0, f64::max);
    println!(
        "{within3} of {} positions within 3 SE, worst {worst:.2} SE",
        z.len()
    );
    assert!(within3 as f64 >= 0.99 * z.len() as f64);
    assert!(worst <= 5.0);
}

#[test]
fn mean_is_linear_and_order_independent() {
    let dims = GridDims::new(7, 5);
    let corpus = biased_corpus(60, dims);
    let forward = aggregate_attention(corpus.iter()).unwrap();
    let backward = aggregate_attention(corpus.iter().rev()).unwrap();

    let mut halves = aggregate_attention(corpus[..25].iter()).unwrap();
    halves
        .merge(&aggregate_attention(corpus[25..].iter()).unwrap())
        .unwrap();

    for k in 0..dims.cells() {
        let exact = corpus.iter().map(|g| g.scores()[k]).sum::<f64>() / corpus.len() as f64;
        for agg in [&forward, &backward, &halves] {
            assert!((agg.mean_scores[k] - exact).abs() <= 1e-9 * exact.abs());
        }
    }
}

#[test]
fn mismatched_dims_are_rejected() {
    let a = biased_corpus(1, GridDims::new(4, 4));
    let b = biased_corpus(1, GridDims::new(4, 5));
    let mut agg = AttentionAggregate::new(GridDims::new(4, 4));
    agg.add(&a[0]).unwrap();
    assert!(agg.add(&b[0]).is_err());
    assert!(aggregate_attention(a.iter().chain(b.iter())).is_err());
}
