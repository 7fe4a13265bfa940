use afgcl::eval::{evaluate, Metric};
use afgcl::graph::{load_dataset, synthesize, write_dataset, Dataset, SyntheticConfig};
use afgcl::model::{checkpoint, forward, init_params, LayerDims, Mode};
use afgcl::training::{embed, prepare, train, TrainConfig};
use approx::assert_abs_diff_eq;
use ndarray::Array2;

fn small() -> Dataset {
    synthesize(&SyntheticConfig::binary(150, 12, 3.0, 0.9, 9)).unwrap()
}

#[test]
fn dataset_survives_disk() {
    let data = small();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(&data, dir.path()).unwrap();
    let back = load_dataset(dir.path().join("graph.txt"), dir.path().join("features.csv"), dir.path().join("labels.txt")).unwrap();
    assert_eq!(back.graph, data.graph);
    assert_eq!(back.labels, data.labels);
    assert_eq!(back.features, data.features);
}

#[test]
fn checkpointed_model_embeds_identically() {
    let data = small();
    let config = TrainConfig { epochs: 3, embed_dim: 8, hidden_dim: 8, ..TrainConfig::default() };
    let outcome = train(&data, &config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ckpt.bin");
    checkpoint::save(&outcome.params, &path).unwrap();
    let loaded = checkpoint::load(&path).unwrap();
    let (a, _) = embed(&outcome.params, &data, Mode::Train).unwrap();
    let (b, _) = embed(&loaded, &data, Mode::Train).unwrap();
    assert_eq!(a, b);
    let r = evaluate(&b, &data.labels, 2, Metric::Accuracy, None, 3, 0).unwrap();
    assert!(r.mean > 0.5);
}

#[test]
fn relabeling_nodes_permutes_embeddings() {
    let data = small();
    let n = data.num_nodes();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let graph = data.graph.permuted(&perm).unwrap();
    let mut features = Array2::zeros(data.features.dim());
    for (i, &p) in perm.iter().enumerate() {
        features.row_mut(p).assign(&data.features.row(i));
    }
    let params = init_params(4, LayerDims::new(12, 16, 8, 8)).unwrap();
    for mode in [Mode::Train, Mode::Linear] {
        let (prop, x) = prepare(&data);
        let (h, z, _) = forward(&params, &prop, &x, mode).unwrap();
        let permuted = Dataset::new(graph.clone(), features.clone(), vec![0; n]).unwrap();
        let (prop_p, x_p) = prepare(&permuted);
        let (hp, zp, _) = forward(&params, &prop_p, &x_p, mode).unwrap();
        for (i, &p) in perm.iter().enumerate() {
            for (a, b) in h.row(i).iter().zip(hp.row(p)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            for (a, b) in z.row(i).iter().zip(zp.row(p)) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
        }
    }
}
