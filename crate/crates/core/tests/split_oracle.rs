mod common;

use common::{flat_model, max_rel_diff, random_batch, rows, LoopMlp};
use fieldsplit::split::{
    analytic_gradients, build_split_model, client_batch_seed, client_forward, finite_diff_check, synthetic_clusters,
    train, BatchSchedule, FederationConfig, ModelSpec,
};

#[test]
fn split_step_matches_monolithic_step() {
    for (sizes, splits) in [(vec![2, 8, 8, 3], vec![1, 2]), (vec![2, 8, 8, 8, 3], vec![1, 2, 3])] {
        for split in splits {
            for seed in 0..5 {
                let mut m = build_split_model(&sizes, split, seed).unwrap();
                let mut oracle = LoopMlp::from_split(&m);
                let (x, y) = random_batch(16, 2, 3, 100 + seed);
                let a = m.step(&x, &y, 0.05).unwrap();
                let b = oracle.sgd_step(&rows(&x), &y, 0.05);
                assert!((a - b).abs() <= 1e-12 * b.abs(), "loss {a} vs {b}");
                let diff = max_rel_diff(&flat_model(&m), &oracle.flat(), 1e-12);
                assert!(diff < 1e-9, "sizes {sizes:?} split {split} seed {seed}: {diff}");
            }
        }
    }
}

#[test]
fn analytic_gradients_match_oracle() {
    let m = build_split_model(&[3, 6, 5, 4], 1, 9).unwrap();
    let (x, y) = random_batch(7, 3, 4, 1);
    let (loss, g) = analytic_gradients(&m, &x, &y).unwrap();
    let (oloss, gw, gb) = LoopMlp::from_split(&m).grads(&rows(&x), &y);
    let mut flat = Vec::new();
    for (w, b) in gw.iter().zip(&gb) {
        for r in w {
            flat.extend(r);
        }
        flat.extend(b);
    }
    assert!((loss - oloss).abs() < 1e-12);
    assert!(max_rel_diff(&g, &flat, 1e-9) < 1e-9);
}

#[test]
fn smashed_data_is_the_cut_activation() {
    for split in 1..=3 {
        let m = build_split_model(&[4, 7, 6, 5, 3], split, 21).unwrap();
        let oracle = LoopMlp::from_split(&m);
        let (x, _) = random_batch(5, 4, 3, 2);
        let (smashed, _) = client_forward(&m.client, &x).unwrap();
        assert_eq!(smashed.ncols(), [4, 7, 6, 5, 3][split]);
        for (row, xr) in smashed.rows().into_iter().zip(rows(&x)) {
            let want = oracle.activation_after(&xr, split);
            assert!(max_rel_diff(&row.to_vec(), &want, 1e-12) < 1e-12);
        }
    }
}

#[test]
fn single_client_training_follows_plain_sgd() {
    let mut fed = FederationConfig::default();
    fed.clients = 1;
    fed.global_rounds = 3;
    fed.local_rounds = 4;
    fed.batch_size = 16;
    fed.dataset.train_per_class = 10;
    let spec = ModelSpec::new(vec![4, 10, 10, 12], 2);
    let (trace, _) = train(&spec, &fed).unwrap();

    let (data, _) = synthetic_clusters(&fed.dataset).unwrap();
    let init = build_split_model(&spec.layer_sizes, spec.split_index, fed.seed).unwrap();
    let mut oracle = LoopMlp::from_split(&init);
    let mut schedule = BatchSchedule::new(data.len(), fed.batch_size, client_batch_seed(fed.seed, 0));
    let all = rows(&data.features);
    for (step, &loss) in trace.step_losses.iter().enumerate() {
        let idx = schedule.next_batch();
        let xs: Vec<Vec<f64>> = idx.iter().map(|&i| all[i].clone()).collect();
        let ys: Vec<usize> = idx.iter().map(|&i| data.labels[i]).collect();
        let want = oracle.sgd_step(&xs, &ys, fed.learning_rate);
        assert!((loss - want).abs() <= 1e-9 * want.abs(), "step {step}: {loss} vs {want}");
    }
}

#[test]
fn gradient_check_on_random_cases() {
    let mut worst: f64 = 0.0;
    for case in 0..50u64 {
        let sizes = [vec![2, 8, 8, 3], vec![3, 5, 4, 6, 4], vec![4, 6, 12]][case as usize % 3].clone();
        let split = 1 + case as usize % (sizes.len() - 2);
        let m = build_split_model(&sizes, split, case).unwrap();
        let (x, y) = random_batch(6, sizes[0], *sizes.last().unwrap(), 1000 + case);
        worst = worst.max(finite_diff_check(&m, &x, &y, 1e-6).unwrap());
    }
    assert!(worst < 1e-5, "{worst}");
}
