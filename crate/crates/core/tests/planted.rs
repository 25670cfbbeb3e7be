use recc_core::pipeline::{run_on_graph, RunConfig};
use recc_core::synthetic::hub_and_leaves;
use recc_core::trainer::LossMask;

fn config(seed: u64, mask: LossMask) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.train.seed = seed;
    cfg.train.loss_mask = mask;
    cfg
}

#[test]
fn hubs_recovered_for_several_seeds() {
    let (g, y) = hub_and_leaves(8, 15);
    for seed in 0..5 {
        let out = run_on_graph(&g, Some(&y), &config(seed, LossMask::BOTH)).unwrap();
        let e = out.eval.unwrap();
        eprintln!("seed {seed}: {e:?} t={:?}", out.timings);
        assert_eq!((e.acc, e.nmi, e.ari), (1.0, 1.0, 1.0), "seed {seed}");
        assert_eq!(out.predicted[..8], [1; 8]);
    }
}

#[test]
fn ablations_finish_with_finite_losses_and_full_loss_is_best() {
    let (g, y) = hub_and_leaves(8, 15);
    let full = run_on_graph(&g, Some(&y), &config(0, LossMask::BOTH)).unwrap().eval.unwrap().acc;
    for mask in [LossMask::CON_ONLY, LossMask::KL_ONLY] {
        let out = run_on_graph(&g, Some(&y), &config(0, mask)).unwrap();
        assert!(out.history.finetune.iter().all(|r| r.l_con.is_finite() && r.l_kl.is_finite()));
        assert!(full >= out.eval.unwrap().acc);
    }
}

#[test]
fn losses_descend_early() {
    let (g, y) = hub_and_leaves(8, 15);
    let out = run_on_graph(&g, Some(&y), &config(1, LossMask::BOTH)).unwrap();
    let pre = &out.history.pretrain;
    assert!(pre[19].l_re < pre[0].l_re);
    assert!(out.history.finetune.iter().all(|r| r.total.is_finite()));
}

#[test]
fn same_seed_same_run() {
    let (g, y) = hub_and_leaves(4, 6);
    let a = run_on_graph(&g, Some(&y), &config(9, LossMask::BOTH)).unwrap();
    let b = run_on_graph(&g, Some(&y), &config(9, LossMask::BOTH)).unwrap();
    assert_eq!(a.embeddings, b.embeddings);
    assert_eq!(a.predicted, b.predicted);
    let strip = |h: &recc_core::TrainHistory| h.finetune.iter().map(|r| (r.l_con, r.l_kl)).collect::<Vec<_>>();
    assert_eq!(strip(&a.history), strip(&b.history));
}
