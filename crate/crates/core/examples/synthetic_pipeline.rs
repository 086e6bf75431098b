//! Clusters, augments and trains on a generated graph, then prints elector
//! label quality and baseline versus augmented GCN accuracy.
//!
//! `cargo run --release --example synthetic_pipeline -- [seed] [min_cluster_size]`

use elco_core::analysis::dominating_label;
use elco_core::gnn::{train_gcn, TrainConfig};
use elco_core::synthetic::{generate, SyntheticConfig};
use elco_core::{elco_augment, overlapping_clusters, AugmentConfig, ClusterConfig, ElectorLabel};

fn main() -> elco_core::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let min_cluster_size: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);

    let (g, splits) = generate(&SyntheticConfig {
        seed,
        ..Default::default()
    })?;
    let cluster_config = ClusterConfig {
        min_cluster_size,
        ..Default::default()
    };
    let clusters = overlapping_clusters(&g, &cluster_config, seed)?;
    let aug = elco_augment(&g, &splits, &clusters, &AugmentConfig::default())?;
    let (observed, predicted, unlabeled) = aug.label_counts();
    println!(
        "{} nodes, {} edges, {} clusters; electors observed {observed}, predicted {predicted}, unlabeled {unlabeled}",
        g.num_nodes(),
        g.num_edges(),
        clusters.len()
    );

    // agreement of assigned elector labels with the cluster's ground-truth majority
    let (mut right, mut total) = ([0usize; 2], [0usize; 2]);
    for e in &aug.electors {
        let slot = match e.label {
            ElectorLabel::Observed(_) => 0,
            ElectorLabel::Predicted { .. } => 1,
            ElectorLabel::Unlabeled => continue,
        };
        let truth = dominating_label(clusters.cluster(e.cluster), g.labels()).map(|(c, _, _)| c);
        total[slot] += 1;
        right[slot] += usize::from(e.label.class() == truth);
    }
    println!(
        "label agreement: observed {}/{}, predicted {}/{}",
        right[0], total[0], right[1], total[1]
    );

    let train = TrainConfig {
        max_epochs: 1000,
        patience: 200,
        ..Default::default()
    };
    for trial in 0..3 {
        let config = TrainConfig { seed: trial, ..train };
        let base = train_gcn(&g, &splits, &config)?;
        let elco = train_gcn(&aug.graph, &aug.splits, &config)?;
        println!("trial {trial}: GCN {:.3}, ELCO-GCN {:.3}", base.test_acc, elco.test_acc);
    }
    Ok(())
}
