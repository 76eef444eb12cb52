use revertrisk::evaluation::auc;
use revertrisk::pipeline::{run_pipeline, PipelineConfig, RULE_BASED};
use revertrisk::synthetic::{generate_corpus, SyntheticConfig};

#[test]
fn synthetic_pipeline_orders_systems() {
    let corpus = generate_corpus(&SyntheticConfig::default());
    let start = std::time::Instant::now();
    let out = run_pipeline(corpus.records(), &corpus.labels, &PipelineConfig::default().with_seed(7)).unwrap();
    for (name, data) in &out.holdout {
        eprintln!("{name}: auc {:.4} n {} pos {}", auc(data).unwrap(), data.len(), data.positives());
    }
    eprintln!("{:?} {:?} {:?}", out.prepared.filter_report, out.content_report, start.elapsed());
    let a = |k: &str| auc(&out.holdout[k]).unwrap();
    assert!(a("full") > a("metadata_only").max(a("content_only")) + 0.01);
    assert!(a("metadata_only").min(a("content_only")) > a(RULE_BASED));
}
