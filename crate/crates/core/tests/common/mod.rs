#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use revertrisk::entity::LabelMap;
use revertrisk::pipeline::{run_pipeline, ModelBundle, PipelineConfig};
use revertrisk::synthetic::{generate_corpus, SyntheticConfig};
use serde_json::{json, Value};

/// Models trained once per test binary on a small synthetic corpus.
pub fn trained() -> &'static (ModelBundle, LabelMap) {
    static MODELS: OnceLock<(ModelBundle, LabelMap)> = OnceLock::new();
    MODELS.get_or_init(|| {
        let corpus = generate_corpus(&SyntheticConfig {
            n_revisions: 6000,
            n_entities: 300,
            ..Default::default()
        });
        let config = PipelineConfig::default().with_seed(11);
        let out = run_pipeline(corpus.records(), &corpus.labels, &config).expect("pipeline");
        let bundle = out
            .bundle(revertrisk::classifiers::FeatureSet::Full, &config.graph2text)
            .expect("full model");
        let mut labels = corpus.labels.clone();
        for (id, label) in anthem_labels().iter() {
            labels.insert(*id, label);
        }
        (bundle, labels)
    })
}

pub fn anthem_labels() -> LabelMap {
    [("Q219", "Bulgaria"), ("P85", "anthem"), ("Q207843", "Mila Rodino"), ("Q30588468", "Despacito")]
        .into_iter()
        .map(|(id, l)| (id.parse().unwrap(), l.to_owned()))
        .collect()
}

pub fn bulgaria(id: &str, anthem: &str) -> Value {
    json!({
        "id": id,
        "labels": {"en": {"language": "en", "value": "Bulgaria"}},
        "claims": {"P85": [{"mainsnak": {"snaktype": "value", "property": "P85",
            "datavalue": {"type": "wikibase-entityid", "value": {"id": anthem}}}}]}
    })
}

/// An anonymous editor replacing the anthem of Bulgaria with a pop song.
pub fn anthem_request() -> Value {
    json!({
        "parent": bulgaria("Q219", "Q207843"),
        "current": bulgaria("Q219", "Q30588468"),
        "metadata": {
            "revision_id": 1002,
            "timestamp": "2023-03-01T12:00:00Z",
            "editor": {"editor_id": null, "is_anonymous": true, "registration_time": null},
            "previous_timestamp": "2023-02-27T08:00:00Z"
        }
    })
}

/// Writes content model, final model and label map into `dir`.
pub fn write_models(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let (bundle, labels) = trained();
    let content = dir.join("content.json");
    let final_model = dir.join("final.json");
    let label_path = dir.join("labels.tsv");
    bundle.save(&content, &final_model).unwrap();
    labels.write_tsv(std::fs::File::create(&label_path).unwrap()).unwrap();
    (content, final_model, label_path)
}
