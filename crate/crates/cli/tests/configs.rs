use std::collections::BTreeSet;
use std::path::Path;

use serde_json::Value;
use thermofrac_cli::config::{self, AnalysisBlock, Tolerances};

fn root() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../.."))
}

fn keys(v: &Value) -> BTreeSet<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

#[test]
fn shipped_configs_build() {
    let mut seen = 0;
    for entry in std::fs::read_dir(root().join("configs")).unwrap() {
        let path = entry.unwrap().path();
        let c = config::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        c.build().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 3);
}

#[test]
fn schema_tracks_config_structs() {
    let text = std::fs::read_to_string(root().join("schemas/run-config.schema.json")).unwrap();
    let schema: Value = serde_json::from_str(&text).unwrap();
    let props = &schema["properties"];
    assert_eq!(
        keys(props),
        ["analysis", "driving", "maps", "name", "output", "potential", "system"].map(String::from).into()
    );
    let analysis = serde_json::to_value(AnalysisBlock::default()).unwrap();
    assert_eq!(keys(&props["analysis"]["properties"]), keys(&analysis));
    let tolerances = serde_json::to_value(Tolerances::default()).unwrap();
    assert_eq!(keys(&props["analysis"]["properties"]["tolerances"]["properties"]), keys(&tolerances));
    // defaults in the schema match the code
    for (k, v) in tolerances.as_object().unwrap() {
        assert_eq!(&props["analysis"]["properties"]["tolerances"]["properties"][k]["default"], v, "{k}");
    }
}
