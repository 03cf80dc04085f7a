mod support;

use std::collections::BTreeSet;

use proptest::prelude::*;

use dataflow_core::io::{load_model, save_model};
use support::oracle::{random_model, GenLimits};

fn collect_ids<'a>(value: &'a serde_json::Value, path: &str, out: &mut Vec<(String, &'a str)>) {
    match value {
        serde_json::Value::Object(map) => {
            if let Some(serde_json::Value::String(id)) = map.get("id") {
                out.push((path.to_string(), id));
            }
            for (k, v) in map {
                collect_ids(v, &format!("{path}.{k}"), out);
            }
        }
        serde_json::Value::Array(items) => items.iter().for_each(|v| collect_ids(v, path, out)),
        _ => {}
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn load_after_save_is_identity(seed in any::<u64>()) {
        let model = random_model(seed, GenLimits::default());
        let text = save_model(&model);
        let loaded = load_model(text.as_bytes()).unwrap();
        prop_assert_eq!(&loaded, &model);
        prop_assert_eq!(save_model(&loaded), text);
    }

    #[test]
    fn saved_ids_are_unique(seed in any::<u64>()) {
        let model = random_model(seed, GenLimits::default());
        let value: serde_json::Value = serde_json::from_str(&save_model(&model)).unwrap();
        let mut ids = Vec::new();
        collect_ids(&value, "", &mut ids);
        // Labels are scoped by their type in the model but still need unique ids.
        let unique: BTreeSet<&str> = ids.iter().map(|(_, id)| *id).collect();
        prop_assert_eq!(unique.len(), ids.len());
    }
}
