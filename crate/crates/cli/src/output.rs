//! CSV and JSON rendering with a leading metadata block.

use serde_json::{Map, Value};

use crate::config::RunConfig;

/// Version, command, configuration hash and every hashed parameter.
pub fn metadata(cfg: &RunConfig) -> Vec<(String, String)> {
    let mut meta = vec![
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("command".to_string(), cfg.command.name().to_string()),
        ("config_hash".to_string(), cfg.hash()),
    ];
    meta.extend(cfg.params.iter().map(|(k, v)| (k.clone(), v.clone())));
    meta
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Metadata as `# key=value` lines, then a header and the rows.
pub fn csv(meta: &[(String, String)], header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s.push_str(&header.join(","));
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    s
}

/// `{"metadata": {...}, <body fields>}` with keys in sorted order.
pub fn json(meta: &[(String, String)], body: Value) -> String {
    let mut root = Map::new();
    let m: Map<String, Value> = meta
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    root.insert("metadata".into(), Value::Object(m));
    if let Value::Object(fields) = body {
        root.extend(fields);
    }
    let mut s = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    s.push('\n');
    s
}
