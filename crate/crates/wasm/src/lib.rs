//! JS bindings for the browser demo. Every call takes and returns strings;
//! structured results are JSON.

pub mod demo;

use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(js_err)
}

/// Engine over the bundled demo corpus.
#[wasm_bindgen]
pub struct SearchDemo {
    inner: demo::Demo,
}

#[wasm_bindgen]
impl SearchDemo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Result<SearchDemo, JsError> {
        demo::Demo::bundled().map(|inner| SearchDemo { inner }).map_err(js_err)
    }

    pub fn documents(&self) -> usize {
        self.inner.documents()
    }

    pub fn search(&self, query: &str, n: usize, mu: f64, rrf_k: f64) -> Result<String, JsError> {
        to_json(&self.inner.search(query, n, mu, rrf_k).map_err(js_err)?)
    }
}

#[wasm_bindgen]
pub fn evaluate(qrels: &str, run: &str, ndcg_variant: &str, bpref_variant: &str) -> Result<String, JsError> {
    to_json(&demo::evaluate(qrels, run, ndcg_variant, bpref_variant).map_err(js_err)?)
}

#[wasm_bindgen]
pub fn fuse(list_c: &str, list_b: &str, k: f64) -> Result<String, JsError> {
    to_json(&demo::fuse(list_c, list_b, k).map_err(js_err)?)
}
