//! HTTP transport speaking the OpenAI-compatible wire protocol against any
//! base URL (api.openai.com, Ollama, vLLM, ...).

use std::time::Duration;

use serde_json::{json, Value};

use super::{ChatRequest, Transport, TransportError};

pub struct OpenAiCompatible {
    http: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
}

impl OpenAiCompatible {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .expect("default reqwest client");
        OpenAiCompatible {
            http,
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
        }
    }

    fn post(&self, path: &str, body: &Value) -> Result<Value, TransportError> {
        let url = format!("{}/{}", self.base_url, path);
        let mut request = self.http.post(&url).json(body);
        if let Some(key) = &self.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| TransportError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .text()
            .map_err(|e| TransportError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            let mut body = text;
            body.truncate(500);
            return Err(TransportError::HttpStatus { status, body });
        }
        serde_json::from_str(&text).map_err(|e| TransportError::Malformed(e.to_string()))
    }
}

impl Transport for OpenAiCompatible {
    fn send_chat(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = serde_json::to_value(request)
            .map_err(|e| TransportError::Malformed(e.to_string()))?;
        let value = self.post("chat/completions", &body)?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| {
                TransportError::Malformed("missing choices[0].message.content".into())
            })
    }

    fn send_embeddings(
        &self,
        model: &str,
        inputs: &[String],
    ) -> Result<Vec<Vec<f64>>, TransportError> {
        let body = json!({ "model": model, "input": inputs });
        let value = self.post("embeddings", &body)?;
        let data = value["data"]
            .as_array()
            .ok_or_else(|| TransportError::Malformed("missing data array".into()))?;

        // Order by the index field; some servers do not guarantee input order.
        let mut vectors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(data.len());
        for (fallback_idx, item) in data.iter().enumerate() {
            let idx = item["index"].as_u64().map(|v| v as usize).unwrap_or(fallback_idx);
            let embedding = item["embedding"]
                .as_array()
                .ok_or_else(|| TransportError::Malformed("missing embedding array".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| TransportError::Malformed("non-numeric embedding".into()))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            vectors.push((idx, embedding));
        }
        vectors.sort_by_key(|(idx, _)| *idx);
        Ok(vectors.into_iter().map(|(_, v)| v).collect())
    }

    fn name(&self) -> &'static str {
        "openai_compatible"
    }
}
