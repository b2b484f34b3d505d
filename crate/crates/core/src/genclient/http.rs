use std::env;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde_json::{json, Value};

use super::GenError;

/// Chat-completions style HTTP backend.
pub struct HttpBackend {
    pub endpoint: String,
    pub model_name: String,
    /// Name of the environment variable holding the bearer token.
    pub auth_token_env: Option<String>,
    pub timeout: Duration,
    pub temperature: f64,
    client: reqwest::blocking::Client,
    slots: Mutex<usize>,
    freed: Condvar,
}

impl HttpBackend {
    pub fn new(
        endpoint: &str,
        model_name: &str,
        auth_token_env: Option<String>,
        timeout: Duration,
        max_concurrent: usize,
    ) -> Result<Self, GenError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| GenError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            endpoint: endpoint.to_string(),
            model_name: model_name.to_string(),
            auth_token_env,
            timeout,
            temperature: 0.2,
            client,
            slots: Mutex::new(max_concurrent.max(1)),
            freed: Condvar::new(),
        })
    }

    pub fn complete(&self, prompt: &str) -> Result<String, GenError> {
        {
            let mut free = self.slots.lock().unwrap();
            while *free == 0 {
                free = self.freed.wait(free).unwrap();
            }
            *free -= 1;
        }
        let result = self.post(prompt);
        *self.slots.lock().unwrap() += 1;
        self.freed.notify_one();
        result
    }

    fn post(&self, prompt: &str) -> Result<String, GenError> {
        let body = json!({
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [{"role": "user", "content": prompt}],
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(var) = &self.auth_token_env {
            let token = env::var(var)
                .map_err(|_| GenError::Transport(format!("environment variable {var} is not set")))?;
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(map_err)?;
        let status = resp.status();
        if !status.is_success() {
            return Err(GenError::Transport(format!("HTTP {status}")));
        }
        let v: Value = resp.json().map_err(map_err)?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| GenError::Transport("response lacks choices[0].message.content".into()))
    }
}

fn map_err(e: reqwest::Error) -> GenError {
    if e.is_timeout() {
        GenError::Timeout
    } else {
        GenError::Transport(e.to_string())
    }
}
