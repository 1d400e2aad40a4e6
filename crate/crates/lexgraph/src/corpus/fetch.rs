//! Remote document fetch for extending a corpus with cited cases.
//!
//! Issues `GET {endpoint}/doc/{id}` with `Authorization: Token {token}` per
//! id, over a small worker pool, with bounded retry on transient failures.
//! Missing documents are collected rather than fatal; authorization failures
//! abort the whole fetch.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use thiserror::Error;

use super::CaseDoc;

#[derive(Clone, Debug)]
pub struct FetchConfig {
    /// Attempts per document, including the first.
    pub attempts: u32,
    /// Initial backoff; doubles per retry.
    pub backoff: Duration,
    /// Concurrent requests.
    pub concurrency: usize,
    /// Per-request timeout.
    pub timeout: Duration,
}

impl Default for FetchConfig {
    fn default() -> Self {
        FetchConfig {
            attempts: 3,
            backoff: Duration::from_secs(1),
            concurrency: 4,
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("authorization rejected (HTTP {0})")]
    Auth(u16),
    #[error("token must be nonempty")]
    EmptyToken,
}

/// Why a document could not be fetched.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FetchMiss {
    pub id: String,
    pub reason: String,
}

/// Successfully fetched documents (in input-id order) plus the miss list.
#[derive(Debug, Default)]
pub struct FetchOutcome {
    pub docs: Vec<CaseDoc>,
    pub misses: Vec<FetchMiss>,
}

enum Fetched {
    Doc(Box<CaseDoc>),
    Miss(String),
}

/// Fetch documents by id from a remote document API.
pub fn fetch_remote(
    endpoint: &str,
    token: &str,
    ids: &[String],
    config: &FetchConfig,
) -> Result<FetchOutcome, FetchError> {
    if token.is_empty() {
        return Err(FetchError::EmptyToken);
    }
    if ids.is_empty() {
        return Ok(FetchOutcome::default());
    }

    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(config.timeout))
        .http_status_as_error(true)
        .build()
        .into();

    let endpoint = endpoint.trim_end_matches('/');
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Fetched>>> = Mutex::new((0..ids.len()).map(|_| None).collect());
    let fatal: Mutex<Option<FetchError>> = Mutex::new(None);
    let workers = config.concurrency.max(1).min(ids.len());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= ids.len() || fatal.lock().unwrap().is_some() {
                    return;
                }
                let url = format!("{endpoint}/doc/{}", ids[idx]);
                match fetch_one(&agent, &url, token, config) {
                    Ok(fetched) => {
                        slots.lock().unwrap()[idx] = Some(fetched);
                    }
                    Err(err) => {
                        let mut guard = fatal.lock().unwrap();
                        if guard.is_none() {
                            *guard = Some(err);
                        }
                        return;
                    }
                }
            });
        }
    });

    if let Some(err) = fatal.into_inner().unwrap() {
        return Err(err);
    }

    let mut outcome = FetchOutcome::default();
    for (id, slot) in ids.iter().zip(slots.into_inner().unwrap()) {
        match slot {
            Some(Fetched::Doc(doc)) => outcome.docs.push(*doc),
            Some(Fetched::Miss(reason)) => outcome.misses.push(FetchMiss {
                id: id.clone(),
                reason,
            }),
            None => outcome.misses.push(FetchMiss {
                id: id.clone(),
                reason: "aborted".into(),
            }),
        }
    }
    Ok(outcome)
}

fn fetch_one(
    agent: &ureq::Agent,
    url: &str,
    token: &str,
    config: &FetchConfig,
) -> Result<Fetched, FetchError> {
    let mut last_reason = String::new();
    for attempt in 0..config.attempts.max(1) {
        if attempt > 0 {
            std::thread::sleep(config.backoff * 2u32.pow(attempt - 1));
        }
        let result = agent
            .get(url)
            .header("Authorization", &format!("Token {token}"))
            .call();
        match result {
            Ok(mut response) => {
                return match response.body_mut().read_json::<CaseDoc>() {
                    Ok(doc) => Ok(Fetched::Doc(Box::new(doc))),
                    Err(e) => Ok(Fetched::Miss(format!("invalid document body: {e}"))),
                };
            }
            Err(ureq::Error::StatusCode(code)) if code == 401 || code == 403 => {
                return Err(FetchError::Auth(code));
            }
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                last_reason = format!("HTTP {code}");
            }
            Err(ureq::Error::StatusCode(code)) => {
                // Definitive client-side miss (404 and friends): no retry.
                return Ok(Fetched::Miss(format!("HTTP {code}")));
            }
            Err(e) => {
                last_reason = e.to_string();
            }
        }
    }
    Ok(Fetched::Miss(last_reason))
}
