//! Read-only client for the MediaWiki action API: revision content, editor
//! details and entity labels. Responses are cached and requests are spaced to
//! a configured rate.

use std::collections::{HashMap, VecDeque};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;
use tokio::time::Instant;

use super::config::UpstreamConfig;
use crate::corpus::EditorInfo;
use crate::entity::{Identifier, LabelMap};
use crate::pipeline::RevisionMetadata;

/// Entities per `wbgetentities` call; the API maximum for anonymous clients.
const LABEL_BATCH: usize = 50;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FetchError {
    #[error("revision {0} not found")]
    NotFound(u64),
    #[error("rate limited by upstream")]
    RateLimited { retry_after: Option<Duration> },
    #[error("upstream error: {0}")]
    UpstreamError(String),
}

impl FetchError {
    pub fn is_retriable(&self) -> bool {
        !matches!(self, FetchError::NotFound(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FetchedRevision {
    /// `None` for a page creation.
    pub parent: Option<Value>,
    pub current: Value,
    pub metadata: RevisionMetadata,
    pub tags: Vec<String>,
}

struct RevisionCache {
    capacity: usize,
    map: HashMap<u64, Arc<FetchedRevision>>,
    order: VecDeque<u64>,
}

impl RevisionCache {
    fn get(&self, id: u64) -> Option<Arc<FetchedRevision>> {
        self.map.get(&id).cloned()
    }

    fn put(&mut self, id: u64, rev: Arc<FetchedRevision>) {
        if self.capacity == 0 || self.map.insert(id, rev).is_some() {
            return;
        }
        self.order.push_back(id);
        while self.order.len() > self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.map.remove(&old);
            }
        }
    }
}

struct RawRevision {
    revid: u64,
    parentid: u64,
    timestamp: DateTime<Utc>,
    user: Option<String>,
    anon: bool,
    tags: Vec<String>,
    content: Value,
}

pub struct MediaWikiClient {
    http: reqwest::Client,
    base_url: String,
    min_interval: Duration,
    next_slot: tokio::sync::Mutex<Instant>,
    cache: Mutex<RevisionCache>,
    labels: Mutex<HashMap<Identifier, Option<String>>>,
    requests: AtomicU64,
}

fn upstream(e: impl std::fmt::Display) -> FetchError {
    FetchError::UpstreamError(e.to_string())
}

impl MediaWikiClient {
    pub fn new(config: &UpstreamConfig) -> Result<Self, FetchError> {
        let http = reqwest::Client::builder()
            .user_agent(config.user_agent.clone())
            .timeout(Duration::from_millis(config.timeout_ms))
            .build()
            .map_err(upstream)?;
        Ok(Self {
            http,
            base_url: config.base_url.clone(),
            min_interval: Duration::from_secs_f64(1.0 / config.requests_per_second),
            next_slot: tokio::sync::Mutex::new(Instant::now()),
            cache: Mutex::new(RevisionCache {
                capacity: config.cache_capacity,
                map: HashMap::new(),
                order: VecDeque::new(),
            }),
            labels: Mutex::new(HashMap::new()),
            requests: AtomicU64::new(0),
        })
    }

    /// Requests sent upstream so far.
    pub fn upstream_requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    async fn wait_for_slot(&self) {
        let mut slot = self.next_slot.lock().await;
        let now = Instant::now();
        let start = (*slot).max(now);
        *slot = start + self.min_interval;
        drop(slot);
        tokio::time::sleep_until(start).await;
    }

    async fn get(&self, params: &[(&str, &str)]) -> Result<Value, FetchError> {
        self.wait_for_slot().await;
        self.requests.fetch_add(1, Ordering::Relaxed);
        let response = self
            .http
            .get(&self.base_url)
            .query(params)
            .query(&[("format", "json"), ("formatversion", "2"), ("maxlag", "5")])
            .send()
            .await
            .map_err(upstream)?;
        let status = response.status();
        if status == reqwest::StatusCode::TOO_MANY_REQUESTS {
            let retry_after = response
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.parse().ok())
                .map(Duration::from_secs);
            return Err(FetchError::RateLimited { retry_after });
        }
        if !status.is_success() {
            return Err(FetchError::UpstreamError(format!("HTTP {status}")));
        }
        let body: Value = response.json().await.map_err(upstream)?;
        if let Some(err) = body.get("error") {
            let code = err.get("code").and_then(Value::as_str).unwrap_or("unknown");
            return Err(match code {
                "ratelimited" | "maxlag" => FetchError::RateLimited { retry_after: None },
                _ => FetchError::UpstreamError(format!(
                    "{code}: {}",
                    err.get("info").and_then(Value::as_str).unwrap_or("")
                )),
            });
        }
        Ok(body)
    }

    async fn raw_revision(&self, id: u64) -> Result<RawRevision, FetchError> {
        let revid = id.to_string();
        let body = self
            .get(&[
                ("action", "query"),
                ("prop", "revisions"),
                ("revids", &revid),
                ("rvprop", "ids|timestamp|user|flags|tags|content"),
                ("rvslots", "main"),
            ])
            .await?;
        let query = body.get("query").ok_or_else(|| upstream("response has no `query`"))?;
        if query.get("badrevids").is_some() {
            return Err(FetchError::NotFound(id));
        }
        let rev = query
            .pointer("/pages/0/revisions/0")
            .ok_or(FetchError::NotFound(id))?;
        let content = rev
            .pointer("/slots/main/content")
            .and_then(Value::as_str)
            .ok_or_else(|| upstream(format!("revision {id} has no readable content")))?;
        let timestamp = rev
            .get("timestamp")
            .and_then(Value::as_str)
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| upstream(format!("revision {id} has no timestamp")))?;
        Ok(RawRevision {
            revid: rev.get("revid").and_then(Value::as_u64).unwrap_or(id),
            parentid: rev.get("parentid").and_then(Value::as_u64).unwrap_or(0),
            timestamp,
            user: rev.get("user").and_then(Value::as_str).map(str::to_owned),
            anon: rev.get("anon").and_then(Value::as_bool).unwrap_or(false),
            tags: rev
                .get("tags")
                .and_then(Value::as_array)
                .map(|t| t.iter().filter_map(Value::as_str).map(str::to_owned).collect())
                .unwrap_or_default(),
            content: serde_json::from_str(content).map_err(upstream)?,
        })
    }

    /// Registration time and edit count of a named account. The edit count
    /// is the current one, not the count at the time of the revision.
    async fn editor(&self, name: &str) -> Result<EditorInfo, FetchError> {
        let body = self
            .get(&[
                ("action", "query"),
                ("list", "users"),
                ("ususers", name),
                ("usprop", "registration|editcount|groups"),
            ])
            .await?;
        let user = body
            .pointer("/query/users/0")
            .ok_or_else(|| upstream(format!("no user record for {name}")))?;
        if user.get("missing").is_some() {
            return Err(upstream(format!("user {name} does not exist")));
        }
        // Accounts from before registration dates were logged report none.
        let registration = user
            .get("registration")
            .and_then(Value::as_str)
            .and_then(|t| t.parse().ok())
            .unwrap_or(DateTime::UNIX_EPOCH);
        let mut info = EditorInfo::registered(
            name,
            registration,
            user.get("editcount").and_then(Value::as_u64).unwrap_or(0),
        );
        info.groups = user
            .get("groups")
            .and_then(Value::as_array)
            .map(|g| g.iter().filter_map(Value::as_str).map(str::to_owned).collect())
            .unwrap_or_default();
        Ok(info)
    }

    /// Both revision bodies and the metadata needed for scoring. Cached by
    /// revision id.
    pub async fn fetch_revision_content(&self, revision_id: u64) -> Result<Arc<FetchedRevision>, FetchError> {
        if let Some(hit) = self.cache.lock().expect("cache lock").get(revision_id) {
            return Ok(hit);
        }
        let current = self.raw_revision(revision_id).await?;
        let parent = match current.parentid {
            0 => None,
            p => Some(self.raw_revision(p).await?),
        };
        let editor = match (&current.user, current.anon) {
            (Some(name), false) => self.editor(name).await?,
            _ => EditorInfo::anonymous(),
        };
        let fetched = Arc::new(FetchedRevision {
            metadata: RevisionMetadata {
                revision_id: Some(current.revid),
                timestamp: current.timestamp,
                editor,
                previous_timestamp: parent.as_ref().map(|p| p.timestamp),
            },
            parent: parent.map(|p| p.content),
            current: current.content,
            tags: current.tags,
        });
        self.cache.lock().expect("cache lock").put(revision_id, fetched.clone());
        Ok(fetched)
    }

    /// English labels for `ids`, fetching only those not seen before.
    /// Ids without an English label are absent from the result.
    pub async fn fetch_labels(&self, ids: &[Identifier]) -> Result<LabelMap, FetchError> {
        let missing: Vec<Identifier> = {
            let known = self.labels.lock().expect("label lock");
            ids.iter().filter(|id| !known.contains_key(id)).cloned().collect()
        };
        for batch in missing.chunks(LABEL_BATCH) {
            let joined = batch.iter().map(|id| id.to_string()).collect::<Vec<_>>().join("|");
            let body = self
                .get(&[
                    ("action", "wbgetentities"),
                    ("ids", &joined),
                    ("props", "labels"),
                    ("languages", "en"),
                ])
                .await?;
            let mut known = self.labels.lock().expect("label lock");
            for id in batch {
                let label = body
                    .pointer(&format!("/entities/{id}/labels/en/value"))
                    .and_then(Value::as_str)
                    .map(str::to_owned);
                known.insert(*id, label);
            }
        }
        let known = self.labels.lock().expect("label lock");
        Ok(ids
            .iter()
            .filter_map(|id| known.get(id).cloned().flatten().map(|l| (*id, l)))
            .collect())
    }
}
