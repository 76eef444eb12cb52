//! Scoring service: configuration, the MediaWiki API client and the HTTP
//! front end (`POST /score`, `GET /healthz`, `GET /modelinfo`).

pub mod config;
pub mod http;
pub mod mediawiki;

use std::future::Future;

use thiserror::Error;
use tokio::net::TcpListener;

pub use config::{AppConfig, ConfigError, ServiceConfig, ServiceOverrides, UpstreamConfig};
pub use http::{router, serve, AppState, InlineRequest, ModelInfo, ScoreRequest, ScoreResponse};
pub use mediawiki::{FetchError, FetchedRevision, MediaWikiClient};

use crate::entity::{EntityError, LabelMap};
use crate::pipeline::{ModelBundle, PipelineError, RevisionScorer};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] PipelineError),
    #[error(transparent)]
    Labels(#[from] EntityError),
    #[error(transparent)]
    Fetch(#[from] FetchError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Loads both models and the label map once, for the lifetime of the server.
pub fn load_scorer(config: &ServiceConfig) -> Result<RevisionScorer, ServiceError> {
    config.validate()?;
    let bundle = ModelBundle::load(&config.content_model, &config.final_model)?;
    let labels = LabelMap::load_tsv(&config.labels)?;
    Ok(RevisionScorer::new(bundle, labels)?)
}

/// Validates the configuration, loads models, binds and serves until
/// `shutdown` resolves.
pub async fn run(config: &ServiceConfig, shutdown: impl Future<Output = ()> + Send + 'static) -> Result<(), ServiceError> {
    let scorer = load_scorer(config)?;
    let state = AppState::from_config(scorer, config)?;
    let listener = TcpListener::bind(config.listen).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    serve(listener, router(state, config.max_body_bytes), shutdown).await?;
    Ok(())
}
