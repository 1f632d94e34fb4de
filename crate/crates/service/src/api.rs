use std::str::FromStr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use checkworthy_core::eval::rank;
use checkworthy_core::{Error as CoreError, Language, Source};
use serde::{Deserialize, Serialize};

use crate::session::{Lookup, SessionRecord};
use crate::AppState;

/// Five equal-width bins over [0, 1]; 1.0 lands in the top bin.
pub fn color_bin(score: f64) -> u8 {
    (score * 5.0).floor().clamp(0.0, 4.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SortMode {
    Position,
    Score,
}

impl FromStr for SortMode {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "position" => Ok(SortMode::Position),
            "score" => Ok(SortMode::Score),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct AnalyzeRequest {
    pub text: String,
    #[serde(default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredSentence {
    pub index: usize,
    pub text: String,
    pub score: f64,
    pub color_bin: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeResponse {
    pub session_id: String,
    pub language: Language,
    pub source: Source,
    pub sort: SortMode,
    pub sentences: Vec<ScoredSentence>,
}

#[derive(Debug, Deserialize)]
struct ViewQuery {
    source: Option<String>,
    sort: Option<String>,
}

enum ApiError {
    BadRequest(String),
    UnknownSession,
    ExpiredSession,
    ModelNotLoaded,
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::UnknownSession => (StatusCode::NOT_FOUND, "unknown_session", "no such session".into()),
            ApiError::ExpiredSession => (StatusCode::GONE, "expired_session", "session expired; submit the text again".into()),
            ApiError::ModelNotLoaded => (StatusCode::SERVICE_UNAVAILABLE, "model_not_loaded", "no model loaded".into()),
            ApiError::Internal(m) => {
                log::error!("{m}");
                (StatusCode::INTERNAL_SERVER_ERROR, "internal", m)
            }
        };
        (status, Json(serde_json::json!({ "error": kind, "message": message }))).into_response()
    }
}

fn parse_source(raw: Option<&str>) -> Result<Source, ApiError> {
    match raw {
        None => Ok(Source::Any),
        Some(s) => s.parse().map_err(|_| ApiError::BadRequest(format!("unknown source {s:?}"))),
    }
}

fn parse_sort(raw: Option<&str>) -> Result<SortMode, ApiError> {
    match raw {
        None => Ok(SortMode::Position),
        Some(s) => s.parse().map_err(|_| ApiError::BadRequest(format!("unknown sort {s:?}; use score or position"))),
    }
}

/// Builds a view from the cached matrix. Never featurizes.
fn view(record: &SessionRecord, source: Source, sort: SortMode) -> Result<AnalyzeResponse, ApiError> {
    let row = record
        .scores
        .row(source)
        .map_err(|_| ApiError::BadRequest(format!("model has no scores for {source}")))?;
    let order: Vec<usize> = match sort {
        SortMode::Position => (0..row.len()).collect(),
        SortMode::Score => rank(row).map_err(|e| ApiError::Internal(e.to_string()))?.indices(),
    };
    let sentences = order
        .into_iter()
        .map(|i| ScoredSentence {
            index: record.sentences[i].index,
            text: record.sentences[i].text.clone(),
            score: row[i],
            color_bin: color_bin(row[i]),
        })
        .collect();
    Ok(AnalyzeResponse {
        session_id: record.id.clone(),
        language: record.language,
        source,
        sort,
        sentences,
    })
}

async fn analyze(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<AnalyzeResponse>, ApiError> {
    let req: AnalyzeRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::BadRequest(format!("invalid request body: {e}")))?;
    let source = parse_source(req.source.as_deref())?;
    if req.text.trim().is_empty() {
        return Err(ApiError::BadRequest("text is empty".into()));
    }
    if req.text.len() > state.max_bytes {
        return Err(ApiError::BadRequest(format!(
            "text is {} bytes; the limit is {}",
            req.text.len(),
            state.max_bytes
        )));
    }
    let scorer = state.scorer.clone().ok_or(ApiError::ModelNotLoaded)?;
    let analysis = tokio::task::spawn_blocking(move || scorer.analyze(&req.text))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))?
        .map_err(|e| match e {
            CoreError::EmptyInput => ApiError::BadRequest("text has no sentences to score".into()),
            e => ApiError::Internal(e.to_string()),
        })?;
    let record = state.sessions.insert(analysis.language, analysis.sentences, analysis.scores);
    Ok(Json(view(&record, source, SortMode::Position)?))
}

async fn reorder(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> Result<Json<AnalyzeResponse>, ApiError> {
    let source = parse_source(q.source.as_deref())?;
    let sort = parse_sort(q.sort.as_deref())?;
    match state.sessions.get(&id) {
        Lookup::Live(record) => Ok(Json(view(&record, source, sort)?)),
        Lookup::Expired => Err(ApiError::ExpiredSession),
        Lookup::Unknown => Err(ApiError::UnknownSession),
    }
}

async fn sources() -> Json<Vec<&'static str>> {
    Json(Source::ALL.iter().map(|s| s.as_str()).collect())
}

pub(crate) fn routes(state: Arc<AppState>) -> Router {
    // JSON escaping can blow text up to six bytes per input byte.
    let body_limit = state.max_bytes.saturating_mul(6).saturating_add(4096);
    Router::new()
        .route("/api/analyze", post(analyze).layer(DefaultBodyLimit::max(body_limit)))
        .route("/api/analyze/{id}", get(reorder))
        .route("/api/sources", get(sources))
        .with_state(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn color_bins() {
        assert_eq!(color_bin(0.83), 4);
        assert_eq!(color_bin(0.0), 0);
        assert_eq!(color_bin(0.1999), 0);
        assert_eq!(color_bin(0.2), 1);
        assert_eq!(color_bin(0.79), 3);
        assert_eq!(color_bin(1.0), 4);
    }

    #[test]
    fn color_bin_matches_interval_membership() {
        // bin b covers [b/5, (b+1)/5), with 1.0 folded into the last bin
        for i in 0..=1000 {
            let s = i as f64 / 1000.0;
            let b = color_bin(s);
            let lo = f64::from(b) / 5.0;
            let hi = f64::from(b + 1) / 5.0;
            assert!(s >= lo - 1e-12 && (s < hi || b == 4), "{s} -> {b}");
        }
    }

    #[test]
    fn sort_mode_parse() {
        assert_eq!("score".parse::<SortMode>(), Ok(SortMode::Score));
        assert_eq!("position".parse::<SortMode>(), Ok(SortMode::Position));
        assert!("Score".parse::<SortMode>().is_err());
    }
}
