use std::collections::HashMap;

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};

use crate::error::ApiError;
use crate::federation::LOCAL_ONLY;
use crate::views::{self, parse_id, DownloadRequest, Params};
use crate::AppState;

type Q = Query<HashMap<String, String>>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/node/{*rest}", get(node))
        .route("/api/observations/series", get(series))
        .route("/api/observations/point", get(point))
        .route("/api/place/resolve", get(resolve))
        .route("/api/place/{*rest}", get(place))
        .route("/api/variables", get(variables))
        .route("/api/download", get(download))
        .fallback(|| async { ApiError::not_found("no such endpoint") })
        .with_state(state)
}

fn json<T: serde::Serialize>(r: Result<T, ApiError>) -> Response {
    match r {
        Ok(body) => Json(body).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Splits `<id>/<action>` where the id itself may contain slashes.
fn split_action<'a>(rest: &'a str, action: &str) -> Result<&'a str, ApiError> {
    rest.strip_suffix(action)
        .and_then(|id| id.strip_suffix('/'))
        .filter(|id| !id.is_empty())
        .ok_or_else(|| ApiError::not_found("no such endpoint"))
}

async fn node(State(s): State<AppState>, Path(rest): Path<String>, Query(q): Q) -> Response {
    let c = s.snapshot();
    json(split_action(&rest, "triples").and_then(|id| {
        let id = parse_id("id", id)?;
        views::triples(&c, &id, &Params::new(q))
    }))
}

async fn place(State(s): State<AppState>, Path(rest): Path<String>, Query(q): Q) -> Response {
    let c = s.snapshot();
    json(split_action(&rest, "children").and_then(|id| {
        let id = parse_id("id", id)?;
        views::children(&c, &id, &Params::new(q))
    }))
}

async fn series(State(s): State<AppState>, Query(q): Q) -> Response {
    let params = Params::new(q);
    let (entity, variable) = match (params.id("entity"), params.id("variable")) {
        (Ok(e), Ok(v)) => (e, v),
        (Err(e), _) | (_, Err(e)) => return e.into_response(),
    };
    let c = s.snapshot();
    json(s.federator.series(&c, &entity, &variable, params.flag(LOCAL_ONLY)).await)
}

async fn point(State(s): State<AppState>, Query(q): Q) -> Response {
    json(views::point(&s.snapshot(), &Params::new(q)))
}

async fn resolve(State(s): State<AppState>, Query(q): Q) -> Response {
    json(views::resolve(&s.snapshot(), &Params::new(q)))
}

async fn variables(State(s): State<AppState>, Query(q): Q) -> Response {
    json(views::variables(&s.snapshot(), &Params::new(q)))
}

async fn download(State(s): State<AppState>, Query(q): Q) -> Response {
    let body = match DownloadRequest::from_params(&Params::new(q)).and_then(|r| r.render(&s.snapshot())) {
        Ok(b) => b,
        Err(e) => return e.into_response(),
    };
    let disposition = format!("attachment; filename=\"{}\"", views::download_filename(chrono::Utc::now()));
    let mut resp = (StatusCode::OK, body).into_response();
    let h = resp.headers_mut();
    h.insert(header::CONTENT_TYPE, HeaderValue::from_static("text/csv; charset=utf-8"));
    h.insert(
        header::CONTENT_DISPOSITION,
        HeaderValue::from_str(&disposition).expect("timestamp file names are valid header values"),
    );
    resp
}
