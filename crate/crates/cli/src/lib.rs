//! WebSocket transport for the session service.

use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use reachtrace_core::service::{ServerMessage, SessionService};
use tokio::net::TcpListener;

pub type SharedService = Arc<Mutex<SessionService>>;

/// Single endpoint: `/ws`, one JSON object per text frame in each direction.
pub fn router(service: SharedService) -> Router {
    Router::new().route("/ws", get(upgrade)).with_state(service)
}

async fn upgrade(ws: WebSocketUpgrade, State(service): State<SharedService>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| connection(socket, service))
}

async fn connection(mut socket: WebSocket, service: SharedService) {
    while let Some(Ok(msg)) = socket.recv().await {
        let replies = match msg {
            Message::Text(text) => {
                let mut svc = match service.lock() {
                    Ok(guard) => guard,
                    Err(poisoned) => poisoned.into_inner(),
                };
                svc.handle_text(text.as_str())
            }
            Message::Binary(_) => vec![ServerMessage::Rejected {
                session_id: None,
                reason: "binary frames are not supported".into(),
            }],
            Message::Close(_) => break,
            _ => continue,
        };
        for reply in replies {
            if socket.send(Message::Text(reply.to_json().into())).await.is_err() {
                tracing::debug!("client went away");
                return;
            }
        }
    }
}

pub async fn serve(listener: TcpListener, service: SessionService) -> std::io::Result<()> {
    let app = router(Arc::new(Mutex::new(service)));
    axum::serve(listener, app).await
}
