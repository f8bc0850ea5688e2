use std::fs;
use std::path::Path;

use futures::{SinkExt, StreamExt};
use reachtrace_core::metrics::build_record;
use reachtrace_core::sensor::SensorTrace;
use reachtrace_core::service::{ModelPayload, ServerMessage, ServiceConfig, SessionService};
use reachtrace_core::session::{EventKind, SessionLog};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};

type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

async fn start(store: &Path) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let service = SessionService::new(ServiceConfig {
        store_dir: Some(store.to_path_buf()),
        seed: 3,
        ..ServiceConfig::default()
    })
    .unwrap();
    tokio::spawn(reachtrace_cli::serve(listener, service));
    format!("ws://{addr}/ws")
}

async fn send(ws: &mut Ws, text: String) {
    ws.send(Message::text(text)).await.unwrap();
}

async fn recv(ws: &mut Ws) -> ServerMessage {
    loop {
        let msg = ws.next().await.unwrap().unwrap();
        if let Message::Text(t) = msg {
            return serde_json::from_str(t.as_str()).unwrap();
        }
    }
}

async fn create(ws: &mut Ws, orientation: &str, configuration: &str) -> (String, ModelPayload) {
    send(
        ws,
        format!(
            r#"{{"type":"create_session","participant_id":"UI-1","orientation":"{orientation}","configuration":"{configuration}"}}"#
        ),
    )
    .await;
    match recv(ws).await {
        ServerMessage::SessionCreated { session_id, model } => (session_id, model),
        other => panic!("unexpected {other:?}"),
    }
}

fn sample(id: &str, t: f64, x: f64, y: f64, z: f64) -> String {
    format!(r#"{{"type":"sample","session_id":"{id}","t":{t},"x":{x},"y":{y},"z":{z}}}"#)
}

#[tokio::test]
async fn ordered_trace_completes_and_metrics_match_offline_recompute() {
    let store = tempfile::tempdir().unwrap();
    let url = start(store.path()).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    let (id, model) = create(&mut ws, "Horizontal", "Curved").await;
    assert_eq!(model.dots.len(), 91);

    let mut events = Vec::new();
    let mut live_record = None;
    for (k, d) in model.dots.iter().enumerate() {
        send(&mut ws, sample(&id, 0.5 + 0.4 * k as f64, d.x, d.y, d.z)).await;
        loop {
            match recv(&mut ws).await {
                ServerMessage::Event { event, .. } => {
                    events.push(event);
                    // The last hit is followed by completion and the metrics push.
                    if event.kind == (EventKind::DotHit { dot_index: k }) && k + 1 < model.dots.len() {
                        break;
                    }
                }
                ServerMessage::Metrics { record, .. } => {
                    live_record = Some(record);
                    break;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
    }
    assert_eq!(events.iter().filter(|e| matches!(e.kind, EventKind::DotHit { .. })).count(), 91);
    assert_eq!(events.last().unwrap().kind, EventKind::AllDotsComplete);
    let live = live_record.expect("metrics pushed on completion");
    assert_eq!(live.norm_mistakes, 0.0);

    send(&mut ws, format!(r#"{{"type":"fetch_metrics","session_id":"{id}"}}"#)).await;
    let fetched = match recv(&mut ws).await {
        ServerMessage::Metrics { record, .. } => record,
        other => panic!("unexpected {other:?}"),
    };
    assert_eq!(fetched, live);

    let log = SessionLog::from_jsonl(&fs::read_to_string(store.path().join(format!("logs/{id}.jsonl"))).unwrap()).unwrap();
    let trace = SensorTrace::read_csv(fs::File::open(store.path().join(format!("traces/{id}.csv"))).unwrap()).unwrap();
    assert_eq!(build_record(&log, &trace).unwrap(), fetched);
}

#[tokio::test]
async fn bad_messages_are_rejected_without_ending_the_session() {
    let store = tempfile::tempdir().unwrap();
    let url = start(store.path()).await;
    let (mut ws, _) = connect_async(&url).await.unwrap();
    let (id, model) = create(&mut ws, "Vertical", "Flat").await;
    let d0 = model.dots[0];
    send(&mut ws, sample(&id, 2.0, d0.x, d0.y, d0.z)).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::Event { .. }));

    send(&mut ws, sample(&id, 1.0, d0.x, d0.y, d0.z)).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::Rejected { session_id: Some(ref s), .. } if *s == id));
    send(&mut ws, "not json".into()).await;
    assert!(matches!(recv(&mut ws).await, ServerMessage::Rejected { session_id: None, .. }));
    ws.send(Message::binary(vec![1u8, 2, 3])).await.unwrap();
    assert!(matches!(recv(&mut ws).await, ServerMessage::Rejected { .. }));

    // Dot 2 before dot 1 is a mistake, and the session is still alive.
    let d2 = model.dots[2];
    send(&mut ws, sample(&id, 3.0, d2.x, d2.y, d2.z)).await;
    match (recv(&mut ws).await, recv(&mut ws).await) {
        (ServerMessage::Event { event: a, .. }, ServerMessage::Event { event: b, .. }) => {
            assert_eq!(a.kind, EventKind::DotHit { dot_index: 2 });
            assert_eq!(b.kind, EventKind::Mistake { dot_index: 2 });
        }
        other => panic!("unexpected {other:?}"),
    }

    send(&mut ws, r#"{"type":"fetch_model","configuration":"Flat","orientation":"Vertical"}"#.into()).await;
    match recv(&mut ws).await {
        ServerMessage::Model { model: m } => assert_eq!(m, model),
        other => panic!("unexpected {other:?}"),
    }
}

#[tokio::test]
async fn concurrent_sessions_are_independent() {
    let store = tempfile::tempdir().unwrap();
    let url = start(store.path()).await;
    let (mut a, _) = connect_async(&url).await.unwrap();
    let (mut b, _) = connect_async(&url).await.unwrap();
    let (ida, ma) = create(&mut a, "Vertical", "Flat").await;
    let (idb, mb) = create(&mut b, "Vertical", "Curved").await;
    assert_ne!(ida, idb);
    let (x, y) = (ma.dots[1], mb.dots[0]);
    send(&mut a, sample(&ida, 1.0, x.x, x.y, x.z)).await;
    send(&mut b, sample(&idb, 1.0, y.x, y.y, y.z)).await;
    assert!(matches!(recv(&mut a).await, ServerMessage::Event { event, .. } if event.kind == EventKind::DotHit { dot_index: 1 }));
    assert!(matches!(recv(&mut a).await, ServerMessage::Event { event, .. } if event.kind == EventKind::Mistake { dot_index: 1 }));
    assert!(matches!(recv(&mut b).await, ServerMessage::Event { event, .. } if event.kind == EventKind::DotHit { dot_index: 0 }));
}
