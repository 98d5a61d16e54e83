mod common;

use std::time::Duration;

use tokio::time::timeout;
use trochoid_client::{ClientError, MachineSocket};
use trochoid_core::machine::{replay, ControlMessage, Param, SampleEvent, ServerMessage};
use trochoid_core::Polarization;

const WAIT: Duration = Duration::from_secs(10);

async fn collect(socket: &mut MachineSocket, count: usize) -> Vec<SampleEvent> {
    let mut out = Vec::new();
    while out.len() < count {
        match timeout(WAIT, socket.recv()).await.expect("samples keep coming").unwrap() {
            Some(ServerMessage::Sample(event)) => out.push(event),
            Some(other) => panic!("unexpected {other:?}"),
            None => panic!("socket closed"),
        }
    }
    out
}

#[tokio::test]
async fn samples_stream_on_the_tick_grid() {
    let server = common::start().await;
    let mut socket = server.client.connect(Some("grid")).await.unwrap();
    let mut early = Vec::new();
    let ack = socket.request(&ControlMessage::Start, &mut early).await.unwrap();
    assert_eq!(ack.of, "start");
    let events = collect(&mut socket, 48).await;
    for pair in events.windows(2) {
        let steps = ((pair[1].t - pair[0].t) * 240.0).round();
        assert_eq!(steps, 1.0, "consecutive samples are one tick apart");
    }
    for ev in &events {
        let t = ev.t;
        let want = [
            12.0 * (3.0 * t).cos() + 2.0 * (18.0 * t).cos(),
            12.0 * (3.0 * t).sin() + 2.0 * (18.0 * t).sin(),
        ];
        assert!((ev.table[0] - want[0]).abs() < 1e-9 && (ev.table[1] - want[1]).abs() < 1e-9);
        assert!(ev.pen_down);
        assert_eq!(ev.rev, 0);
    }
}

#[tokio::test]
async fn steering_bumps_revision_and_keeps_time() {
    let server = common::start().await;
    let mut socket = server.client.connect(Some("steer")).await.unwrap();
    let mut seen = Vec::new();
    socket.request(&ControlMessage::Start, &mut seen).await.unwrap();
    seen.extend(collect(&mut socket, 10).await);
    let ack = socket.request(&ControlMessage::set(Param::A, "13"), &mut seen).await.unwrap();
    assert_eq!(ack.rev, 1);
    let after = collect(&mut socket, 10).await;
    assert!(after.iter().all(|e| e.rev == 1));
    assert!(after[0].t > seen.last().unwrap().t);

    let err = socket
        .request(&ControlMessage::SetPolarization { polarization: Polarization::Co }, &mut seen)
        .await
        .unwrap_err();
    assert!(matches!(err, ClientError::Machine { ref code, .. } if code == "polarization_while_running"));

    let snapshot = socket.request(&ControlMessage::Snapshot, &mut seen).await.unwrap();
    let state = snapshot.state.expect("snapshot ack carries state");
    assert_eq!(state.rev, 1);
    assert!(state.running);
}

#[tokio::test]
async fn malformed_messages_get_an_error() {
    use futures_util::{SinkExt, StreamExt};
    use tokio_tungstenite::tungstenite::Message;

    let server = common::start().await;
    let url = format!("{}/machine", server.base.replacen("http", "ws", 1));
    let (mut raw, _) = tokio_tungstenite::connect_async(url.as_str()).await.unwrap();
    raw.send(Message::Text(r#"{"type":"warp"}"#.into())).await.unwrap();
    let reply = timeout(WAIT, raw.next()).await.unwrap().unwrap().unwrap();
    let reply: ServerMessage = serde_json::from_str(reply.to_text().unwrap()).unwrap();
    assert!(matches!(reply, ServerMessage::Error { ref code, .. } if code == "bad_message"));
}

#[tokio::test]
async fn every_subscriber_sees_the_same_stream() {
    let server = common::start().await;
    let mut first = server.client.connect(Some("shared")).await.unwrap();
    let mut second = server.client.connect(Some("shared")).await.unwrap();
    let mut ignored = Vec::new();
    first.request(&ControlMessage::Start, &mut ignored).await.unwrap();
    let a = collect(&mut first, 30).await;
    let b = collect(&mut second, 30).await;
    // both saw a run of consecutive ticks; where they overlap they agree
    let overlap: Vec<_> = a.iter().filter(|e| b.iter().any(|f| f.t == e.t)).collect();
    assert!(!overlap.is_empty());
    for e in overlap {
        assert_eq!(Some(e), b.iter().find(|f| f.t == e.t));
    }
}

#[tokio::test]
async fn live_stream_is_reproduced_by_replaying_the_log() {
    let server = common::start().await;
    let mut socket = server.client.connect(Some("determinism")).await.unwrap();
    let mut live = Vec::new();
    socket.request(&ControlMessage::Start, &mut live).await.unwrap();
    live.extend(collect(&mut socket, 20).await);
    socket.request(&ControlMessage::set(Param::A, "13"), &mut live).await.unwrap();
    live.extend(collect(&mut socket, 20).await);
    socket.request(&ControlMessage::set(Param::OmegaTable, "4"), &mut live).await.unwrap();
    live.extend(collect(&mut socket, 20).await);
    socket.request(&ControlMessage::PenUp, &mut live).await.unwrap();
    live.extend(collect(&mut socket, 5).await);

    let log = server.client.log(Some("determinism")).await.unwrap();
    let replayed = replay(&log).unwrap();
    assert!(replayed.len() >= live.len());
    // live samples are a contiguous run of the replayed stream, bit for bit
    let start = replayed.iter().position(|e| e == &live[0]).expect("first live sample replayed");
    for (k, ev) in live.iter().enumerate() {
        let r = &replayed[start + k];
        assert_eq!(ev.t.to_bits(), r.t.to_bits());
        assert_eq!(ev.table.map(f64::to_bits), r.table.map(f64::to_bits));
        assert_eq!(ev.lab.map(f64::to_bits), r.lab.map(f64::to_bits));
        assert_eq!((ev.rev, ev.pen_down), (r.rev, r.pen_down));
    }
}

#[tokio::test]
async fn export_has_one_path_per_revision() {
    let server = common::start().await;
    let session = Some("export");
    let mut socket = server.client.connect(session).await.unwrap();
    let mut seen = Vec::new();
    socket.request(&ControlMessage::Start, &mut seen).await.unwrap();
    collect(&mut socket, 20).await;
    socket.request(&ControlMessage::set(Param::A, "13"), &mut seen).await.unwrap();
    collect(&mut socket, 20).await;
    socket.request(&ControlMessage::Pause, &mut seen).await.unwrap();
    let svg = server.client.export_svg(session).await.unwrap();
    assert!(svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<path").count(), 2);

    socket.request(&ControlMessage::Reset, &mut seen).await.unwrap();
    let state = server.client.state(session).await.unwrap();
    assert_eq!((state.theta, state.phi, state.t_sim), (0.0, 0.0, 0.0));
    assert!(!state.pen_down);
    let cleared = server.client.export_svg(session).await.unwrap();
    assert_eq!(cleared.matches("<path").count(), 0);
}
