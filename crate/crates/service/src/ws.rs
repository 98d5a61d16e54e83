//! One WebSocket client of a live session.

use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket};
use futures_util::{SinkExt, StreamExt};
use tokio::sync::broadcast::error::RecvError;
use trochoid_core::machine::{ControlMessage, ServerMessage};

use crate::session::LiveSession;

fn encode(msg: &ServerMessage) -> Message {
    Message::Text(serde_json::to_string(msg).expect("server messages serialize").into())
}

/// Forward samples to the client and apply its control messages until
/// either side hangs up. A client that falls behind loses samples; the
/// machine never waits for it.
pub(crate) async fn drive(socket: WebSocket, session: Arc<LiveSession>) {
    let (mut sink, mut stream) = socket.split();
    let mut samples = session.subscribe();
    tracing::debug!(session = session.name(), "client connected");
    loop {
        tokio::select! {
            incoming = stream.next() => {
                let reply = match incoming {
                    Some(Ok(Message::Text(text))) => match serde_json::from_str::<ControlMessage>(&text) {
                        Ok(msg) => match session.apply(msg) {
                            Ok(ack) => ServerMessage::Ack(ack),
                            Err(err) => ServerMessage::from(&err),
                        },
                        Err(err) => ServerMessage::Error {
                            code: "bad_message".into(),
                            message: err.to_string(),
                        },
                    },
                    Some(Ok(Message::Close(_))) | None | Some(Err(_)) => break,
                    Some(Ok(_)) => continue,
                };
                if sink.send(encode(&reply)).await.is_err() {
                    break;
                }
            }
            sample = samples.recv() => {
                match sample {
                    Ok(event) => {
                        if sink.send(encode(&ServerMessage::Sample(event))).await.is_err() {
                            break;
                        }
                    }
                    Err(RecvError::Lagged(missed)) => {
                        tracing::debug!(session = session.name(), missed, "slow client dropped samples");
                    }
                    Err(RecvError::Closed) => break,
                }
            }
        }
    }
    tracing::debug!(session = session.name(), "client disconnected");
}
