//! Thin async client for the control service.

use futures_util::{SinkExt, StreamExt};
use reqwest::{StatusCode, Url};
use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use trochoid_core::api::{
    ClassifyRequest, FamilyRequest, FamilyResponse, LinearRequest, LinearResponse, PlotRequest, PlotResponse,
    VerifyRequest,
};
use trochoid_core::machine::{Ack, ControlMessage, MachineSnapshot, SampleEvent, ServerMessage, SessionLog};
use trochoid_core::verify::VerifyReport;
use trochoid_core::CurveClass;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("invalid server url {0:?}")]
    Url(String),
    #[error("http: {0}")]
    Http(#[from] reqwest::Error),
    #[error("server answered {status}: {code}: {message}")]
    Server {
        status: u16,
        code: String,
        message: String,
    },
    #[error("websocket: {0}")]
    WebSocket(#[from] tokio_tungstenite::tungstenite::Error),
    #[error("undecodable response: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("{code}: {message}")]
    Machine { code: String, message: String },
    #[error("connection closed")]
    Closed,
}

pub type Result<T, E = ClientError> = std::result::Result<T, E>;

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: Url,
}

impl Client {
    /// `base` is the service root, e.g. `http://127.0.0.1:7420`.
    pub fn new(base: &str) -> Result<Self> {
        let mut base = Url::parse(base).map_err(|_| ClientError::Url(base.to_string()))?;
        if !matches!(base.scheme(), "http" | "https") || base.cannot_be_a_base() {
            return Err(ClientError::Url(base.to_string()));
        }
        if !base.path().ends_with('/') {
            let path = format!("{}/", base.path());
            base.set_path(&path);
        }
        Ok(Self {
            http: reqwest::Client::new(),
            base,
        })
    }

    pub fn base_url(&self) -> &Url {
        &self.base
    }

    fn url(&self, path: &str, session: Option<&str>) -> Result<Url> {
        let mut url = self.base.join(path).map_err(|_| ClientError::Url(path.to_string()))?;
        if let Some(name) = session {
            url.query_pairs_mut().append_pair("session", name);
        }
        Ok(url)
    }

    async fn decode<T: DeserializeOwned>(response: reqwest::Response) -> Result<T> {
        let text = Self::text(response).await?;
        Ok(serde_json::from_str(&text)?)
    }

    async fn text(response: reqwest::Response) -> Result<String> {
        let status = response.status();
        let text = response.text().await?;
        if status.is_success() {
            return Ok(text);
        }
        Err(server_error(status, &text))
    }

    async fn get<T: DeserializeOwned>(&self, path: &str, session: Option<&str>) -> Result<T> {
        let response = self.http.get(self.url(path, session)?).send().await?;
        Self::decode(response).await
    }

    async fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, session: Option<&str>, body: &B) -> Result<T> {
        let response = self.http.post(self.url(path, session)?).json(body).send().await?;
        Self::decode(response).await
    }

    pub async fn health(&self) -> Result<()> {
        let _: serde_json::Value = self.get("health", None).await?;
        Ok(())
    }

    pub async fn sessions(&self) -> Result<Vec<String>> {
        self.get("sessions", None).await
    }

    pub async fn state(&self, session: Option<&str>) -> Result<MachineSnapshot> {
        self.get("state", session).await
    }

    pub async fn log(&self, session: Option<&str>) -> Result<SessionLog> {
        self.get("log", session).await
    }

    pub async fn export_svg(&self, session: Option<&str>) -> Result<String> {
        let response = self.http.get(self.url("export.svg", session)?).send().await?;
        Self::text(response).await
    }

    pub async fn command(&self, session: Option<&str>, msg: &ControlMessage) -> Result<Ack> {
        self.post("command", session, msg).await
    }

    pub async fn classify(&self, req: &ClassifyRequest) -> Result<CurveClass> {
        self.post("api/classify", None, req).await
    }

    pub async fn plot(&self, req: &PlotRequest) -> Result<PlotResponse> {
        self.post("api/plot", None, req).await
    }

    pub async fn family(&self, req: &FamilyRequest) -> Result<FamilyResponse> {
        self.post("api/family", None, req).await
    }

    pub async fn linear(&self, req: &LinearRequest) -> Result<LinearResponse> {
        self.post("api/linear", None, req).await
    }

    pub async fn verify(&self, req: &VerifyRequest) -> Result<VerifyReport> {
        self.post("api/verify", None, req).await
    }

    pub async fn replay(&self, log: &SessionLog) -> Result<Vec<SampleEvent>> {
        self.post("api/replay", None, log).await
    }

    /// Open the machine WebSocket of a session.
    pub async fn connect(&self, session: Option<&str>) -> Result<MachineSocket> {
        let mut url = self.url("machine", session)?;
        let scheme = if url.scheme() == "https" { "wss" } else { "ws" };
        url.set_scheme(scheme).map_err(|_| ClientError::Url(url.to_string()))?;
        let (ws, _) = tokio_tungstenite::connect_async(url.as_str()).await?;
        Ok(MachineSocket { ws })
    }
}

fn server_error(status: StatusCode, body: &str) -> ClientError {
    let detail = serde_json::from_str::<serde_json::Value>(body).ok();
    let field = |name: &str| {
        detail
            .as_ref()
            .and_then(|v| v["error"][name].as_str())
            .map(str::to_string)
    };
    ClientError::Server {
        status: status.as_u16(),
        code: field("code").unwrap_or_else(|| "unknown".into()),
        message: field("message").unwrap_or_else(|| body.to_string()),
    }
}

/// Live connection to one machine.
pub struct MachineSocket {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
}

impl MachineSocket {
    pub async fn send(&mut self, msg: &ControlMessage) -> Result<()> {
        let text = serde_json::to_string(msg)?;
        self.ws.send(Message::Text(text.into())).await?;
        Ok(())
    }

    /// Next message from the server; `None` once the server hangs up.
    pub async fn recv(&mut self) -> Result<Option<ServerMessage>> {
        while let Some(frame) = self.ws.next().await {
            match frame? {
                Message::Text(text) => return Ok(Some(serde_json::from_str(&text)?)),
                Message::Close(_) => return Ok(None),
                _ => continue,
            }
        }
        Ok(None)
    }

    /// Send a message and wait for its reply. Samples that arrive in the
    /// meantime are appended to `samples`.
    pub async fn request(&mut self, msg: &ControlMessage, samples: &mut Vec<SampleEvent>) -> Result<Ack> {
        self.send(msg).await?;
        loop {
            match self.recv().await? {
                Some(ServerMessage::Sample(event)) => samples.push(event),
                Some(ServerMessage::Ack(ack)) => return Ok(ack),
                Some(ServerMessage::Error { code, message }) => return Err(ClientError::Machine { code, message }),
                None => return Err(ClientError::Closed),
            }
        }
    }

    pub async fn close(mut self) -> Result<()> {
        self.ws.close(None).await?;
        Ok(())
    }
}
