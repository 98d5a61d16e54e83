use tokio::net::TcpListener;
use tokio::sync::oneshot;
use trochoid_client::Client;
use trochoid_service::{serve, ServiceConfig};

pub struct Running {
    pub client: Client,
    pub base: String,
    _stop: oneshot::Sender<()>,
}

pub async fn start() -> Running {
    start_with(ServiceConfig::default()).await
}

pub async fn start_with(config: ServiceConfig) -> Running {
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let (stop, stopped) = oneshot::channel::<()>();
    tokio::spawn(async move {
        serve(listener, config, async {
            let _ = stopped.await;
        })
        .await
        .unwrap();
    });
    Running {
        client: Client::new(&base).unwrap(),
        base,
        _stop: stop,
    }
}
