use std::path::PathBuf;
use std::sync::Arc;

use clap::Parser;
use log::info;

use ucpnet::service::SessionStore;

/// Serve elicitation sessions over HTTP.
#[derive(Parser)]
#[command(name = "ucp-server", version)]
struct Args {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Directory for session snapshots; existing snapshots are replayed
    /// at startup. Sessions live in memory only when absent.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("UCP_LOG", "info")).init();
    let args = Args::parse();
    let store = match &args.snapshots {
        Some(dir) => SessionStore::recover(dir)?,
        None => SessionStore::in_memory(),
    };
    info!("{} sessions restored", store.len());
    let listener = tokio::net::TcpListener::bind(&args.bind).await?;
    info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, ucpnet_server::router(Arc::new(store))).await
}
