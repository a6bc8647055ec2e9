use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

use vecdebias_server::{router, AppState, Registry};

/// Serve embedding debiasing sessions over HTTP.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, env = "VECDEBIAS_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "VECDEBIAS_HOST", default_value = "127.0.0.1")]
    host: std::net::IpAddr,
    /// TOML file with `[[embedding]]` tables (name, path, format, limit).
    #[arg(long, env = "VECDEBIAS_REGISTRY")]
    registry: Option<PathBuf>,
    /// 50-d GloVe file registered as `glove50-default` when no registry file is given.
    #[arg(long, env = "VECDEBIAS_GLOVE50")]
    glove50: Option<PathBuf>,
}

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let registry = match &args.registry {
        Some(path) => match Registry::from_file(path) {
            Ok(r) => r,
            Err(e) => {
                log::error!("{e}");
                std::process::exit(1);
            }
        },
        None => Registry::builtin(args.glove50.clone()),
    };
    for e in registry.entries() {
        log::info!("embedding `{}` -> {}", e.name, e.path.display());
    }
    let addr = SocketAddr::new(args.host, args.port);
    let listener = match tokio::net::TcpListener::bind(addr).await {
        Ok(l) => l,
        Err(e) => {
            log::error!("cannot bind {addr}: {e}");
            std::process::exit(1);
        }
    };
    log::info!("listening on http://{addr}");
    if let Err(e) = axum::serve(listener, router(AppState::new(registry))).await {
        log::error!("server error: {e}");
        std::process::exit(1);
    }
}
