use clap::Parser;

use deliberate::api::{Service, ServiceConfig};

#[tokio::main]
async fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = ServiceConfig::parse();
    if let Err(e) = run(config).await {
        eprintln!("deliberate-server: {e}");
        std::process::exit(1);
    }
}

async fn run(config: ServiceConfig) -> deliberate::Result<()> {
    let service = Service::build(&config)?;
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    service
        .serve(listener, async {
            let _ = tokio::signal::ctrl_c().await;
            log::info!("shutting down");
        })
        .await
}
