//! Serves the HTTP API on an ephemeral local port until interrupted.
//!
//! ```text
//! cargo run --example http_service -- [data-dir]
//! curl --data-binary @edges.txt 'http://ADDR/api/datasets?name=demo&directedness=undirected'
//! ```

use std::sync::Arc;

use infmax::service::{router, AppState};
use infmax::workbench::Workbench;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data_dir = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "infmax-data".into());
    let workbench = Workbench::open(&data_dir, 2)?;
    let app = router(AppState::new(Arc::new(workbench)));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await?;
    println!(
        "listening on http://{} (data in {data_dir})",
        listener.local_addr()?
    );
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
