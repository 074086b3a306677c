//! Backend for the annotation workbench: task assignment, live validation
//! and preview, agreement diffing, expert resolution and corpus export,
//! served as a JSON HTTP API under `/v1`.

pub mod api;
pub mod error;
pub mod store;
pub mod task;

use std::sync::Arc;

pub use api::router;
pub use error::{ApiError, ErrorCode};
pub use store::{PromptConverter, Store, StoreError};
pub use task::{AgreementDiff, Status, Task};

/// Serves the API on `listener` until the process is stopped.
pub async fn serve(listener: tokio::net::TcpListener, store: Arc<Store>) -> std::io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        tracing::info!(%addr, "annotation service listening");
    }
    axum::serve(listener, router(store)).await
}
