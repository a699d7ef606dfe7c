//! Std companion to `tomigo-core`: project persistence, the REST service
//! consumed by the UI, the live HTTP provider and mock fixture loading.

pub mod api;
pub mod error;
pub mod fixtures;
pub mod http_provider;
pub mod service;
pub mod store;

pub use error::{ConfigError, ServiceError, StorageError};
pub use service::Service;
