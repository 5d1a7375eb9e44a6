//! File formats: model JSON, LLD and frame CSV, session manifests, feature
//! layouts, and run manifests.

pub mod frames;
pub mod layout;
pub mod lld;
pub mod manifest;
pub mod model;

pub use frames::{read_frames_csv, write_frames_csv};
pub use layout::{load_layout, save_layout, LayoutFile};
pub use lld::{read_lld_csv, write_lld_csv};
pub use manifest::{load_sessions, read_manifest_csv, save_manifest_csv, RunManifest};
pub use model::{load_model, save_model, ModelFile, NamedNetwork};
