//! Panel ingestion and synthetic panel generation.

mod panel_csv;
mod synth;

pub use panel_csv::{load_panel, load_panel_file, panel_to_csv, read_panel, write_panel_file, PANEL_HEADER};
pub use synth::{generate_synthetic, parse_synth_config, CrisisEpisode, SplitMix64, SynthSpec, Volatilities};
