//! File formats: WAV audio, run configuration, matrix export and PGM images.

pub mod config;
pub mod export;
pub mod wav;

pub use config::{load_config, parse_config, RunConfig};
pub use export::{
    export_matrix, read_csv_matrix, render_pgm, write_f32le, write_pgm, write_trace_csv,
    MatrixFormat,
};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav, SampleFormat};
