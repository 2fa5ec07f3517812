//! Track ingestion, mini-track slicing, cross-validation folds and synthetic
//! tracks.

pub mod slicing;
pub mod synth;
pub mod track;

pub use slicing::{slice_all, slice_minitracks, split_folds, subsample, FoldSplit, MiniTrack};
pub use synth::{synth_tracks, SynthKind, SynthSpec};
pub use track::{
    parse_tracks, read_tracks, write_tracks, write_tracks_file, BoxFormat, FormatSpec, Track, CENTER_HEADER,
    CORNER_HEADER, DEFAULT_FRAME_RATE,
};
