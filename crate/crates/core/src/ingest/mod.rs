//! File formats and MNIST preprocessing.

mod binary;
mod idx;
mod layout;
mod truth;
mod tsv;

pub use binary::{read_binary, write_binary, BINARY_MAGIC, BINARY_VERSION};
pub use idx::{
    open_input, read_idx, resize_bilinear, resize_threshold_flatten, ImageSet, SUPPORTED_SIDES,
};
pub use layout::{
    discover_layers, layer_file_name, load_model, model_dir, parse_layer_file_name,
    read_matrix_file, write_matrix_file, write_model, LayerFile, MatrixFormat,
};
pub use truth::{read_truth, write_truth};
pub use tsv::{read_tsv, read_tsv_triples, write_tsv};
