mod checkpoint;
mod metrics;

pub use checkpoint::{
    decode_checkpoints, encode_checkpoints, encode_header, read_checkpoint_dir, read_checkpoint_path,
    read_checkpoints, read_checkpoints_with_precision, write_checkpoints, CheckpointHeader, Precision,
    HEADER_LEN, MAGIC, MANIFEST_NAME, VERSION,
};
pub use metrics::{
    format_scalar, parse_metrics, read_metrics, render_metrics, write_metrics, MetricRow, METRICS_HEADER,
};
