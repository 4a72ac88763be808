//! File formats: OMST tensors, group specs and prune results.

mod groups;
mod omst;
mod result;

pub use groups::{
    format_group_spec, parse_group_spec, read_group_spec, write_group_spec, GroupEntry, GroupSpec,
};
pub use omst::{
    decode_tensor, encode_tensor, read_tensor, write_tensor, DTYPE_F32, MAGIC, VERSION,
};
pub use result::{
    format_prune_result, parse_prune_result, read_prune_result, write_prune_result, GroupRetention,
    PruneResultFile, ResultSummary,
};
