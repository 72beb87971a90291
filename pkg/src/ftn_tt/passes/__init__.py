from .elementwise import ElementwiseDag, match_elementwise
from .ftn_to_std import pass_ftn_to_std
from .host_to_runtime import pass_host_to_runtime
from .offload_to_tt import pass_offload_to_tt
from .partition import TilePartition, compute_tile_partition
from .pipeline import DEFAULT_PIPELINE, PASSES, PassPipeline, PipelineError, PipelineResult, run_pipeline

__all__ = [
    "ElementwiseDag", "match_elementwise", "pass_ftn_to_std", "pass_host_to_runtime",
    "pass_offload_to_tt", "TilePartition", "compute_tile_partition", "DEFAULT_PIPELINE",
    "PASSES", "PassPipeline", "PipelineError", "PipelineResult", "run_pipeline",
]
