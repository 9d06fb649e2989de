from .config import ConfigError, RunConfig, load_config  # noqa: F401
from .runner import Pipeline, PipelineError, RunState, run_pipeline  # noqa: F401
