"""Self-paced context evaluation: value-driven instance curricula for contextual RL."""

from .agent import AgentConfig, ValueAgent
from .config import ExperimentConfig, load_config, parse_config
from .core import Context, EpisodeResult, Instance, InstanceSet, discounted_return, mean_return_over_set, rollout
from .curriculum import CurriculumState, SchedulerConfig, scheduler_step
from .harness import RunArtifacts, ablation_sweep, run_experiment, smooth

__version__ = "0.1.0"
