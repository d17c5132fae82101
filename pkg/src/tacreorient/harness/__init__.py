"""Scenario configs, episode runner, ablation matrix, demo, plot data and CLI."""

from .ablation import EpisodeResult, format_table, read_results, results_csv, run_ablation, summary, write_results
from .config import ConfigError, ScenarioConfig, echo, load_document, scenario_config
from .demo import DemoOutcome, run_two_phase_demo
from .plots import emit_plots
from .runner import LABELS, EpisodeOutcome, run_episode
