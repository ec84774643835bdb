"""
Models package - Data structures for scenes, windows, configuration and reports.
"""
from .config import ModelConfig, TrainConfig, load_run_config
from .graph import GraphSnapshot
from .reports import EvalReport, RunManifest, SceneMetrics
from .trajectory import Observation, Scene, SequenceBatch

__all__ = [
    'ModelConfig',
    'TrainConfig',
    'load_run_config',
    'GraphSnapshot',
    'EvalReport',
    'RunManifest',
    'SceneMetrics',
    'Observation',
    'Scene',
    'SequenceBatch',
]
