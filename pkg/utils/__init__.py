"""
GD-Bench 애플리케이션의 유틸리티 패키지
"""

from utils.action_parser import ActionParser, parse_action
from utils.agents import NoisyProfile, make_noisy_agent, make_oracle_agent, make_random_agent
from utils.blocksworld import Action, ActionKind, Observation, WorldState, apply_action, measure
from utils.episode import falling_tower_run, run_episode, subtask_stepping_run
from utils.file_handler import FileHandler
from utils.gd_stats import GDEstimate, aggregate_gd, bootstrap_ci, gd
from utils.mc_estimator import CapabilityProfile, ReturnSamples, simulate
from utils.partition import Configuration, distance, enumerate_configurations, sample_at_distance

__all__ = [
    'ActionParser',
    'parse_action',
    'NoisyProfile',
    'make_noisy_agent',
    'make_oracle_agent',
    'make_random_agent',
    'Action',
    'ActionKind',
    'Observation',
    'WorldState',
    'apply_action',
    'measure',
    'falling_tower_run',
    'run_episode',
    'subtask_stepping_run',
    'FileHandler',
    'GDEstimate',
    'aggregate_gd',
    'bootstrap_ci',
    'gd',
    'CapabilityProfile',
    'ReturnSamples',
    'simulate',
    'Configuration',
    'distance',
    'enumerate_configurations',
    'sample_at_distance',
]
