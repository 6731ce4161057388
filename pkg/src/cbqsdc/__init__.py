"""Simulator for controlled bidirectional quantum secure direct communication."""
from .protocol import RunConfig, Scenario, run_scenario

__all__ = ["RunConfig", "Scenario", "run_scenario"]
