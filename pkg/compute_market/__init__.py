"""
Compute Market Package
Deterministic posted-price market for compute time with online matching and pool-sharing payouts
"""
from .market_state import MarketParams, MarketState, advance_period, run_market
from .market_types import JobSpec, MatchingAlgorithm, ProviderRecord
from .scenario_config import load_scenario

__all__ = ['MarketParams', 'MarketState', 'advance_period', 'run_market',
           'JobSpec', 'MatchingAlgorithm', 'ProviderRecord', 'load_scenario']
