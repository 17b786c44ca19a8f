"""Learning what to defer: deferred-decision MDPs for MIS-type problems, trained with PPO."""

__version__ = "0.1.0"
