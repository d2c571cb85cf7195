"""Criticality ranking, attack simulation and topology optimization for layered swarm networks."""

__version__ = "0.1.0"
