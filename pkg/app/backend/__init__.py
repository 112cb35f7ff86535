"""Simulation and analysis services, configuration."""
