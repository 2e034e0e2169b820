"""Scenario configuration models, loading and presets."""
