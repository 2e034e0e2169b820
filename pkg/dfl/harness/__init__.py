"""Experiment runner: scenarios, metrics CSV and run comparison."""
