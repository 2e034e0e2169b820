"""Centralized FedAvg reference."""
