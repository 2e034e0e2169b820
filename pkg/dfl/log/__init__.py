"""Logging helpers for command events and protocol records."""
