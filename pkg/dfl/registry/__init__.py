"""Partition registry: which agents hold which model partitions."""
