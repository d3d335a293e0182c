"""Sweep and validation drivers behind the command-line interface."""
