"""Helpers shared between runners and the command-line interface."""
