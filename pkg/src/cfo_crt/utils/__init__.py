"""Utilities module for helper functions."""
