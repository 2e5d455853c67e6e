"""Configuration module for process settings and run configs."""
