"""Core configuration, models and exceptions for the bounds engine."""
