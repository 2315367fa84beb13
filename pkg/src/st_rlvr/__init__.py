"""Verifiable rewards, QA generation and toy GRPO for spatio-temporal video reasoning."""

__version__ = "0.1.0"
