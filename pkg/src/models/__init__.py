"""Data models for contexts, scores and experiment plans."""
