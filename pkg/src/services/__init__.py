"""File storage for contexts, events, scores, dumps and reports."""
