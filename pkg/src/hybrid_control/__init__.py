"""Hybrid control arm analyses with data-adaptive weighting."""
