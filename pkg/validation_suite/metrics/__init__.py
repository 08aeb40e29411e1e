"""Rejection-rate metrics for validation runs."""
