"""Validation suite for the variance-form test."""
