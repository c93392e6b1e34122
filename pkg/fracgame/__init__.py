"""Verification lab for Caputo fractional differential games."""
