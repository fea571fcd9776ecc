"""Correlated equilibria in extensive-form games with perfect recall."""
