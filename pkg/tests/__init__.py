"""Tests for chlattice."""
