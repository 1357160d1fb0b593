"""Tests for suris-lab."""

