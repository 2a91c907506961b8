"""Test suite for pemid."""
