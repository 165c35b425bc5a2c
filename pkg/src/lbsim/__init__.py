"""Predictive server load balancing simulator."""
