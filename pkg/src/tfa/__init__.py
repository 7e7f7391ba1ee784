"""Desk-scale laboratory for bilinear square functions over arbitrary
families of disjoint frequency squares: dyadic tile geometry, wave
packets, operator evaluators, size/energy functionals, stopping-time
decompositions, restricted-type probes, and a rough-domain multiplier
application."""

__version__ = "0.1.0"
