"""Convex minorant slope fluctuations of Levy paths.

Submodules
----------
levy_model      parametric Levy models, exact marginals and path samplers
minorant        convex minorants of sampled paths and stick-breaking faces
vertex_law      Laplace exponents and samplers for the vertex-time process
additive_fluct  upper fluctuation conditions for non-decreasing additive processes
levy_criteria   test functions and integral criteria for the slope process
mc_lab          Monte Carlo trend statistics and classifiers
cli             config-driven experiment runner
"""
__version__ = "0.1.0"
