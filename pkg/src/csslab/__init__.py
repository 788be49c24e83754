"""Numerical laboratory for the coupled Sasa-Satsuma equation.

Scattering data from initial conditions, the leading-order long-time
asymptotics on rays x = -12 lam0^2 t, a pseudospectral reference solver and
the special functions of the local model problem.
"""
__version__ = "0.1.0"
