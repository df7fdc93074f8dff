"""Spectral Galerkin simulation of 1-d stochastic Burgers and Allen-Cahn
equations driven by additive space-time white noise, with a tamed explicit
exponential Euler time stepper and a numerical verification suite."""

__version__ = "0.1.0"
