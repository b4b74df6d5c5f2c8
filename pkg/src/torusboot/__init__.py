"""Bootstrap percolation on the discrete torus: exact extremal oracles,
closed-form quantities, and seeded Monte Carlo experiments."""

__version__ = "0.1.0"
