"""Computational services: potentials, scattering, bounds, Fock oracle, ensembles."""
