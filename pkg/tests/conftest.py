"""Shared fixtures: calibrated chains are expensive, so they are cached per session."""

import pytest

from qetsim import chain


@pytest.fixture(scope="session")
def chains():
    """Memoized access to calibrated chains: chains(n, boundary) -> (spec, result)."""
    cache = {}

    def get(n_sites: int, boundary: str = "periodic"):
        key = (n_sites, boundary)
        if key not in cache:
            cache[key] = chain.calibrated_chain(n_sites, boundary=boundary)
        return cache[key]

    return get
