import pytest

from metasim import simulate
from metasim.scenarios import catalog


@pytest.fixture(scope="session")
def catalog_runs():
    """Every built-in scenario simulated once, keyed by name.

    Building all of them takes around a minute; the acceptance tests
    share this single pass instead of re-running scenarios per test.
    """
    runs = {}
    for sc in catalog():
        traj, final = simulate(
            sc.params, sc.settings, sc.initial_cohorts, n_bins=sc.n_bins
        )
        runs[sc.name] = (sc, traj, final)
    return runs
