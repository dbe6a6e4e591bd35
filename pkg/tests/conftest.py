import sys
from pathlib import Path

from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from pcsplab.core import structure  # noqa: E402

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, max_size=4, min_size=0):
    """Random digraph on at most ``max_size`` vertices, symbol E."""
    n = draw(st.integers(min_size, max_size))
    pairs = [(a, b) for a in range(n) for b in range(n)]
    edges = draw(st.sets(st.sampled_from(pairs), max_size=len(pairs))) if pairs else set()
    return structure(n, [("E", 2)], {"E": edges})


@st.composite
def ternary_structures(draw, max_size=3):
    n = draw(st.integers(1, max_size))
    triples = [(a, b, c) for a in range(n) for b in range(n) for c in range(n)]
    rel = draw(st.sets(st.sampled_from(triples), max_size=6))
    return structure(n, [("R", 3)], {"R": rel})
