"""Run the property-based invariant suites."""
import sys

import pytest

sys.exit(pytest.main(["-q", "tests/test_geometry.py", "tests/test_solvers.py", "tests/test_duality.py",
                      "tests/test_acceptance.py::test_c9_invariants"]))
