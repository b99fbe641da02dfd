#!/usr/bin/env python3
"""Run the test suite.

Tests marked ``slow`` (larger scales, full threshold sweeps) are skipped
unless ``--all`` is given. Other arguments are passed to pytest unchanged.
"""

import sys

if __name__ == "__main__":
    import pytest

    args = sys.argv[1:]
    if "--all" in args:
        args.remove("--all")
        defaults = ["-v", "tests/"]
    else:
        defaults = ["-v", "-m", "not slow", "tests/"]
    sys.exit(pytest.main(args or defaults))
