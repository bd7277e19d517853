"""Shared test configuration.

Hypothesis deadlines measure wall-clock time, which makes property tests
flaky on loaded or slow machines; the exhaustive sweeps elsewhere in the
suite already bound runtime, so deadlines add no safety here.
"""

from hypothesis import settings

settings.register_profile("nofmux", deadline=None)
settings.load_profile("nofmux")
