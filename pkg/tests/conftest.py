import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, title, elapsed, limit, note = RESULTS[num]
        lim = f"< {limit:g}s" if limit is not None else "no limit"
        line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {elapsed:7.2f}s ({lim})  {title}"
        if note and not ok:
            line += f"  [{note}]"
        tr.write_line(line)
