import re
from collections import OrderedDict

CRITERIA = OrderedDict([
    (1, "D/D/1 exact peak and average, analytic and simulated"),
    (2, "M/M/1 FCFS average through two formulas and simulation"),
    (3, "D/M/1 fixed point against a bisection oracle"),
    (4, "preemptive LCFS M/M/1 values and informative fraction"),
    (5, "deterministic service worst for LCFSp and M/G/inf"),
    (6, "heavy-tail ladders approach 1/lambda"),
    (7, "age vs delay inversion"),
    (8, "engines against the quadratic-time reference"),
    (9, "transform sanity on a 100-point grid"),
])
_NAME = re.compile(r"test_criterion_(\d+)_")
_outcomes: dict[int, list[tuple[str, bool]]] = {}


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    # setup errors count as failures; the call phase decides otherwise
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1],
                                                          report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, label in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            tr.write_line(f"criterion {n}: NOT RUN  {label}")
            continue
        failed = [name for name, ok in results if not ok]
        verdict = "FAIL" if failed else "PASS"
        tail = f"  (failed: {', '.join(failed)})" if failed else ""
        tr.write_line(f"criterion {n}: {verdict}  {label}{tail}")
