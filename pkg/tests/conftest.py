"""Per-criterion pass/fail summary for tests marked ``criterion(n, label)``."""
_labels = {}
_of_node = {}
_outcomes = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            n, label = m.args
            _labels.setdefault(n, label)
            _of_node[item.nodeid] = n


def pytest_runtest_logreport(report):
    n = _of_node.get(report.nodeid)
    if n is None:
        return
    # record the call outcome, or a setup/teardown failure
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(n, {})[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        out = list(_outcomes[n].values())
        if all(o == "passed" for o in out):
            status = "PASS"
        elif all(o == "skipped" for o in out):
            status = "SKIP"
        else:
            status = "FAIL"
        passed = sum(o == "passed" for o in out)
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {_labels[n]}  ({passed}/{len(out)} checks)")
