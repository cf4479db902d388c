import pytest

# first docstring line -> outcomes of every (parametrized) case
_acceptance = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.module.__name__.endswith("test_acceptance"):
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _acceptance.setdefault(doc, []).append(rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for doc, outcomes in _acceptance.items():
        if all(o == "passed" for o in outcomes):
            tag = "PASS"
        elif any(o == "failed" for o in outcomes):
            tag = "FAIL"
        else:
            tag = outcomes[0].upper()
        terminalreporter.write_line(f"[{tag}] {doc}")
