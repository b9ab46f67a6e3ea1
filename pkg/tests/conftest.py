import _util


def pytest_terminal_summary(terminalreporter):
    if not _util.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for entry in sorted(_util.ACCEPTANCE):
        terminalreporter.write_line(_util.acceptance_line(*entry))
