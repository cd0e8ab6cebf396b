from hypothesis import settings

settings.register_profile("exact", deadline=None, max_examples=50, derandomize=True)
settings.load_profile("exact")


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    lines = test_acceptance.summary_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
