import pytest

from sfrj import ann

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def dataset20():
    return ann.generate_dataset(20)


@pytest.fixture(scope="session")
def trained20(dataset20):
    return ann.train(dataset20, ann.TrainConfig())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
