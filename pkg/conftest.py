"""Repository-root conftest: keeps `psp` importable when running pytest from the checkout."""


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: large Monte Carlo or planner runs")
