import numpy as np
import pytest

# filled by the acceptance suite and echoed in the terminal summary
ACCEPTANCE_LINES = []

from dualnash.experiments import (build_logsumexp_game, build_monotone_game, build_quadratic_game,
                                  build_toy_game, build_sensor_game)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy():
    return build_toy_game((0.0, 1.0), (1.5, 3.0), 0.1)


@pytest.fixture
def quadratic():
    return build_quadratic_game()


@pytest.fixture
def logsumexp():
    return build_logsumexp_game()


@pytest.fixture
def monotone():
    return build_monotone_game()


@pytest.fixture(scope="session")
def sensor():
    return build_sensor_game()


def all_games():
    return {
        "toy": build_toy_game((0.0, 1.0), (1.5, 3.0), 0.1),
        "quadratic": build_quadratic_game(),
        "logsumexp": build_logsumexp_game(),
        "monotone": build_monotone_game(),
        "sensor": build_sensor_game(n_sensors=5, seed=1),
    }


def sample_profile(game, rng):
    return np.concatenate([s.sample(rng, 1)[0] for s in game.sets])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
