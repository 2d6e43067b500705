import pytest

from tripart.scenario import acceptance_config


def tiny_config(seed=0, **overrides):
    """Few epochs on ~200 samples; for plumbing tests only."""
    base = {
        "dataset": {
            "generator": "blobs", "n_classes": 4, "samples_per_class": 60, "n_features": 2,
            "std": 1.0, "radius": 3.0, "overlap_pairs": [[0, 1, 0.6]], "test_fraction": 0.2,
        },
        "noise": {"type": "realistic", "r": 0.3, "K": 3, "level_weights": [0.9, 0.6, 0.3], "prototype_epochs": 3},
        "schedule": {"warmup_epochs": 1, "max_epochs": 4, "batch_size": 32},
        "optimizer": {"learning_rate": 0.02, "momentum": 0.9, "weight_decay": 5e-4, "lr_schedule": [[3, 0.1]]},
    }
    base.update(overrides)
    return acceptance_config(seed, **base)


@pytest.fixture
def tiny():
    return tiny_config


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
