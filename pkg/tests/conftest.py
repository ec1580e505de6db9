import pytest
import torch

# The container advertises a single CPU but has more headroom; four threads
# cut step time roughly 3x and keep runs reproducible (fixed count).
torch.set_num_threads(4)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: end-to-end criteria on the shipped fixture"
    )


@pytest.fixture(scope="session")
def tiny_vocab():
    from masksum.vocab import build_vocab

    return build_vocab(["alpha beta gamma delta epsilon zeta eta theta"])
