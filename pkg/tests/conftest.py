import pytest

from cardsudoku.fixtures import sample_puzzle, sample_solution


@pytest.fixture(scope="session")
def puzzle():
    return sample_puzzle()


@pytest.fixture(scope="session")
def solution():
    return sample_solution()


CONFIGS = [("A", False), ("A", True), ("B", False), ("B", True)]
