import pytest

from psabot.dm import DialogueManager
from psabot.lingform import Lexicon
from psabot.world import load_default


@pytest.fixture
def world():
    return load_default()


@pytest.fixture
def lexicon(world):
    return Lexicon(world)


@pytest.fixture
def dm(world):
    return DialogueManager(world)
