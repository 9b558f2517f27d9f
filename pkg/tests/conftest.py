import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trusteq.core import Instance, tokenize


@pytest.fixture
def simple_instance():
    return Instance(id="x0", text_a="alpha beta gamma delta", label=0)


@pytest.fixture
def simple_space(simple_instance):
    return tokenize(simple_instance)
