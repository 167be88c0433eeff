"""JSON schemas for input files and ``--json`` outputs."""
import json
from importlib import resources


def load_schema(name: str) -> dict:
    return json.loads(resources.files(__name__).joinpath(f"{name}.schema.json").read_text())
