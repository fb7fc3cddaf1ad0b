"""Shipped JSON schemas for every artifact the tool writes.

Each document type has one schema file under data/schemas/.  validate()
needs the optional jsonschema package (installed with the test extra).
"""

import json
from importlib import resources

from .errors import ConfigError

_SUFFIX = ".schema.json"


def _schema_dir():
    return resources.files("crossphish.data") / "schemas"


def schema_names():
    """Names of every shipped schema, without the .schema.json suffix."""
    return sorted(p.name[:-len(_SUFFIX)] for p in _schema_dir().iterdir()
                  if p.name.endswith(_SUFFIX))


def load_schema(name):
    path = _schema_dir() / (name + _SUFFIX)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(
            f"no schema {name!r}; shipped: {schema_names()}") from None
    return json.loads(text)


def validate(doc, name):
    """Raise jsonschema.ValidationError unless doc matches the named schema."""
    import jsonschema
    from referencing import Registry, Resource

    registry = Registry().with_resources(
        (f"https://crossphish.invalid/schemas/{n}{_SUFFIX}",
         Resource.from_contents(load_schema(n)))
        for n in schema_names())
    jsonschema.Draft202012Validator(
        load_schema(name), registry=registry).validate(doc)
