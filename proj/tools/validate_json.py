#!/usr/bin/env python3
"""Validate CLI JSON outputs against the schemas in schemas/.

usage: validate_json.py SCHEMA_DIR SCHEMA_NAME FILE [FILE ...]
"""
import json
import pathlib
import sys

import jsonschema
from referencing import Registry, Resource


def main(argv):
    if len(argv) < 4:
        print(__doc__.strip(), file=sys.stderr)
        return 2
    schema_dir = pathlib.Path(argv[1])
    resources = []
    for path in sorted(schema_dir.glob("*.schema.json")):
        schema = json.loads(path.read_text())
        resources.append((schema["$id"], Resource.from_contents(schema)))
    registry = Registry().with_resources(resources)
    schema = json.loads((schema_dir / f"{argv[2]}.schema.json").read_text())
    validator = jsonschema.Draft202012Validator(schema, registry=registry)
    failed = 0
    for name in argv[3:]:
        errors = sorted(validator.iter_errors(json.loads(pathlib.Path(name).read_text())),
                        key=lambda e: list(e.path))
        for error in errors:
            print(f"{name}: {'/'.join(map(str, error.path))}: {error.message}", file=sys.stderr)
        failed += bool(errors)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
