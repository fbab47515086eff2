"""Validates config documents against schema/generation_config.schema.json.

Usage: check_schema.py SCHEMA SYNTHVOL_BINARY [CONFIG...]
The default config printed by the binary is always checked.
"""
import json
import subprocess
import sys

import jsonschema


def main():
    schema_path, binary, *configs = sys.argv[1:]
    with open(schema_path) as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    docs = {"default-config": json.loads(subprocess.check_output([binary, "default-config"]))}
    for path in configs:
        with open(path) as f:
            docs[path] = json.load(f)

    failed = False
    for name, doc in docs.items():
        errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.path))
        for e in errors:
            print(f"{name}: {'.'.join(map(str, e.path)) or '<root>'}: {e.message}")
        failed |= bool(errors)

    # The schema must reject what the loader rejects.
    bad = dict(docs["default-config"], unknown_field=1)
    if validator.is_valid(bad):
        print("schema accepts an unknown top-level field")
        failed = True
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
