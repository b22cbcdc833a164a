"""Run the CLI on a few configurations and validate each JSON report against docs/report.schema.json."""
import json
import pathlib
import subprocess
import sys

import jsonschema

cli, schema_path = sys.argv[1], pathlib.Path(sys.argv[2])
schema = json.loads(schema_path.read_text())
validator = jsonschema.Draft202012Validator(schema)

runs = [
    ["check", "--system", "ex1"],
    ["check", "--system", "emo"],
    ["conjugate", "--system", "emo", "--grid-points", "2"],
    ["report", "--system", "end_cfg", "--n-min", "0", "--n-max", "1", "--grid-points", "2"],
    ["derivatives", "--system", "ex2", "--n-min", "0", "--n-max", "0", "--grid-points", "2"],
]
failures = 0
for args in runs:
    proc = subprocess.run([cli, *args], capture_output=True, text=True)
    if proc.returncode not in (0, 1):
        print(f"{' '.join(args)}: exit {proc.returncode}: {proc.stderr.strip()}")
        failures += 1
        continue
    errors = sorted(validator.iter_errors(json.loads(proc.stdout)), key=lambda e: list(e.path))
    for e in errors:
        print(f"{' '.join(args)}: {'/'.join(map(str, e.path))}: {e.message}")
    failures += len(errors)
    print(f"{' '.join(args)}: {'ok' if not errors else 'invalid'}")
sys.exit(1 if failures else 0)
