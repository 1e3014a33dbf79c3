# Copyright (c) urv contributors.
# SPDX-License-Identifier: Apache-2.0
"""Validates CLI JSON reports of every verdict against docs/report.schema.json."""

import json
import subprocess
import sys

import jsonschema


def main() -> int:
    binary, schema_path, samples = sys.argv[1:4]
    with open(schema_path, encoding="utf-8") as f:
        schema = json.load(f)
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)

    runs = [
        (["verify", f"{samples}/tiny.urvnet", f"{samples}/tiny_falsifiable.urvprop"], "unsafe", 1),
        (["verify", f"{samples}/tiny.urvnet", f"{samples}/tiny_bounded.urvprop", "--epochs", "5"], "unknown", 0),
        (["verify", f"{samples}/tiny.urvnet", f"{samples}/tiny_bounded.urvprop", "--epochs", "5", "--no-timings"],
         "unknown", 0),
        (["verify", f"{samples}/identity.urvnet", "--acas-prop", "1"], "config_error", 2),
        (["verify", "/missing/net.urvnet", f"{samples}/nonpositive.urvprop"], "config_error", 2),
    ]
    failures = 0
    for args, verdict, code in runs:
        proc = subprocess.run([binary, *args, "--json"], capture_output=True, text=True, check=False)
        report = json.loads(proc.stdout)
        errors = [e.message for e in validator.iter_errors(report)]
        if proc.returncode != code or report["verdict"] != verdict or errors:
            failures += 1
            print(f"FAIL {' '.join(args)}: exit {proc.returncode}, verdict {report['verdict']}, {errors}")
        else:
            print(f"ok   {verdict}: {' '.join(args)}")

    # The schema must reject documents that break the cross-field rules.
    bad = dict(report)
    bad["verdict"] = "unknown"
    bad["cl"] = None
    if validator.is_valid(bad):
        failures += 1
        print("FAIL schema accepted an unknown report without cl")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
