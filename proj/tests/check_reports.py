#!/usr/bin/env python3
"""Runs the entflux binary on sample specs, validates inputs and JSON outputs
against the schemas in docs/, checks CSV headers, and checks that output bytes
do not depend on run or thread count."""

import csv
import io
import json
import os
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

BINARY = Path(sys.argv[1])
DOCS = Path(sys.argv[2])

SCHEMAS = {
    name: json.loads((DOCS / f"{name}.schema.json").read_text())
    for name in ("channel_spec", "network_spec", "sweep_spec", "report")
}

CSV_HEADERS = {
    "bound": ["channel_id", "sender", "receiver", "bound_bits", "lower_bound_bits", "formula"],
    "network": ["bob_index", "tau_i", "nbar_eff_i", "bottleneck_bits", "reduced_link_flux_bits"],
}

CASES = [
    ("bound", "channel_spec", {"type": "lossy", "eta": 0.5}),
    ("bound", "channel_spec", {"type": "lossy", "eta": 1.0}),
    ("bound", "channel_spec", {"type": "amplifier", "gain": 2.0}),
    ("bound", "channel_spec", {"type": "thermal_loss", "eta": 0.7, "nbar": 1.0}),
    ("bound", "channel_spec", {"type": "dephasing", "d": 2, "p": 0.1}),
    ("bound", "channel_spec", {"type": "dephasing", "d": 3, "probs": [0.8, 0.1, 0.1]}),
    ("bound", "channel_spec", {"type": "erasure", "d": 2, "p": 0.25}),
    ("bound", "channel_spec", {"type": "depolarizing", "d": 2, "p": 0.3, "id": "werner"}),
    ("bound", "channel_spec", {"type": "pauli", "d": 2, "probs": [0.7, 0.1, 0.1, 0.1]}),
    ("bound", "channel_spec", {"type": "kraus", "in_dims": [2], "out_dims": [2],
                               "ops": [[[1, 0], [0, [0, 1]]]]}),
    ("bound", "channel_spec", {"type": "fixture", "name": "copying-broadcast"}),
    ("network", "network_spec", {"etas": [0.9, 0.5, 0.5], "nbars": [0, 0, 0]}),
    ("network", "network_spec", {"etas": [0.8, 0.6], "nbars": [0.3, 0.1], "tap_convention": "transmit"}),
    ("verify", "channel_spec", {"type": "fixture", "name": "swap-interference"}),
    ("verify", "channel_spec", {"type": "fixture", "name": "non-covariant"}),
    ("verify", "channel_spec", {"type": "dephasing", "d": 2, "p": 0.25}),
    ("sweep", "sweep_spec", {"channel": {"type": "lossy", "eta": 0.5}, "param": "eta",
                             "from": 0.01, "to": 0.99, "steps": 9}),
    ("sweep", "sweep_spec", {"channel": {"type": "depolarizing", "d": 2, "p": 0.1}, "param": "p",
                             "from": 0.1, "to": 0.3, "steps": 3}),
]

REJECTED = [
    ("bound", "channel_spec", {"type": "lossy", "etaa": 0.5}),
    ("bound", "channel_spec", {"type": "lossy", "eta": 1.5}),
    ("network", "network_spec", {"etas": [0.9], "nbars": [0]}),
    ("sweep", "sweep_spec", {"channel": {"type": "lossy", "eta": 0.5}, "param": "eta",
                             "from": 0.5, "to": 0.1, "steps": 0}),
]

failures = []


def check(ok, what):
    if not ok:
        failures.append(what)
        print(f"FAIL {what}")


def run(command, spec_path, fmt, threads):
    with tempfile.NamedTemporaryFile(suffix=".out", delete=False) as out:
        out_path = out.name
    env = dict(os.environ, ENTFLUX_THREADS=str(threads))
    proc = subprocess.run(
        [str(BINARY), command, "--spec", spec_path, "--out", out_path, "--budget", "3000",
         "--seed", "11", "--format", fmt],
        env=env, capture_output=True, text=True)
    data = Path(out_path).read_bytes()
    os.unlink(out_path)
    return proc.returncode, data, proc.stdout + proc.stderr


def main():
    with tempfile.TemporaryDirectory() as tmp:
        for k, (command, schema, spec) in enumerate(CASES):
            label = f"{command} {json.dumps(spec)}"
            jsonschema.validate(spec, SCHEMAS[schema])
            spec_path = os.path.join(tmp, f"case{k}.json")
            Path(spec_path).write_text(json.dumps(spec))
            for fmt in ("json", "csv"):
                outputs = [run(command, spec_path, fmt, t) for t in (1, 1, 4)]
                codes = {code for code, _, _ in outputs}
                check(codes == {0}, f"{label} [{fmt}] exit codes {codes}: {outputs[0][2].strip()}")
                check(len({data for _, data, _ in outputs}) == 1, f"{label} [{fmt}] output not byte-identical")
                text = outputs[0][1].decode()
                if fmt == "json":
                    try:
                        jsonschema.validate(json.loads(text), SCHEMAS["report"])
                    except jsonschema.ValidationError as e:
                        check(False, f"{label} report schema: {e.message}")
                else:
                    rows = list(csv.reader(io.StringIO(text)))
                    check(len(rows) >= 2, f"{label} csv has header and data")
                    width = len(rows[0])
                    check(all(len(r) == width for r in rows), f"{label} csv rows have fixed width")
                    if command in CSV_HEADERS:
                        check(rows[0] == CSV_HEADERS[command], f"{label} csv header {rows[0]}")
                    if command == "sweep":
                        check(rows[0] == [spec["param"], "bound_bits", "lower_bound_bits"],
                              f"{label} csv header {rows[0]}")

        for k, (command, schema, spec) in enumerate(REJECTED):
            label = f"{command} {json.dumps(spec)}"
            schema_ok = jsonschema.Draft202012Validator(SCHEMAS[schema]).is_valid(spec)
            spec_path = os.path.join(tmp, f"bad{k}.json")
            Path(spec_path).write_text(json.dumps(spec))
            code, _, _ = run(command, spec_path, "json", 1)
            check(code == 2, f"{label} rejected with exit 2 (got {code})")
            if command != "sweep":
                check(not schema_ok, f"{label} rejected by schema")

    print(f"{len(CASES)} accepted and {len(REJECTED)} rejected specs checked, {len(failures)} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
