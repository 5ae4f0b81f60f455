#!/usr/bin/env python3
"""End-to-end checks of the daef command line: exit codes, output files,
schemas and byte-level determinism."""

import hashlib
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

DAEF, SOURCE = sys.argv[1], pathlib.Path(sys.argv[2])
CONFIG = SOURCE / "configs" / "ionosphere_xavier.json"
SCHEMAS = SOURCE / "schemas"
failures = []


def run(*args, expect=0):
    proc = subprocess.run([DAEF, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        failures.append(f"{' '.join(map(str, args))}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


def validate(path, schema):
    doc = json.loads(pathlib.Path(path).read_text())
    try:
        jsonschema.validate(doc, json.loads((SCHEMAS / f"{schema}.schema.json").read_text()))
    except jsonschema.ValidationError as e:
        failures.append(f"{path} does not match {schema}: {e.message}")
    return doc


def digest(path):
    return hashlib.sha256(pathlib.Path(path).read_bytes()).hexdigest()


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)

    for cfg in sorted((SOURCE / "configs").glob("*.json")):
        validate(cfg, "config")

    bad = run("train", "--config", CONFIG, "--set", "architecture.layer_sizes=[33,8,14,32]", expect=2)
    check("must equal input size" in bad.stderr, f"invalid architecture message: {bad.stderr!r}")
    run("train", "--config", CONFIG, "--set", "nonsense=1", expect=2)
    run("train", "--config", tmp / "missing.json", expect=2)
    run("bogus", expect=2)

    run("train", "--config", CONFIG, "--workers", 1, "--out", tmp / "m1.json")
    run("train", "--config", CONFIG, "--workers", 4, "--out", tmp / "m4.json")
    check(digest(tmp / "m1.json") == digest(tmp / "m4.json"), "model file differs across worker counts")
    model = validate(tmp / "m1.json", "model")
    validate(tmp / "m1.json.summary.json", "train_summary")
    check(model["threshold"] is not None, "trained model has no threshold")

    run("eval", "--config", CONFIG, "--out", tmp / "r1.json")
    run("eval", "--config", CONFIG, "--workers", 3, "--out", tmp / "r2.json")
    check(digest(tmp / "r1.json") == digest(tmp / "r2.json"), "eval report differs across runs")
    report = validate(tmp / "r1.json", "eval_report")
    check(len(report["folds"]) == 10, "eval report fold count")
    run("eval", "--config", CONFIG, "--seed", 5, "--out", tmp / "r3.json")
    check(digest(tmp / "r3.json") != digest(tmp / "r1.json"), "seed has no effect on the report")
    run("eval", "--config", CONFIG, "--set", "folds=200", expect=3)

    run("fedsim", "--config", CONFIG, "--nodes", 1, "--out", tmp / "f1.json")
    check(validate(tmp / "f1.json", "fedsim_report")["equivalence_delta"] == 0.0, "one-node delta is not exactly 0")
    run("fedsim", "--config", CONFIG, "--nodes", 4, "--out", tmp / "f4.json")
    check(validate(tmp / "f4.json", "fedsim_report")["equivalence_delta"] < 1e-7, "four-node delta above 1e-7")
    post = run("fedsim", "--config", CONFIG, "--nodes", 3, "--mode", "post_hoc", "--out", tmp / "fp.json")
    check("not asserted" in post.stdout, "post_hoc delta is not labelled as unasserted")
    check(validate(tmp / "fp.json", "fedsim_report")["mode"] == "post_hoc", "post_hoc report mode")
    run("fedsim", "--config", CONFIG, "--mode", "gossip", expect=2)

    run("predict", "--config", CONFIG, "--model", tmp / "m1.json", "--out", tmp / "scores.csv")
    lines = (tmp / "scores.csv").read_text().splitlines()
    check(lines[0] == "index,error,anomaly", f"predict header {lines[0]!r}")
    check(len(lines) == 352, f"predict wrote {len(lines) - 1} rows")

    model["threshold"] = None
    (tmp / "bare.json").write_text(json.dumps(model))
    bare = run("predict", "--config", CONFIG, "--model", tmp / "bare.json", "--out", tmp / "bare.csv")
    check("warning" in bare.stderr, "no warning for a model without threshold")
    check((tmp / "bare.csv").read_text().splitlines()[0] == "index,error", "flag column not omitted")

    (tmp / "broken.json").write_text((tmp / "m1.json").read_text()[:100])
    run("predict", "--config", CONFIG, "--model", tmp / "broken.json", expect=3)

    run("threshold", "--config", CONFIG, "--model", tmp / "m1.json")

for f in failures:
    print("FAIL:", f)
print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
