"""End-to-end checks of the splitstream command-line tool.

usage: test_cli.py <splitstream binary> <schema dir> <test data dir>
"""

import csv
import io
import json
import math
import os
import subprocess
import sys
import tempfile

import jsonschema

BIN, SCHEMAS, DATA = sys.argv[1:4]
failures = []


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("SPLITSTREAM_SEED", None)
    full_env.update(env or {})
    return subprocess.run([BIN, *args], capture_output=True, text=True, env=full_env)


def data(name):
    return os.path.join(DATA, name)


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# splitstream "), lines[0]
    return lines[0], list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def case(fn):
    try:
        fn()
        print(f"ok   {fn.__name__}")
    except Exception as e:  # noqa: BLE001
        failures.append(fn.__name__)
        print(f"FAIL {fn.__name__}: {e!r}")
    return fn


@case
def derive_measure_prints_atoms():
    r = run("derive-measure", "--law", data("law_binary37.json"))
    assert r.returncode == 0, r.stderr
    header, rows = parse_csv(r.stdout)
    assert "seed=" in header and "config_hash=" in header
    assert [float(x["w"]) for x in rows] == [0.3, 0.7]
    assert [float(x["q"]) for x in rows] == [0.3, 0.7]
    assert math.isclose(float(rows[0]["mean_G"]), 2.0)


@case
def check_reports_span():
    r = run("check", "--measure", data("measure_half_quarter.json"))
    assert r.returncode == 0, r.stderr
    _, rows = parse_csv(r.stdout)
    assert math.isclose(float(rows[0]["span"]), math.log(2.0), rel_tol=1e-9)
    r = run("check", "--law", data("law_binary37.json"))
    _, rows = parse_csv(r.stdout)
    assert rows[0]["span"] == "absent"
    assert float(rows[0]["delta"]) == 0.7


@case
def malformed_law_is_a_usage_error():
    r = run("simulate", "--law", data("bad_law.json"), "--n", "4", "--trials", "10")
    assert r.returncode == 2, r.returncode
    assert r.stdout == ""
    assert "config error" in r.stderr


@case
def unknown_config_key_is_a_usage_error():
    r = run("validate", "--config", data("config_unknown_key.json"))
    assert r.returncode == 2, (r.returncode, r.stderr)


@case
def bad_flags_are_usage_errors():
    assert run("no-such-command").returncode == 2
    assert run("simulate", "--law", data("law_symmetric.json")).returncode == 2
    assert run("simulate", "--law", data("law_symmetric.json"), "--n", "x").returncode == 2


@case
def lambda_c_without_sign_change():
    r = run("lambda-c", "--measure", data("measure_half.json"), "--d", "2", "--bracket", "0.05:0.3", "--tol", "1e-4")
    assert r.returncode == 2, r.returncode
    assert "sign" in r.stderr.lower(), r.stderr


@case
def lambda_c_symmetric():
    r = run("lambda-c", "--measure", data("measure_half.json"), "--d", "2", "--bracket", "0.05:1", "--tol", "1e-7")
    assert r.returncode == 0, r.stderr
    _, rows = parse_csv(r.stdout)
    assert abs(float(rows[0]["lambda_c"]) - 0.360177) < 1e-5


@case
def solve_output_validates():
    with open(os.path.join(SCHEMAS, "solve.schema.json")) as f:
        schema = json.load(f)
    for args in (["--measure", data("measure_half.json"), "--lambda", "0.2", "--d", "2"],
                 ["--law", data("law_binary37.json"), "--lambda", "0.1", "--d", "3", "--paths", "2e3", "--seed", "3"]):
        r = run("solve", *args)
        assert r.returncode == 0, r.stderr
        doc = json.loads(r.stdout)
        jsonschema.validate(doc, schema)
    doc = json.loads(run("solve", "--measure", data("measure_half.json"), "--lambda", "0.2", "--d", "2").stdout)
    assert math.isclose(doc["C"][1] / doc["C"][0], 1 / 0.6, rel_tol=1e-9)


@case
def solve_past_the_root_fails():
    r = run("solve", "--measure", data("measure_half.json"), "--lambda", "0.5", "--d", "2")
    assert r.returncode == 1, r.returncode
    assert r.stdout == ""


@case
def input_documents_follow_their_schemas():
    with open(os.path.join(SCHEMAS, "law.schema.json")) as f:
        law = json.load(f)
    with open(os.path.join(SCHEMAS, "measure.schema.json")) as f:
        measure = json.load(f)
    for name in ("law_binary37.json", "law_symmetric.json", "law_mixed.json"):
        with open(data(name)) as f:
            jsonschema.validate(json.load(f), law)
    for name in ("measure_half.json", "measure_half_quarter.json"):
        with open(data(name)) as f:
            jsonschema.validate(json.load(f), measure)


@case
def reruns_are_byte_identical():
    commands = [
        ["simulate", "--law", data("law_binary37.json"), "--arrivals", "poisson:0.1", "--n", "8,32", "--trials", "2000"],
        ["simulate", "--law", data("law_binary37.json"), "--method", "stack", "--n", "8", "--trials", "2000"],
        ["probe", "--law", data("law_symmetric.json"), "--lambda-grid", "0.2:0.5:0.3", "--horizon", "3000", "--reps", "3"],
        ["xinf", "--law", data("law_binary37.json"), "--s", "0.1", "--samples", "5e3"],
        ["solve", "--law", data("law_binary37.json"), "--lambda", "0.1", "--paths", "1e3"],
        ["mean-size", "--law", data("law_binary37.json"), "--lambda", "0.1", "--paths", "1e3", "--n-grid", "4,64"],
        ["asymptotics", "--measure", data("measure_half_quarter.json"), "--lambda", "0.1", "--paths", "1e3", "--points", "8"],
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for k, cmd in enumerate(commands):
            outs = []
            for rep, workers in enumerate(("1", "3")):
                path = os.path.join(tmp, f"{k}_{rep}.out")
                r = run(*cmd, "--seed", "11", "--workers", workers, "--out", path)
                assert r.returncode == 0, (cmd, r.stderr)
                with open(path, "rb") as f:
                    outs.append(f.read())
            assert outs[0] == outs[1], cmd[0]


@case
def seed_from_environment_and_flag_precedence():
    a = run("xinf", "--law", data("law_binary37.json"), "--samples", "1000", env={"SPLITSTREAM_SEED": "42"})
    assert "seed=42 " in a.stdout.splitlines()[0]
    b = run("xinf", "--law", data("law_binary37.json"), "--samples", "1000", "--seed", "42")
    assert a.stdout == b.stdout
    c = run("xinf", "--config", data("config_symmetric.json"), "--samples", "1000")
    assert "seed=5 " in c.stdout.splitlines()[0]
    d = run("xinf", "--config", data("config_symmetric.json"), "--samples", "1000", "--seed", "9")
    assert "seed=9 " in d.stdout.splitlines()[0]


@case
def xinf_closed_form_for_binary():
    r = run("xinf", "--law", data("law_binary37.json"), "--s", "0.1", "--samples", "1e5")
    _, rows = parse_csv(r.stdout)
    est, se, closed = (float(rows[0][k]) for k in ("estimate", "std_error", "closed_form"))
    assert abs(est - closed) < 4 * se
    r = run("xinf", "--measure", data("measure_half_quarter.json"), "--samples", "100")
    _, rows = parse_csv(r.stdout)
    assert rows[0]["closed_form"] == ""


@case
def simulate_agrees_with_mean_size():
    sim = run("simulate", "--law", data("law_symmetric.json"), "--arrivals", "poisson:0.25", "--n", "10",
              "--trials", "40000", "--seed", "2")
    ana = run("mean-size", "--measure", data("measure_half.json"), "--lambda", "0.25", "--n-grid", "10")
    _, s = parse_csv(sim.stdout)
    _, a = parse_csv(ana.stdout)
    assert abs(float(s[0]["mean"]) - float(a[0]["analytic"])) < 4 * float(s[0]["std_error"])
    assert a[0]["trusted"] == "true"


@case
def asymptotics_curve_and_slope():
    r = run("asymptotics", "--measure", data("measure_half.json"), "--lambda", "0", "--d", "2", "--points", "16")
    header, rows = parse_csv(r.stdout)
    assert len(rows) == 16 and "F_1" in rows[0]
    mean = sum(float(x["slope"]) for x in rows) / len(rows)
    assert abs(mean - 2 / math.log(2)) < 1e-3
    r = run("asymptotics", "--law", data("law_binary37.json"), "--lambda", "0", "--d", "2", "--paths", "1e3")
    _, rows = parse_csv(r.stdout)
    assert rows[0]["variant"] == "corrected"
    assert run("asymptotics", "--measure", data("measure_half.json"), "--variant", "other").returncode == 2


@case
def validate_config_passes():
    with tempfile.TemporaryDirectory() as tmp:
        out = os.path.join(tmp, "report.csv")
        r = run("validate", "--config", data("config_symmetric.json"), "--out", out)
        assert r.returncode == 0, r.stderr
        with open(out) as f:
            _, rows = parse_csv(f.read())
        assert rows and all(x["verdict"] in ("PASS", "SKIP") for x in rows)


print(f"{len(failures)} failing case(s)")
sys.exit(1 if failures else 0)
