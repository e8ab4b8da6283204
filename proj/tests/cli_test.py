"""End-to-end checks of the ttd command-line tool: schema, determinism, exit codes."""

import json
import math
import os
import struct
import subprocess
import sys
import tempfile
import unittest

import jsonschema

CLI = os.environ["TTD_CLI"]
SCHEMA = os.environ["TTD_SCHEMA"]
SAMPLES = os.environ["TTD_SAMPLES"]

with open(SCHEMA) as f:
    VALIDATOR = jsonschema.Draft202012Validator(json.load(f))


def run(*args, expect=0, cwd=None):
    p = subprocess.run([CLI, *map(str, args)], capture_output=True, cwd=cwd)
    if p.returncode != expect:
        raise AssertionError(f"exit {p.returncode} != {expect}: {args}\n{p.stderr.decode()}")
    return p


def write_ttb1(path, shape, values):
    with open(path, "wb") as f:
        f.write(b"TTB1")
        f.write(struct.pack("<Q", len(shape)))
        for e in shape:
            f.write(struct.pack("<Q", e))
        f.write(struct.pack(f"<{len(values)}d", *values))


def random_values(n, seed):
    # LCG: reproducible without numpy
    x, out = seed, []
    for _ in range(n):
        x = (6364136223846793005 * x + 1442695040888963407) % 2**64
        out.append((x >> 11) / 2**53 - 0.5)
    return out


class CliTest(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = self.tmp.name

    def tearDown(self):
        self.tmp.cleanup()

    def path(self, name):
        return os.path.join(self.dir, name)

    def report(self, *args):
        """Runs twice with identical argv; both reports must validate and be byte-identical."""
        a = tempfile.mkdtemp(dir=self.dir)
        b = tempfile.mkdtemp(dir=self.dir)
        run("--report", "report.json", *args, cwd=a)
        run("--report", "report.json", *args, cwd=b)
        with open(os.path.join(a, "report.json"), "rb") as fa, open(os.path.join(b, "report.json"), "rb") as fb:
            ra, rb = fa.read(), fb.read()
        self.assertEqual(ra, rb, "report is not deterministic")
        rep = json.loads(ra)
        VALIDATOR.validate(rep)
        self.assertIsNone(rep["timings"])
        return rep

    def test_decompose_lossless(self):
        shape = [3, 4, 5, 2]
        write_ttb1(self.path("in.ttb1"), shape, random_values(120, 1))
        rep = self.report("decompose", self.path("in.ttb1"), "--algo", "ttsvd", "--eps-rel", "0.0", self.path("out.ttx1"))
        ranks = rep["result"]["ranks"]
        for n, r in enumerate(ranks):
            left = math.prod(shape[: n + 1])
            right = math.prod(shape[n + 1 :])
            self.assertLessEqual(r, min(left, right))
        self.assertLess(rep["metrics"]["relative_error"], 1e-24)
        with open(self.path("out.ttx1"), "rb") as f:
            self.assertEqual(f.read(4), b"TTX1")

    def test_decompose_every_algorithm(self):
        write_ttb1(self.path("in.ttb1"), [3, 3, 3, 3], random_values(81, 2))
        for algo, extra in [("ascu1", []), ("ascu2", []), ("adcu", ["--overlap", "0"]), ("atcu", []),
                            ("amcu", ["--block", "2", "--stride", "1"])]:
            rep = self.report("decompose", self.path("in.ttb1"), self.path("o.ttx1"), "--algo", algo,
                              "--ranks", "2", "--max-sweeps", "4", *extra)
            self.assertEqual(rep["result"]["ranks"], [2, 2, 2])
            errs = rep["sweep_errors"]
            self.assertTrue(all(b <= a * (1 + 1e-10) for a, b in zip(errs, errs[1:])), algo)

    def test_round(self):
        write_ttb1(self.path("in.ttb1"), [4, 4, 4], random_values(64, 3))
        run("decompose", self.path("in.ttb1"), self.path("x.ttx1"), "--algo", "ttsvd", "--eps-rel", "0")
        rep = self.report("round", self.path("x.ttx1"), self.path("y.ttx1"), "--ranks", "2,2")
        self.assertEqual(rep["result"]["ranks"], [2, 2])

    def test_denoise_signal_clean_check(self):
        rep = self.report("denoise-signal", "--kind", "damped", "--K", 16384, "--snr", -20, "--algo", "ascu1",
                          "--eps-abs", "auto", "-o", self.path("y.csv"))
        self.assertEqual(rep["clean_check"]["ranks"], [2] * 11)
        self.assertEqual(rep["metrics"]["noise_source"], "generated")
        self.assertTrue(rep["metrics"]["budget_met"])
        with open(self.path("y.csv")) as f:
            self.assertEqual(sum(1 for _ in f), 16384)

    def test_denoise_signal_from_file_estimates_noise(self):
        run("denoise-signal", "--kind", "x2", "--K", 1024, "--algo", "ttsvd", "--eps-rel", "0", "-o", self.path("x.csv"))
        rep = self.report("denoise-signal", "-i", self.path("x.csv"), "--algo", "adcu", "--eps-abs", "auto")
        self.assertEqual(rep["metrics"]["noise_source"], "estimated")

    def test_denoise_image(self):
        img = os.path.join(SAMPLES, "astronaut64.ppm")
        rep = self.report("denoise-image", img, self.path("out.ppm"), "--snr", 10, "--seed", 1, "--patch", "4,4",
                          "--neighbour", 1, "--algo", "ascu1", "--rank-map", self.path("rank.pgm"), "--threads", 2)
        m = rep["metrics"]
        self.assertGreater(m["denoised"]["psnr"], m["noisy"]["psnr"])
        self.assertGreaterEqual(rep["result"]["rank_map_min"], 4)
        with open(self.path("rank.pgm"), "rb") as f:
            self.assertEqual(f.read(2), b"P5")

    def test_bss(self):
        rep = self.report("bss", "--K", 3 * 2**10, "--snr", 10, "--max-outer", 20, "-o", self.path("src"))
        self.assertEqual(len(rep["output"]), 3)
        res = rep["residuals"]
        self.assertTrue(all(b <= a * (1 + 1e-12) for a, b in zip(res, res[1:])))
        self.assertEqual(len(rep["metrics"]["sae"]), 3)

    def test_bench_ordering(self):
        run("--report", self.path("r.json"), "bench", "--kind", "x1", "--K", 16384, "--snr", 0,
            "--algos", "ttsvd,ascu1,adcu", "--seeds", 10, "--csv", self.path("agg.csv"))
        with open(self.path("r.json")) as f:
            VALIDATOR.validate(json.load(f))
        with open(self.path("agg.csv")) as f:
            lines = f.read().strip().split("\n")
        head = lines[0].split(",")
        rows = {r.split(",")[0]: dict(zip(head, r.split(","))) for r in lines[1:]}
        sae = {k: float(v["mean_sae_db"]) for k, v in rows.items()}
        self.assertGreaterEqual(sae["ascu1"], sae["ttsvd"])
        self.assertGreaterEqual(sae["adcu"], sae["ttsvd"])
        self.assertTrue(all(int(v["budget_met"]) == 10 for v in rows.values()))

    def test_timings_flag(self):
        run("--timings", "--report", self.path("t.json"), "denoise-signal", "--K", 256, "--algo", "ttsvd",
            "--eps-rel", "0.1")
        with open(self.path("t.json")) as f:
            rep = json.load(f)
        VALIDATOR.validate(rep)
        self.assertIn("decompose", rep["timings"])

    def test_exit_codes(self):
        run(expect=1)
        run("nosuch", expect=1)
        run("decompose", self.path("missing.ttb1"), self.path("o.ttx1"), "--eps-rel", "0.1", expect=2)
        write_ttb1(self.path("in.ttb1"), [2, 2], [1.0, 2.0, 3.0, 4.0])
        run("decompose", self.path("in.ttb1"), self.path("o.ttx1"), expect=1)
        run("decompose", self.path("in.ttb1"), self.path("o.ttx1"), "--ranks", "1,1", expect=1)
        run("decompose", self.path("in.ttb1"), self.path("o.ttx1"), "--algo", "ksvd", "--ranks", "1", expect=1)
        with open(self.path("bad.ttb1"), "wb") as f:
            f.write(b"TTB1\x02")
        run("decompose", self.path("bad.ttb1"), self.path("o.ttx1"), "--ranks", "1", expect=2)
        write_ttb1(self.path("nan.ttb1"), [2, 2], [1.0, float("nan"), 3.0, 4.0])
        run("decompose", self.path("nan.ttb1"), self.path("o.ttx1"), "--ranks", "1", expect=3)
        run("denoise-image", os.path.join(SAMPLES, "astronaut64.ppm"), self.path("o.ppm"), expect=1)
        run("denoise-image", self.path("in.ttb1"), self.path("o.ppm"), "--sigma", 1, expect=2)


if __name__ == "__main__":
    unittest.main(argv=sys.argv[:1], verbosity=2)
