import json
import os
import tempfile
import unittest

import pandas

from edrlab.command import main
from edrlab.parse import (
    parse_sweep_table,
    read_wavefunction_csv,
    read_wavefunction_json,
)

DATA_DIR = os.path.join(os.path.dirname(os.path.realpath(__file__)), "data")
SMALL_FP = os.path.join(DATA_DIR, "small.ini")
GRID16_FP = os.path.join(DATA_DIR, "grid16.ini")


class CommandTests(unittest.TestCase):
    def setUp(self):
        self.dir = tempfile.mkdtemp()
        self.output_fp = os.path.join(self.dir, "out.json")

    def load_output(self):
        with open(self.output_fp) as f:
            return json.load(f)

    def test_solve_von_neumann(self):
        retval = main(["solve", "--preset", "von-neumann", "--output", self.output_fp])
        self.assertEqual(retval, 0)
        res = self.load_output()
        self.assertEqual(res["model"], "von-neumann")
        self.assertEqual(res["matrix"], {"a": 1.0, "b": 0.0, "c": 1.0, "d": 1.0})
        self.assertEqual(res["regime"]["tag"], "Nilpotent")

    def test_solve_identity(self):
        args = ["solve", "--alpha", "0", "--beta", "0", "--gamma", "0"]
        self.assertEqual(main(args + ["--output", self.output_fp]), 0)
        self.assertEqual(self.load_output()["matrix"], {"a": 1, "b": 0, "c": 0, "d": 1})

    def test_analyze_error_free(self):
        args = ["analyze", "--preset", "error-free:a=1", "--output", self.output_fp]
        self.assertEqual(main(args), 0)
        res = self.load_output()
        self.assertLess(res["epsilon"], 1e-12)
        self.assertAlmostEqual(res["eta"], 1.0)
        self.assertTrue(res["violates_heisenberg"])
        self.assertEqual(res["uniform_error"], {"kind": "finite", "value": 0.0})
        self.assertEqual(res["appleby"]["kind"], "indeterminate")
        self.assertIsNone(res["oracle_epsilon"])

    def test_analyze_oracle(self):
        csv_fp = os.path.join(self.dir, "rows.csv")
        wf_dir = os.path.join(self.dir, "wavefunctions")
        args = [
            "analyze",
            "--preset",
            "0,1,1",
            "--psi",
            "squeezed:r=0.4,q=1",
            "--oracle",
            "--grid-n",
            "2048",
            "--csv",
            csv_fp,
            "--save-wavefunctions",
            wf_dir,
            "--output",
            self.output_fp,
        ]
        self.assertEqual(main(args), 0)
        self.assertEqual(main(args), 0)
        res = self.load_output()
        for key in ("epsilon", "eta"):
            gap = abs(res["oracle_" + key] - res[key]) / res[key]
            self.assertLess(gap, 1e-6)

        rows = pandas.read_csv(csv_fp)
        self.assertEqual(len(rows), 2)
        self.assertEqual(list(rows["uniform_error"]), ["infinite", "infinite"])

        with open(os.path.join(wf_dir, "psi.csv")) as f:
            psi_w = read_wavefunction_csv(f)
        with open(os.path.join(wf_dir, "psi.json")) as f:
            self.assertEqual(read_wavefunction_json(f).n, 2048)
        self.assertAlmostEqual(psi_w.position_moments().mean, 1.0, delta=1e-10)

    def test_analyze_named_state(self):
        args = [
            "analyze",
            "--config",
            SMALL_FP,
            "--preset",
            "von-neumann",
            "--xi",
            "Contractive",
            "--output",
            self.output_fp,
        ]
        self.assertEqual(main(args), 0)
        res = self.load_output()
        self.assertEqual(res["xi"], "Contractive")
        self.assertGreater(res["epsilon"], 0.75)

    def test_sweep(self):
        csv_fp = os.path.join(self.dir, "sweep.csv")
        args = ["sweep", "--family", "error-free", "--range", "-1.9:5:8"]
        self.assertEqual(main(args + ["--output", csv_fp]), 0)
        with open(csv_fp) as f:
            df = parse_sweep_table(f)
        self.assertEqual(len(df), 8)
        self.assertTrue(df["violates_heisenberg"].all())

    def test_blw(self):
        args = ["blw", "--preset", "contractive", "--eps-eig", "0.001"]
        self.assertEqual(main(args + ["--output", self.output_fp]), 0)
        res = self.load_output()
        self.assertEqual(res["q_side"]["trend"], "converged")
        self.assertEqual(res["p_side"]["trend"], "diverging")
        self.assertTrue(res["consistent"])

    def test_usage_errors(self):
        self.assertEqual(main(["sweep", "--family", "gamma", "--values", ","]), 2)
        self.assertEqual(main(["blw", "--preset", "von-neumann", "--eps-eig", "0"]), 2)
        self.assertEqual(main(["solve", "--preset", "heisenberg"]), 2)
        self.assertEqual(main(["solve", "--alpha", "1"]), 2)
        missing = os.path.join(self.dir, "missing.ini")
        args = ["solve", "--preset", "von-neumann", "--config", missing]
        self.assertEqual(main(args), 2)
        self.assertEqual(main(["solve", "--preset", "von-neumann", "--hbar", "0"]), 2)

    def test_domain_errors(self):
        self.assertEqual(main(["solve", "--preset", "error-free:a=-3"]), 3)
        args = ["analyze", "--preset", "von-neumann", "--psi", "gaussian:var_q=0.1"]
        self.assertEqual(main(args), 3)

    def test_out_of_range_inputs(self):
        for couplings in (["1000", "0", "0"], ["709", "0", "0"]):
            args = ["solve", "--alpha", couplings[0], "--beta", couplings[1]]
            self.assertEqual(main(args + ["--gamma", couplings[2]]), 3)
        for psi in ("squeezed:r=1000", "contractive:r=300", "displaced:q=1e200"):
            args = ["analyze", "--preset", "von-neumann", "--psi", psi]
            self.assertEqual(main(args), 3)
        for eps_eig in ("1e-200", "1e200"):
            args = ["blw", "--preset", "von-neumann", "--eps-eig", eps_eig]
            self.assertEqual(main(args), 2)

    def test_grid_error(self):
        args = ["analyze", "--preset", "von-neumann", "--oracle", "--grid-n", "16"]
        self.assertEqual(main(args + ["--output", self.output_fp]), 4)
        args = ["analyze", "--preset", "von-neumann", "--oracle", "--grid-n", "1000"]
        self.assertEqual(main(args + ["--output", self.output_fp]), 4)

    def test_report(self):
        out_dir = os.path.join(self.dir, "bundle")
        self.assertEqual(main(["report", out_dir, "--config", SMALL_FP]), 0)
        with open(os.path.join(out_dir, "manifest.json")) as f:
            self.assertTrue(json.load(f)["passed"])

    def test_report_coarse_grid(self):
        out_dir = os.path.join(self.dir, "bundle")
        self.assertEqual(main(["report", out_dir, "--config", GRID16_FP]), 1)
        with open(os.path.join(out_dir, "manifest.json")) as f:
            self.assertFalse(json.load(f)["passed"])

    def test_report_rerun_is_byte_identical(self):
        bundles = [os.path.join(self.dir, name) for name in ("first", "second")]
        for out_dir in bundles:
            self.assertEqual(main(["report", out_dir, "--config", SMALL_FP]), 0)
        files = []
        for root, _, fns in os.walk(bundles[0]):
            for fn in fns:
                files.append(os.path.relpath(os.path.join(root, fn), bundles[0]))
        self.assertIn(os.path.join("sweeps", "gamma.csv"), files)
        for rel_fp in sorted(files):
            with open(os.path.join(bundles[0], rel_fp), "rb") as f:
                first = f.read()
            with open(os.path.join(bundles[1], rel_fp), "rb") as f:
                self.assertEqual(f.read(), first, rel_fp)

    def test_sweep_rerun_is_byte_identical(self):
        outputs = []
        for name in ("first.csv", "second.csv"):
            csv_fp = os.path.join(self.dir, name)
            args = ["sweep", "--family", "gamma", "--range", "0:2:21"]
            self.assertEqual(main(args + ["--output", csv_fp]), 0)
            with open(csv_fp, "rb") as f:
                outputs.append(f.read())
        self.assertEqual(outputs[0], outputs[1])


if __name__ == "__main__":
    unittest.main()
