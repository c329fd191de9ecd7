import io
import json
import math
import os
import tempfile
import unittest

import numpy

from edrlab.config import RunConfig, SweepConfig
from edrlab.moments import ground
from edrlab.parse import SpecError, parse_state_spec, parse_sweep_table
from edrlab.report import (
    EDReport,
    ReportWriter,
    ReproductionSuite,
    blw_summary,
    build_report,
    family_params,
    solve_summary,
    sweep_table,
    write_bundle,
    write_csv,
)
from edrlab.supremum import FINITE, INDETERMINATE, INFINITE
from edrlab.symplectic import CouplingParams, error_free_params, omega

DATA_DIR = os.path.join(os.path.dirname(os.path.realpath(__file__)), "data")
SMALL_FP = os.path.join(DATA_DIR, "small.ini")
GRID16_FP = os.path.join(DATA_DIR, "grid16.ini")


class BuildReportTests(unittest.TestCase):
    def setUp(self):
        self.ground = parse_state_spec("ground")

    def test_von_neumann(self):
        report = build_report(CouplingParams(0, 0, 1), self.ground, self.ground)
        self.assertEqual(tuple(report.matrix), (1, 0, 1, 1))
        self.assertAlmostEqual(report.product, 0.5, delta=1e-12)
        self.assertFalse(report.violates_heisenberg)
        self.assertFalse(report.has_oracle)
        self.assertIsNone(report.oracle_agrees())
        self.assertEqual(report.appleby.kind, FINITE)

    def test_error_free(self):
        report = build_report(
            error_free_params(1.0), self.ground, self.ground, model="contractive"
        )
        self.assertLess(report.epsilon, 1e-12)
        self.assertAlmostEqual(report.eta, 1.0)
        self.assertTrue(report.violates_heisenberg)
        self.assertEqual(report.uniform_disturbance.kind, INFINITE)
        self.assertEqual(report.appleby.kind, INDETERMINATE)
        self.assertEqual(report.blw.kind, INDETERMINATE)

    def test_oracle(self):
        psi = parse_state_spec("contractive:r=0.3,q=0.5")
        report = build_report(
            CouplingParams(0, 1, 1), psi, self.ground, oracle=True, grid_n=2048
        )
        self.assertTrue(report.oracle_agrees())
        self.assertEqual(report.oracle_tolerance, 1e-6)

    def test_json_round_trip(self):
        report = build_report(
            CouplingParams(0.3, -0.2, 0.9), self.ground, self.ground, "m", "g", "g"
        )
        d = json.loads(json.dumps(report.to_dict()))
        self.assertEqual(list(d), list(EDReport._fields) + ["oracle_agrees"])
        self.assertIsNone(d["oracle_agrees"])
        self.assertEqual(EDReport.from_dict(d), report)

    def test_oracle_disagreement_recorded(self):
        psi = parse_state_spec("contractive:r=0.3,q=0.5")
        report = build_report(
            CouplingParams(0, 1, 1), psi, self.ground, oracle=True, grid_n=2048
        )
        self.assertTrue(report.to_dict()["oracle_agrees"])
        off = report._replace(oracle_eta=report.eta * 1.01)
        self.assertFalse(off.oracle_agrees())
        d = off.to_dict()
        self.assertFalse(d["oracle_agrees"])
        self.assertEqual(EDReport.from_dict(d), off)


class SolveSummaryTests(unittest.TestCase):
    def test_identity(self):
        summary = solve_summary(CouplingParams(0, 0, 0))
        self.assertEqual(summary["matrix"], {"a": 1.0, "b": 0.0, "c": 0.0, "d": 1.0})
        self.assertEqual(summary["regime"]["tag"], "Nilpotent")
        self.assertEqual(summary["det_residual"], 0.0)
        self.assertFalse(summary["full_heisenberg"])


class SweepTableTests(unittest.TestCase):
    def test_family_params(self):
        self.assertEqual(family_params("gamma", 2.0).as_tuple(), (0, 0, 2))
        self.assertEqual(family_params("alpha", 0.5, (0, 1, 1)).as_tuple(), (0.5, 1, 1))
        self.assertAlmostEqual(family_params("error-free", 0.0).gamma, omega(0.0))
        self.assertRaises(SpecError, family_params, "delta", 1.0)

    def test_error_free_family(self):
        df = sweep_table("error-free", numpy.linspace(-1.9, 5, 12), ground(), ground())
        self.assertTrue((df["epsilon"] <= 1e-9).all())
        numpy.testing.assert_allclose(df["eta"], 1.0, atol=1e-9)
        numpy.testing.assert_allclose(df["c"], 1.0, atol=1e-9)
        self.assertTrue(df["violates_heisenberg"].all())

    def test_gamma_family(self):
        # Product gamma * sqrt((gamma - 1)^2 + 1) / 2 falls below 1/2 for gamma < 1
        values = [0.25, 0.5, 2.0]
        df = sweep_table("gamma", values, ground(), ground())
        self.assertEqual(list(df["value"]), values)
        self.assertEqual(list(df["violates_heisenberg"]), [True, True, False])
        numpy.testing.assert_allclose(df["sharp_bound"], [0.125, 0.25, 1.0])

    def test_csv(self):
        df = sweep_table("beta", [-1.0, 1.0], ground(), ground(), fixed=(0, 0, 1))
        f = io.StringIO()
        write_csv(f, df)
        f.seek(0)
        back = parse_sweep_table(f)
        numpy.testing.assert_array_equal(back["eta"].to_numpy(), df["eta"].to_numpy())

    def test_empty(self):
        self.assertRaises(SpecError, sweep_table, "gamma", [], ground(), ground())


class BlwSummaryTests(unittest.TestCase):
    def test_von_neumann(self):
        summary = blw_summary(CouplingParams(0, 0, 1), ground(), SweepConfig())
        self.assertTrue(summary["consistent"])
        self.assertEqual(summary["eps_eig"], 0.01)
        self.assertAlmostEqual(summary["uniform_error"]["value"], math.sqrt(0.5))
        self.assertEqual(summary["q_side"]["trend"], "converged")

    def test_error_free(self):
        summary = blw_summary(error_free_params(1.0), ground(), SweepConfig(), 0.001)
        self.assertEqual(summary["eps_eig"], 0.001)
        self.assertEqual(summary["p_side"]["trend"], "diverging")
        self.assertGreater(summary["p_side"]["value"], 1e3)
        self.assertEqual(summary["blw"]["kind"], INDETERMINATE)
        self.assertTrue(summary["consistent"])


class ReportWriterTests(unittest.TestCase):
    def test_nested_output(self):
        d = tempfile.mkdtemp()
        writer = ReportWriter(os.path.join(d, "out"))
        writer.write_json({"x": 0.1}, "reports", "a.json")
        with open(os.path.join(d, "out", "reports", "a.json")) as f:
            self.assertEqual(json.load(f), {"x": 0.1})


class ReproductionSuiteTests(unittest.TestCase):
    def test_small_config(self):
        results = list(ReproductionSuite(RunConfig.load(SMALL_FP)).run())
        self.assertEqual([r.name for r in results], ReproductionSuite.check_names)
        failed = [r for r in results if not r.passed]
        self.assertEqual(failed, [])

    def test_coarse_grid_fails_oracle_checks(self):
        results = dict(
            (r.name, r) for r in ReproductionSuite(RunConfig.load(GRID16_FP)).run()
        )
        self.assertFalse(results["oracle_equivalence"].passed)
        self.assertIn("grid error", results["oracle_equivalence"].detail)
        self.assertFalse(results["von_neumann"].passed)
        self.assertTrue(results["finite_family"].passed)


class BundleTests(unittest.TestCase):
    def test_small_bundle(self):
        d = tempfile.mkdtemp()
        self.assertTrue(write_bundle(RunConfig.load(SMALL_FP), d))
        with open(os.path.join(d, "manifest.json")) as f:
            manifest = json.load(f)
        self.assertTrue(manifest["passed"])
        self.assertEqual(len(manifest["checks"]), 10)
        self.assertEqual(manifest["config"]["checks"]["seed"], 7)
        for fp in (
            ("reports", "von-neumann.json"),
            ("reports", "contractive.json"),
            ("blw", "contractive.json"),
            ("sweeps", "error-free.csv"),
            ("sweeps", "gamma.csv"),
        ):
            self.assertTrue(os.path.exists(os.path.join(d, *fp)), fp)
        with open(os.path.join(d, "reports", "contractive.json")) as f:
            report = EDReport.from_dict(json.load(f))
        self.assertEqual(report.xi, "Contractive")
        self.assertTrue(report.violates_heisenberg)


if __name__ == "__main__":
    unittest.main()
