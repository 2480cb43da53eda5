"""
Test Main Controller - Unit tests cho MainController và giao diện dòng lệnh.

Tests:
- Các lệnh scale, barrier, verify, simulate ghi đúng file
- Mã thoát cho lỗi tham số, lỗi mô hình và verdict thất bại với --strict
- reproduce-figures ghi bốn CSV và summary.json
"""

import unittest
import os
import sys
import shutil
import tempfile
from unittest import mock

import numpy as np

# Thêm thư mục gốc vào path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import main
from controllers.main_controller import MainController
from controllers.reproduction_controller import ReproductionController, ReproductionState, verdict_mismatches
from models.config import Config
from models.presets import load_preset
from services.file_service import FileService
from services.scale_service import ScaleService
from utils.error_handler import ExitCode


def _quiet_config(folder: str) -> Config:
    config = Config(config_path=os.path.join(folder, 'settings.json'))
    config.output_settings.log_dir = ""
    config.output_settings.output_folder = os.path.join(folder, 'output')
    return config


class TestCommandLine(unittest.TestCase):
    """Test cases cho main.run."""

    def setUp(self):
        """Setup trước mỗi test."""
        self.temp_dir = tempfile.mkdtemp()
        config = _quiet_config(self.temp_dir)
        config.save()
        self.config_path = config.config_path
        self.out = os.path.join(self.temp_dir, 'out')

    def tearDown(self):
        """Cleanup sau mỗi test."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _run(self, *args):
        return main.run(list(args) + ['--out', self.out, '--config', self.config_path, '--quiet'])

    def test_scale_writes_table(self):
        """Test scale ghi scale.csv và scale.json, đọc lại chính xác từng bit."""
        code = self._run('scale', '--model', 'exponential_cl', '--xmax', '10', '--grid', '100')
        self.assertEqual(code, ExitCode.OK)

        header, rows = FileService.read_csv(os.path.join(self.out, 'scale.csv'))
        self.assertEqual(header, ['x', 'w', 'w1', 'w2', 'w3'])
        self.assertEqual(len(rows), 101)

        sf = ScaleService().build(load_preset('exponential_cl'))
        table = np.array(rows)
        self.assertTrue(np.array_equal(table[:, 0], np.linspace(0.0, 10.0, 101)))
        self.assertTrue(np.array_equal(table[:, 1], sf.eval(table[:, 0], 0)))
        self.assertTrue(np.array_equal(table[:, 2], sf.eval(table[:, 0], 1)))

        document = FileService.read_json(os.path.join(self.out, 'scale.json'))
        self.assertEqual(document['exit_code'], 0)
        self.assertEqual(document['scale_function']['representation'], 'exp_sum')
        self.assertFalse(document['summary']['w3_degraded'])

    def test_nonpositive_xmax(self):
        """Test --xmax 0 cho mã 2."""
        self.assertEqual(self._run('scale', '--model', 'exponential_cl', '--xmax', '0'), ExitCode.USAGE)

    def test_missing_command(self):
        """Test thiếu lệnh con cho mã 2."""
        self.assertEqual(main.run([]), ExitCode.USAGE)

    def test_unknown_model(self):
        """Test preset không tồn tại cho mã 3 và ghi tên trường."""
        code = self._run('scale', '--model', 'no_such_model')
        self.assertEqual(code, ExitCode.MODEL)
        document = FileService.read_json(os.path.join(self.out, 'scale.json'))
        self.assertEqual(document['field'], 'model')

    def test_invalid_model_file(self):
        """Test file mô hình có khóa lạ cho mã 3."""
        path = os.path.join(self.temp_dir, 'model.json')
        FileService.write_json(path, {'family': 'exponential', 'params': {'lam': 1, 'beta': 1},
                                      'c': 2, 'q': 0.05, 'premium': 1})
        self.assertEqual(self._run('barrier', '--model', path), ExitCode.MODEL)

    def test_barrier_strict_condition2(self):
        """Test --strict cho mã 10 khi điều kiện (2) thất bại (σ = 1.4)."""
        self.assertEqual(self._run('barrier', '--model', 'erlang_sigma_1_4'), ExitCode.OK)
        self.assertEqual(self._run('barrier', '--model', 'erlang_sigma_1_4', '--strict'), ExitCode.CONDITION2)
        document = FileService.read_json(os.path.join(self.out, 'barrier.json'))
        self.assertFalse(document['certificate']['condition2_holds'])
        self.assertTrue(os.path.isfile(os.path.join(self.out, 'barrier_w1.csv')))

    def test_barrier_strict_passes(self):
        """Test --strict cho mã 0 khi mọi điều kiện đạt."""
        self.assertEqual(self._run('barrier', '--model', 'exponential_cl', '--strict'), ExitCode.OK)

    def test_verify_writes_rows(self):
        """Test verify ghi verify.csv với ba cột."""
        code = self._run('verify', '--model', 'exponential_cl', '--xhi', '10')
        self.assertEqual(code, ExitCode.OK)
        header, rows = FileService.read_csv(os.path.join(self.out, 'verify.csv'))
        self.assertEqual(header, ['x', 'gen_minus_q_v', 'one_minus_vprime'])
        self.assertGreater(len(rows), 900)
        document = FileService.read_json(os.path.join(self.out, 'verify.json'))
        self.assertTrue(document['summary']['hjb_holds'])

    def test_verify_strict_hjb(self):
        """Test --strict cho mã 12 khi HJB thất bại (σ = 1.4)."""
        code = self._run('verify', '--model', 'erlang_sigma_1_4', '--xhi', '40', '--strict')
        self.assertEqual(code, ExitCode.HJB)

    def test_simulate_records_seed(self):
        """Test simulate ghi seed và ước lượng."""
        code = self._run('simulate', '--model', 'exponential_cl', '--x', '1', '--paths', '2000', '--seed', '7')
        self.assertEqual(code, ExitCode.OK)
        document = FileService.read_json(os.path.join(self.out, 'simulate.json'))
        self.assertEqual(document['simulation']['seed'], 7)
        self.assertEqual(document['simulation']['paths'], 2000)
        self.assertIn('closed_form', document)

    def test_simulate_comparison(self):
        """Test --barriers ghi simulate.csv với a* được thêm vào."""
        code = self._run('simulate', '--model', 'exponential_cl', '--x', '1', '--paths', '1000',
                         '--barriers', '0.5,4')
        self.assertEqual(code, ExitCode.OK)
        header, rows = FileService.read_csv(os.path.join(self.out, 'simulate.csv'))
        self.assertEqual(header, ['barrier', 'mc_estimate', 'mc_stderr', 'closed_form'])
        self.assertEqual(len(rows), 3)

    def test_grid_below_minimum_is_usage(self):
        """Test --grid nhỏ hơn MIN_GRID cho mã 2 trên mọi lệnh."""
        self.assertEqual(self._run('scale', '--model', 'exponential_cl', '--grid', '32'), ExitCode.USAGE)
        self.assertEqual(self._run('simulate', '--model', 'exponential_cl', '--grid', '8'), ExitCode.USAGE)

    def test_seed_and_paths_shared(self):
        """Test --seed và --paths được nhận bởi lệnh khác simulate."""
        code = self._run('barrier', '--model', 'exponential_cl', '--seed', '3', '--paths', '500')
        self.assertEqual(code, ExitCode.OK)

    def test_unwritable_output_exit_code(self):
        """Test không ghi được scale.csv cho mã 5, scale.json ghi loại lỗi và đường dẫn."""
        os.makedirs(os.path.join(self.out, 'scale.csv'))
        code = self._run('scale', '--model', 'exponential_cl', '--xmax', '10', '--grid', '100')
        self.assertEqual(code, ExitCode.OUTPUT)
        document = FileService.read_json(os.path.join(self.out, 'scale.json'))
        self.assertEqual(document['exit_code'], int(ExitCode.OUTPUT))
        self.assertEqual(document['error_type'], 'OutputError')
        self.assertTrue(document['path'].endswith('scale.csv'))

    def test_simulate_uses_grid_arguments(self):
        """Test simulate chuyển --xmax và --grid tới scale function của cột công thức đóng."""
        controller = MainController(_quiet_config(self.temp_dir))
        build = controller.scale_service.build
        with mock.patch.object(controller.scale_service, 'build', wraps=build) as spy:
            code = controller.run_simulate('exponential_cl', self.out, x=1.0, paths=500, seed=3,
                                           x_max=50.0, n_grid=256)
        self.assertEqual(code, ExitCode.OK)
        spy.assert_called_once_with(mock.ANY, x_max=50.0, n_grid=256)
        document = FileService.read_json(os.path.join(self.out, 'simulate.json'))
        self.assertEqual(document['scale_function']['representation'], 'exp_sum')


class TestReproduceFigures(unittest.TestCase):
    """Test cases cho reproduce-figures."""

    @classmethod
    def setUpClass(cls):
        """Setup trước tất cả tests."""
        cls.temp_dir = tempfile.mkdtemp()
        cls.out = os.path.join(cls.temp_dir, 'figures')
        cls.controller = MainController(_quiet_config(cls.temp_dir))
        cls.code = cls.controller.run_reproduce_figures(cls.out, strict=True)
        cls.summary = FileService.read_json(os.path.join(cls.out, 'summary.json'))

    @classmethod
    def tearDownClass(cls):
        """Cleanup sau tất cả tests."""
        shutil.rmtree(cls.temp_dir, ignore_errors=True)

    def test_files_written(self):
        """Test bốn file CSV và summary.json."""
        self.assertEqual(self.code, ExitCode.OK)
        for name in ('fig1_left_w1.csv', 'fig1_right_generator.csv', 'fig2_left_w1.csv',
                     'fig2_right_generator.csv', 'summary.json', 'reproduce-figures.json'):
            self.assertTrue(os.path.isfile(os.path.join(self.out, name)), msg=name)

    def test_verdicts(self):
        """Test a* ≈ 0.4 / 10.5 và verdict của hai mô hình."""
        low, high = self.summary['cases']
        self.assertEqual(low['preset'], 'erlang_sigma_1_4')
        self.assertAlmostEqual(low['a_star'], 0.4, delta=0.1)
        self.assertFalse(low['condition2_holds'])
        self.assertFalse(low['hjb_holds'])
        self.assertGreater(low['max_generator_above_barrier'], 1e-4)

        self.assertAlmostEqual(high['a_star'], 10.5, delta=0.1)
        self.assertTrue(high['condition2_holds'])
        self.assertTrue(high['hjb_holds'])

    def test_generator_columns(self):
        """Test cột của file (Γ - q)v_{a*}."""
        header, rows = FileService.read_csv(os.path.join(self.out, 'fig2_right_generator.csv'))
        self.assertEqual(header, ['x', 'gen_minus_q_v', 'one_minus_vprime'])
        self.assertLessEqual(rows[-1][0], 40.0)

    def test_state_completed(self):
        """Test trạng thái COMPLETED được ghi vào reproduce-figures.json."""
        document = FileService.read_json(os.path.join(self.out, 'reproduce-figures.json'))
        self.assertEqual(document['state'], ReproductionState.COMPLETED.value)

    def test_verdicts_match_expected(self):
        """Test chạy strict cho mã 0 và không có verdict lệch kết quả mong đợi."""
        self.assertEqual(self.summary['mismatches'], [])
        document = FileService.read_json(os.path.join(self.out, 'reproduce-figures.json'))
        self.assertEqual(document['mismatches'], [])
        self.assertEqual(document['summary']['mismatches'], 0)


def _fabricated_case(preset: str, **changes):
    case = {
        'preset': preset,
        'a_star': 0.4 if preset == 'erlang_sigma_1_4' else 10.5,
        'condition2_holds': preset == 'erlang_sigma_2',
        'hjb_holds': preset == 'erlang_sigma_2',
    }
    case.update(changes)
    return case


class TestReproductionVerdicts(unittest.TestCase):
    """Test cases cho so sánh verdict với kết quả mong đợi và lỗi ghi file."""

    def setUp(self):
        """Setup trước mỗi test."""
        self.temp_dir = tempfile.mkdtemp()
        self.out = os.path.join(self.temp_dir, 'figures')
        self.config = _quiet_config(self.temp_dir)

    def tearDown(self):
        """Cleanup sau mỗi test."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def _patched_cases(self, **changes):
        def run_case(preset, prefix, out_dir):
            return _fabricated_case(preset, **changes.get(preset, {}))
        return mock.patch.object(ReproductionController, '_run_case', side_effect=run_case)

    def test_verdict_mismatches(self):
        """Test verdict_mismatches so a* theo sai số và cờ theo giá trị."""
        self.assertEqual(verdict_mismatches(_fabricated_case('erlang_sigma_2')), [])
        found = verdict_mismatches(_fabricated_case('erlang_sigma_2', a_star=9.0, hjb_holds=False))
        self.assertEqual([m['verdict'] for m in found], ['a_star', 'hjb_holds'])
        self.assertEqual(found[0]['expected'], 10.5)
        self.assertEqual(verdict_mismatches({'preset': 'exponential_cl', 'a_star': 7.0}), [])

    def test_mismatch_recorded_without_strict(self):
        """Test verdict lệch được ghi vào summary.json nhưng mã thoát vẫn là 0."""
        controller = ReproductionController(self.config, log_callback=lambda m: None)
        with self._patched_cases(erlang_sigma_2={'hjb_holds': False}):
            code = controller.run(self.out)
        self.assertEqual(code, ExitCode.OK)
        self.assertEqual(controller.state, ReproductionState.COMPLETED)
        summary = FileService.read_json(os.path.join(self.out, 'summary.json'))
        self.assertEqual(len(summary['mismatches']), 1)
        self.assertEqual(summary['mismatches'][0]['verdict'], 'hjb_holds')

    def test_strict_exit_codes(self):
        """Test strict cho mã 12 khi HJB lệch và mã 10 khi a* hoặc điều kiện (2) lệch."""
        controller = ReproductionController(self.config, log_callback=lambda m: None)
        with self._patched_cases(erlang_sigma_2={'hjb_holds': False}):
            self.assertEqual(controller.run(self.out, strict=True), ExitCode.HJB)
        with self._patched_cases(erlang_sigma_1_4={'a_star': 2.0}):
            self.assertEqual(controller.run(self.out, strict=True), ExitCode.CONDITION2)
        with self._patched_cases(erlang_sigma_1_4={'condition2_holds': True}):
            self.assertEqual(controller.run(self.out, strict=True), ExitCode.CONDITION2)
        with self._patched_cases():
            self.assertEqual(controller.run(self.out, strict=True), ExitCode.OK)

    def test_strict_through_main_controller(self):
        """Test run_reproduce_figures chuyển strict và ghi danh sách verdict lệch."""
        controller = MainController(self.config)
        with self._patched_cases(erlang_sigma_2={'hjb_holds': False}):
            self.assertEqual(controller.run_reproduce_figures(self.out), ExitCode.OK)
            self.assertEqual(controller.run_reproduce_figures(self.out, strict=True), ExitCode.HJB)
        document = FileService.read_json(os.path.join(self.out, 'reproduce-figures.json'))
        self.assertEqual(document['exit_code'], int(ExitCode.HJB))
        self.assertEqual(document['summary']['mismatches'], 1)
        self.assertEqual(document['mismatches'][0]['preset'], 'erlang_sigma_2')

    def test_unwritable_summary(self):
        """Test không ghi được summary.json cho mã 5 và trạng thái FAILED."""
        os.makedirs(os.path.join(self.out, 'summary.json'))
        controller = ReproductionController(self.config, log_callback=lambda m: None)
        with self._patched_cases():
            code = controller.run(self.out)
        self.assertEqual(code, ExitCode.OUTPUT)
        self.assertEqual(controller.state, ReproductionState.FAILED)

    def test_unwritable_figure_file(self):
        """Test không ghi được file CSV đồ thị cho mã 5 qua run_reproduce_figures."""
        os.makedirs(os.path.join(self.out, 'fig1_left_w1.csv'))
        code = MainController(self.config).run_reproduce_figures(self.out)
        self.assertEqual(code, ExitCode.OUTPUT)
        document = FileService.read_json(os.path.join(self.out, 'reproduce-figures.json'))
        self.assertEqual(document['state'], ReproductionState.FAILED.value)


def suite():
    """Create test suite."""
    suite = unittest.TestSuite()
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestCommandLine))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestReproduceFigures))
    suite.addTests(unittest.TestLoader().loadTestsFromTestCase(TestReproductionVerdicts))
    return suite


if __name__ == '__main__':
    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite())
    sys.exit(0 if result.wasSuccessful() else 1)
