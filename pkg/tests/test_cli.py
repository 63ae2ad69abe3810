"""
Test the verification command line: exit codes, reports and summaries
"""
import json

import pytest
import pandas as pd
import os
import sys

# Add src to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.main import EXIT_IDENTITY, EXIT_OK, EXIT_USAGE, build_parser, main
from src.utils.run_config import RunConfig
from src.utils.errors import InvalidParameterError


class TestParser:
    """Test argument parsing"""

    def test_defaults(self):
        """Test defaults of the verify command"""
        args = build_parser().parse_args(['verify', 'appendix'])
        assert args.command == 'verify'
        assert args.action == 'appendix'
        assert args.p == 2.0
        assert args.format == 'csv'
        assert args.points == 5

    def test_unknown_action(self):
        """Test argparse rejects an unknown action with exit status 2"""
        with pytest.raises(SystemExit) as excinfo:
            main(['verify', 'everything'])
        assert excinfo.value.code == 2


class TestRunConfig:
    """Test configuration validation"""

    def test_ell_must_divide_m(self):
        """Test ell not dividing m is a usage error"""
        with pytest.raises(InvalidParameterError):
            RunConfig(command='group', m=5, ell=2).validate()

    def test_point_outside_ball(self):
        """Test z must lie strictly inside the ball"""
        with pytest.raises(InvalidParameterError):
            RunConfig(command='kernel', action='eval', z=[1.0, 0.0, 0.5, 0.0]).validate()

    def test_points_must_be_positive(self):
        """Test the reproducing check needs at least one test point"""
        with pytest.raises(InvalidParameterError):
            RunConfig(command='verify', action='reproducing', points=0).validate()

    def test_p_range(self):
        """Test p = 1 is refused"""
        with pytest.raises(InvalidParameterError):
            RunConfig(command='verify', action='sweep', p_grid=[1.0, 2.0]).validate()


class TestCommands:
    """Test end-to-end runs on small sample counts"""

    def test_group(self, tmp_path):
        """Test G(4, 4, 2) lists four hyperplanes and passes its axioms"""
        output = tmp_path / 'group.csv'
        document = tmp_path / 'group.json'
        code = main(['group', '--m', '4', '--ell', '4', '--output', str(output), '--document', str(document)])
        assert code == EXIT_OK
        assert len(pd.read_csv(output)) == 4
        assert json.loads(document.read_text())['format_version'] == 1

    def test_group_usage_error(self):
        """Test ell not dividing m exits with status 2"""
        assert main(['group', '--m', '5', '--ell', '2']) == EXIT_USAGE

    def test_tree(self, tmp_path):
        """Test G(2, 2, 2) splits into two leaves"""
        output = tmp_path / 'tree.csv'
        assert main(['tree', '--m', '2', '--ell', '2', '--output', str(output)]) == EXIT_OK
        assert output.exists()

    def test_kernel_eval(self, tmp_path):
        """Test every kernel quantity is reported"""
        output = tmp_path / 'kernel.csv'
        assert main(['kernel', 'eval', '--m', '3', '--ell', '3', '--output', str(output)]) == EXIT_OK
        quantities = pd.read_csv(output)['quantity'].tolist()
        assert {'K', 'K_G', 'K_G_p', 'M'} <= set(quantities)

    def test_verify_appendix(self, tmp_path):
        """Test the explicit bounds run and its summary file"""
        output = tmp_path / 'appendix.csv'
        code = main(['verify', 'appendix', '--p', '2', '--samples', '2000', '--seed', '3', '--output', str(output)])
        assert code == EXIT_OK
        summary = json.loads((tmp_path / 'appendix.summary.json').read_text())
        assert summary['exit_code'] == EXIT_OK
        assert summary['banner']['seed'] == 3
        assert all(check['passed'] for check in summary['checks'])

    def test_reproducing_uses_five_points(self, tmp_path):
        """Test the reproducing run reports one row per default test point"""
        output = tmp_path / 'reproducing.csv'
        code = main(['verify', 'reproducing', '--group', 'pair', '--poly', '2*z1', '--samples', '20000',
                     '--seed', '2', '--output', str(output)])
        assert code in (EXIT_OK, EXIT_IDENTITY)
        quantities = pd.read_csv(output)['quantity'].tolist()
        assert [q for q in quantities if q.startswith('reproduce[')] == [f'reproduce[{i}]' for i in range(5)]

    def test_partition_error_is_usage(self):
        """Test G(3, 3, 2) covering search exits with status 2"""
        assert main(['verify', 'covering', '--m', '3', '--ell', '3', '--samples', '100']) == EXIT_USAGE

    def test_quad_integrate(self, tmp_path):
        """Test the |z1|^2 |z2|^2 moment against pi^2 / 24"""
        output = tmp_path / 'moment.jsonl'
        code = main(['quad', 'integrate', '--moment', '1', '1', '--samples', '40000', '--seed', '1',
                     '--format', 'jsonl', '--output', str(output)])
        assert code == EXIT_OK
        row = json.loads(output.read_text().splitlines()[0])
        assert row['quantity'] == 'moment[1,1]'

    def test_reports_are_reproducible(self, tmp_path):
        """Test identical configurations give identical report bytes"""
        first, second = tmp_path / 'a.csv', tmp_path / 'b.csv'
        for path in (first, second):
            assert main(['verify', 'covering', '--samples', '1000', '--seed', '7', '--output', str(path)]) == EXIT_OK
        assert first.read_bytes() == second.read_bytes()
