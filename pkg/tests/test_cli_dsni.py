# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import os
import json
import pytest
import shutil

# Used Directories
DATA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data')
TEMP_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'temp_cli')

CONFIG = os.path.join(DATA_DIR, 'tiny_run.yaml')


def temp(*names):
    return os.path.join(TEMP_DIR, *names)


def setup_module(module):
    # Create temp directory
    os.makedirs(TEMP_DIR, exist_ok=True)


def teardown_module(module):
    # Delete created files
    shutil.rmtree(TEMP_DIR)


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_phantom(script_runner):
    ret = script_runner.run('dsni', 'phantom', '-c', CONFIG, '-o', temp('phantom'), '-n', '4')
    assert ret.success
    assert "Generated 4 cases" in ret.stdout
    assert os.path.isfile(temp('phantom', 'manifest.json'))


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_phantom_repeatable(script_runner):
    for name in ('again_a', 'again_b'):
        ret = script_runner.run('dsni', 'phantom', '-c', CONFIG, '-o', temp(name), '-n', '1', '-s', '5')
        assert ret.success

    with open(temp('again_a', 'case000', 'neph.ctvol.raw'), 'rb') as f:
        first = f.read()
    with open(temp('again_b', 'case000', 'neph.ctvol.raw'), 'rb') as f:
        assert f.read() == first


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_phantom_empty(script_runner):
    ret = script_runner.run('dsni', 'phantom', '-c', CONFIG, '-o', temp('empty'), '-n', '0')
    assert ret.success
    assert "Generated 0 cases" in ret.stdout


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_phantom_bad_output(script_runner):
    with open(temp('blocker'), 'w') as f:
        f.write('file')
    ret = script_runner.run('dsni', 'phantom', '-c', CONFIG, '-o', temp('blocker', 'phantom'), '-n', '1')
    assert ret.returncode == 2
    assert "ERROR" in ret.stdout


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_preprocess(script_runner):
    ret = script_runner.run('dsni', 'preprocess', '-c', CONFIG, '-i', temp('phantom'), '-o', temp('registered'))
    assert ret.success
    assert "SSIM_select" in ret.stdout
    assert "Accepted 4 of 4" in ret.stdout

    with open(temp('registered', 'gate_report.json')) as f:
        report = json.load(f)
    assert report['accepted'] == 4
    assert report['total'] == 4


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_train(script_runner):
    ret = script_runner.run('dsni', 'train', '-c', CONFIG, '-i', temp('registered'), '-o', temp('model'))
    assert ret.success
    assert "Trained 2 steps" in ret.stdout
    assert os.path.isfile(temp('model', 'best.dsni'))
    with open(temp('model', 'loss_log.jsonl')) as f:
        lines = [line for line in f.read().splitlines() if line.strip()]
    assert len(lines) == 2
    assert 'loss' in json.loads(lines[0])


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_train_same_seed(script_runner):
    ret = script_runner.run('dsni', 'train', '-c', CONFIG, '-i', temp('registered'), '-o', temp('model_again'))
    assert ret.success

    with open(temp('model', 'best.dsni'), 'rb') as f:
        first = f.read()
    with open(temp('model_again', 'best.dsni'), 'rb') as f:
        assert f.read() == first

    logs = []
    for name in ('model', 'model_again'):
        with open(temp(name, 'loss_log.jsonl')) as f:
            records = [json.loads(line) for line in f if line.strip()]
        assert all(r['seconds'] >= 0.0 for r in records)
        logs.append([{k: v for k, v in r.items() if k != 'seconds'} for r in records])
    assert logs[0] == logs[1]


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_train_without_splits(script_runner):
    # phantom datasets carry no split assignment
    ret = script_runner.run('dsni', 'train', '-c', CONFIG, '-i', temp('phantom'), '-o', temp('model_bad'))
    assert ret.returncode == 2
    assert "split" in ret.stdout


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_synthesize(script_runner):
    outputs = []
    for name in ('synth_a', 'synth_b'):
        ret = script_runner.run('dsni', 'synthesize', '-c', CONFIG,
                                '-k', temp('model', 'best.dsni'),
                                '-n', temp('registered', 'case000', 'nc.ctvol.json'),
                                '-e', temp('registered', 'case000', 'exc.ctvol.json'),
                                '-o', temp(name), '-s', '1')
        assert ret.success
        assert "Synthetic volume saved into" in ret.stdout
        with open(temp(name + '.ctvol.raw'), 'rb') as f:
            outputs.append(f.read())

    # same seed, same volume
    assert outputs[0] == outputs[1]


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_synthesize_bad_checkpoint(script_runner):
    with open(temp('model', 'best.dsni'), 'rb') as f:
        data = f.read()
    with open(temp('broken.dsni'), 'wb') as f:
        f.write(b'XXXX' + data[4:])

    ret = script_runner.run('dsni', 'synthesize', '-c', CONFIG,
                            '-k', temp('broken.dsni'),
                            '-n', temp('registered', 'case000', 'nc.ctvol.json'),
                            '-e', temp('registered', 'case000', 'exc.ctvol.json'),
                            '-o', temp('synth_c'))
    assert ret.returncode == 2
    assert "Invalid checkpoint magic" in ret.stdout
    assert "DSNI" in ret.stdout


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_evaluate(script_runner):
    truth = temp('registered', 'case000', 'neph.ctvol.json')
    ret = script_runner.run('dsni', 'evaluate', '-c', CONFIG, '-p', truth, '-t', truth, '-r', temp('report.json'))
    assert ret.success
    assert "inf" in ret.stdout
    assert "Report saved into" in ret.stdout
    with open(temp('report.json')) as f:
        report = json.load(f)
    assert report['psnr_db'] == 'inf'
    assert report['mae_hu'] == 0.0


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_evaluate_baseline(script_runner):
    ret = script_runner.run('dsni', 'evaluate', '-c', CONFIG,
                            '-p', temp('synth_a.ctvol.json'),
                            '-t', temp('registered', 'case000', 'neph.ctvol.json'),
                            '-b', temp('registered', 'case000', 'exc.ctvol.json'),
                            '-r', temp('report_baseline.json'))
    assert ret.success
    assert "Baseline" in ret.stdout
    with open(temp('report_baseline.json')) as f:
        report = json.load(f)
    assert 'baseline' in report


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_usage_errors(script_runner):
    ret = script_runner.run('dsni', 'phantom', '-c', CONFIG)
    assert ret.returncode == 1

    ret = script_runner.run('dsni', 'preprocess', '-c', CONFIG, '-i', temp('phantom'), '-o', temp('crop'),
                            '-x', '0,5')
    assert ret.returncode == 1


@pytest.mark.script_launch_mode('subprocess')
def test_dsni_version(script_runner):
    ret = script_runner.run('dsni', '--version')
    assert ret.success
