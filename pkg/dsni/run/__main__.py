#!/usr/bin/env python

# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import sys
import click
import logging
import traceback

from .. import __version__
from ..errors import DsniDataError, NumericalError
from .pipeline import load_config, run_phantom, run_preprocess, run_train, run_synthesize, run_evaluate


########################################################################################################################
# New argument types
########################################################################################################################

class IntPair(click.ParamType):
    """ Custom argument type for 'X,Y' integer pairs """
    name = 'X,Y'

    def __repr__(self):
        return 'INTPAIR'

    def convert(self, value, param, ctx):
        if isinstance(value, (tuple, list)):
            return tuple(int(v) for v in value)
        try:
            x, y = (int(v, 0) for v in value.replace('x', ',').split(','))
        except ValueError:
            self.fail('%s is not a valid X,Y pair' % value, param, ctx)

        if x < 1 or y < 1:
            self.fail('%s must contain positive values' % value, param, ctx)

        return x, y


# Instances of custom argument types
INTPAIR = IntPair()


########################################################################################################################
# Command Line Interface
########################################################################################################################

# Application exit codes
USAGE_ERROR = 1
DATA_ERROR = 2
NUMERICAL_ERROR = 3

# Application version
VERSION = __version__

# Application description
DESCRIP = (
    "Synthetic nephrographic phase CT, ver.: " + VERSION + "\n\n"
    "Phantom generation, registration and quality gate, diffusion training, synthesis and evaluation.\n"
)


def exit_code(error):
    if isinstance(error, NumericalError):
        return NUMERICAL_ERROR
    if isinstance(error, (DsniDataError, OSError, ValueError)):
        return DATA_ERROR
    return USAGE_ERROR


def fail(ctx, error):
    """ Echo the error (traceback in debug mode) and exit with its code """
    if ctx.obj['DEBUG']:
        error_msg = '\n' + traceback.format_exc()
    else:
        error_msg = ' - ERROR: %s' % str(error)
    click.echo(error_msg)
    sys.exit(exit_code(error))


@click.group(context_settings=dict(help_option_names=['-?', '--help']), help=DESCRIP)
@click.option('-d', '--debug', type=click.IntRange(0, 2, clamp=True), default=0, help="Debug level (0-off, 1-info, 2-debug)")
@click.version_option(VERSION, '-v', '--version')
@click.pass_context
def cli(ctx, debug):

    if debug > 0:
        FORMAT = "[%(asctime)s.%(msecs)03d %(levelname)-5s] %(message)s"
        loglevel = [logging.NOTSET, logging.INFO, logging.DEBUG]
        logging.basicConfig(format=FORMAT, datefmt='%M:%S', level=loglevel[debug])

    ctx.obj['DEBUG'] = debug


@cli.command(short_help="Generate a synthetic three-phase phantom dataset")
@click.option('-c', '--config', type=click.Path(exists=True), default=None, help="Run configuration (YAML or JSON)")
@click.option('-o', '--out', type=click.Path(), required=True, help="Output dataset directory")
@click.option('-n', '--count', type=click.IntRange(0), default=5, show_default=True, help="Number of cases")
@click.option('-s', '--seed', type=click.IntRange(0), default=None, help="Random seed [default: 0]")
@click.pass_context
def phantom(ctx, config, out, count, seed):
    """ Generate phantom cases (misaligned phases, aligned truth, kidney and lesion masks) with a manifest """
    try:
        cfg = load_config(config).override(seed=seed)
        manifest = run_phantom(cfg, out, count)
    except Exception as e:
        fail(ctx, e)

    if ctx.obj['DEBUG']: click.echo()
    click.secho(" - Generated %d cases into: %s" % (len(manifest), out))


@cli.command(short_help="Register, crop and gate a dataset")
@click.option('-c', '--config', type=click.Path(exists=True), default=None, help="Run configuration (YAML or JSON)")
@click.option('-i', '--in', 'in_dir', type=click.Path(exists=True), required=True, help="Input dataset directory")
@click.option('-o', '--out', type=click.Path(), required=True, help="Output dataset directory")
@click.option('-t', '--threshold', type=float, default=None, help="SSIM_select acceptance threshold [default: 0.65]")
@click.option('-x', '--crop', type=INTPAIR, default=None, help="In-plane crop size X,Y [default: 32,32]")
@click.pass_context
def preprocess(ctx, config, in_dir, out, threshold, crop):
    """ Match slice extents, register in two stages, score SSIM_select and assign splits """
    try:
        cfg = load_config(config).override('gate', threshold=threshold)
        cfg.override('crop', xy=list(crop) if crop else None)
        manifest, records = run_preprocess(cfg, in_dir, out)
    except Exception as e:
        fail(ctx, e)

    if ctx.obj['DEBUG']: click.echo()
    for r in records:
        click.echo(" %-12s SSIM_select: %.4f  %s" % (r.case_id, r.ssim_select, 'accepted' if r.accepted else 'rejected'))
    click.secho(" - Accepted %d of %d cases, saved into: %s" % (sum(r.accepted for r in records), len(records), out))


@cli.command(short_help="Train the diffusion denoiser")
@click.option('-c', '--config', type=click.Path(exists=True), default=None, help="Run configuration (YAML or JSON)")
@click.option('-i', '--data', type=click.Path(exists=True), required=True, help="Registered dataset directory")
@click.option('-o', '--out', type=click.Path(), required=True, help="Output directory (checkpoint, loss log)")
@click.option('-n', '--steps', type=click.IntRange(0), default=None, help="Optimizer steps [default: 1000]")
@click.option('-l', '--lr', type=float, default=None, help="Learning rate [default: 2e-5]")
@click.option('-b', '--batch', type=click.IntRange(1), default=None, help="Batch size [default: 4]")
@click.option('-s', '--seed', type=click.IntRange(0), default=None, help="Random seed [default: 0]")
@click.pass_context
def train(ctx, config, data, out, steps, lr, batch, seed):
    """ Train on the 'train' split and keep the parameters with the best validation loss

    Every step is logged into loss_log.jsonl with its loss, learning rate and elapsed seconds.
    """
    try:
        cfg = load_config(config).override(seed=seed)
        cfg.override('train', steps=steps, lr=lr, batch=batch)
        path, trainer = run_train(cfg, data, out)
    except Exception as e:
        fail(ctx, e)

    if ctx.obj['DEBUG']: click.echo()
    click.secho(" - Trained %d steps, best validation loss: %.5f" % (trainer.opt.steps, trainer.best_loss))
    click.secho(" - Checkpoint saved into: %s" % path)


@cli.command(short_help="Synthesize the nephrographic phase")
@click.option('-c', '--config', type=click.Path(exists=True), default=None, help="Run configuration (YAML or JSON)")
@click.option('-k', '--ckpt', type=click.Path(exists=True), required=True, help="Checkpoint file")
@click.option('-n', '--noncontrast', type=click.Path(exists=True), required=True, help="Non-contrast volume header")
@click.option('-e', '--excretory', type=click.Path(exists=True), required=True, help="Excretory volume header")
@click.option('-o', '--out', type=click.Path(), required=True, help="Output path without extension")
@click.option('-s', '--seed', type=click.IntRange(0), default=None, help="Sampling seed [default: 0]")
@click.option('--steps', type=click.IntRange(1), default=None, help="Reduced number of sampling steps")
@click.pass_context
def synthesize(ctx, config, ckpt, noncontrast, excretory, out, seed, steps):
    """ Run the reverse diffusion conditioned on the non-contrast and excretory phases """
    try:
        cfg = load_config(config).override(seed=seed)
        cfg.override('sampler', steps=steps)
        vol, path = run_synthesize(cfg, ckpt, noncontrast, excretory, out)
    except Exception as e:
        fail(ctx, e)

    if ctx.obj['DEBUG']: click.echo()
    click.echo(vol.info())
    click.secho(" - Synthetic volume saved into: %s" % path)


@cli.command(short_help="Compute image metrics of synthetic volumes")
@click.option('-c', '--config', type=click.Path(exists=True), default=None, help="Run configuration (YAML or JSON)")
@click.option('-p', '--pred', type=click.Path(exists=True), required=True, help="Synthetic volume file or directory")
@click.option('-t', '--truth', type=click.Path(exists=True), required=True, help="Reference volume file or directory")
@click.option('-r', '--report', type=click.Path(), required=True, help="Output report (JSON)")
@click.option('-m', '--mask', type=click.Path(exists=True), default=None, help="ROI mask file or directory")
@click.option('-b', '--baseline', type=click.Path(exists=True), default=None,
              help="Copy-excretory baseline volume file or directory")
@click.pass_context
def evaluate(ctx, config, pred, truth, report, mask, baseline):
    """ PSNR, SSIM, MAE (HU), Frechet feature distance and optional ROI attenuation statistics """
    try:
        cfg = load_config(config)
        result = run_evaluate(cfg, pred, truth, report, mask, baseline)
    except Exception as e:
        fail(ctx, e)

    if ctx.obj['DEBUG']: click.echo()
    click.echo(result.info())
    if result.baseline is not None:
        click.echo(" Baseline:")
        click.echo(result.baseline.info())
    click.secho(" - Report saved into: %s" % report)


def main():
    try:
        cli.main(obj={}, standalone_mode=False)
    except click.exceptions.Abort:
        click.echo('Aborted!')
        sys.exit(USAGE_ERROR)
    except click.ClickException as e:
        e.show()
        sys.exit(USAGE_ERROR)


if __name__ == '__main__':
    main()
