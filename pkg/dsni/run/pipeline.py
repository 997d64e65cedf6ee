# Copyright (c) 2024 The dsni developers
#
# SPDX-License-Identifier: BSD-3-Clause
# The BSD-3-Clause license for this file can be found in the LICENSE file included with this distribution
# or at https://spdx.org/licenses/BSD-3-Clause.html#licenseText

import os
import logging
from concurrent.futures import ThreadPoolExecutor

from ..errors import DsniDataError
from ..vol.misc import atomic_write
from ..vol.volume import CtVolume, EnumDomain, PhaseTriple, PHASE_NAMES, HEADER_EXT, window_normalize, \
                         match_slice_extent
from ..vol.phantom import LESION_NAMES, generate_phantom, random_phantom_spec
from ..reg.register import two_stage_register
from ..qc.gate import ssim_select, export_gate_report
from ..net.denoiser import init_params
from ..ddpm.augment import AugmentConfig, augment
from ..ddpm.trainer import Trainer, make_items
from ..ddpm.sampler import synthesize
from ..eval.metrics import evaluate_cases
from .config import RunConfig, thread_count
from .checkpoint import Checkpoint
from .manifest import CaseManifest, CaseRecord, EnumSplit, SPLIT_NAMES, assign_splits

GATE_REPORT = 'gate_report.json'
LOSS_LOG = 'loss_log.jsonl'
CHECKPOINT_NAME = 'best.dsni'

PHASE_KEYS = ('nc', 'neph', 'exc')


########################################################################################################################
# Helpers
########################################################################################################################

def _lesion_key(index, kind):
    return 'lesion{}_{}'.format(index, LESION_NAMES[kind])


def _lesion_kind(key):
    name = key.split('_', 1)[-1]
    for kind, value in LESION_NAMES.items():
        if value == name:
            return kind
    raise DsniDataError("Unknown lesion kind in volume key '{}'".format(key))


def _lesion_keys(record):
    return sorted((k for k in record.paths if k.startswith('lesion')), key=lambda k: int(k[6:].split('_')[0]))


def _save_triple(root, case_id, triple, truth=None):
    """ Write the phases and masks of a case, returning the relative header paths """
    paths = {}

    def put(key, vol):
        rel = os.path.join(case_id, key)
        vol.save(os.path.join(root, rel))
        paths[key] = rel + HEADER_EXT

    for key, vol in zip(PHASE_KEYS, triple.phases()):
        put(key, vol)
    if triple.mask is not None:
        put('mask', triple.mask)
    for i, (kind, mask) in enumerate(triple.lesions):
        put(_lesion_key(i, kind), mask)
    if truth is not None:
        for key, vol in zip(PHASE_KEYS, truth.phases()):
            put('truth_' + key, vol)
    return paths


def load_triple(manifest, record):
    """ PhaseTriple of a manifest case with its kidney and lesion masks """
    vols = [CtVolume.load(manifest.path(record, key)) for key in PHASE_KEYS]
    mask = CtVolume.load(manifest.path(record, 'mask')) if 'mask' in record.paths else None
    lesions = [(_lesion_kind(k), CtVolume.load(manifest.path(record, k))) for k in _lesion_keys(record)]
    triple = PhaseTriple(*vols, mask=mask, lesions=lesions)
    triple.validate()
    return triple


def _as_norm255(vol, cfg):
    return window_normalize(vol, cfg.window()) if vol.domain == EnumDomain.HU else vol


########################################################################################################################
# Commands
########################################################################################################################

def run_phantom(cfg, out_dir, count):
    """ Generate a phantom dataset
    :param cfg: RunConfig
    :param out_dir: output directory
    :param count: number of cases
    :return: CaseManifest
    """
    base = cfg.phantom_base()
    p = cfg['phantom']
    os.makedirs(out_dir, exist_ok=True)
    manifest = CaseManifest(out_dir, kind='phantom')

    for i in range(count):
        case_id = 'case{:03d}'.format(i)
        spec = random_phantom_spec(cfg.seed + i, base, p['max_rotation'], tuple(p['max_translation']))
        truth = generate_phantom(spec)
        paths = _save_triple(out_dir, case_id, truth.misaligned, truth.aligned)
        meta = {'seed': cfg.seed + i,
                'recovery': {PHASE_NAMES[ph]: xf.export() for ph, xf in sorted(truth.recovery.items())}}
        manifest.add(CaseRecord(case_id, paths, meta=meta))
        logging.info('Phantom case %s written', case_id)

    manifest.save()
    return manifest


def preprocess_case(manifest, record, cfg):
    """ Slice matching, windowing, two-stage registration and SSIM gate of one case
    :return: (GateRecord, registered PhaseTriple)
    """
    vols = [CtVolume.load(manifest.path(record, key)) for key in PHASE_KEYS]
    lesions = [(_lesion_kind(k), CtVolume.load(manifest.path(record, k))) for k in _lesion_keys(record)]
    matched = match_slice_extent(PhaseTriple(*vols, lesions=lesions))
    window = cfg.window()
    normed = matched.map(lambda v: window_normalize(v, window), masks=False)
    registered = two_stage_register(normed, cfg.masker(), cfg.crop_xy(), cfg.registration())
    return ssim_select(registered, cfg.ssim(), cfg.gate(), record.case_id), registered


def run_preprocess(cfg, in_dir, out_dir, workers=None):
    """ Register and gate a dataset
    :param cfg: RunConfig
    :param in_dir: dataset directory with a manifest
    :param out_dir: output directory for the registered dataset
    :param workers: worker threads, default from DSNI_THREADS
    :return: (CaseManifest, list of GateRecord)
    """
    source = CaseManifest.load(in_dir)
    workers = thread_count() if workers is None else workers
    logging.info('Preprocessing %d cases with %d workers', len(source), workers)

    def work(record):
        return preprocess_case(source, record, cfg)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(work, source.cases))

    os.makedirs(out_dir, exist_ok=True)
    out = CaseManifest(out_dir, kind='registered')
    records = []
    for record, (gate_record, registered) in zip(source.cases, results):
        paths = _save_triple(out_dir, record.case_id, registered) if gate_record.accepted else {}
        meta = dict(record.meta, registration=registered.meta)
        out.add(CaseRecord(record.case_id, paths, gate_record.to_dict(), gate_record.accepted, meta=meta))
        records.append(gate_record)

    splits = assign_splits(out, cfg['split']['val'], cfg['split']['test'], cfg.seed)
    logging.info('Splits: %s', {SPLIT_NAMES[k]: len(v) for k, v in splits.items()})
    out.save()
    report = export_gate_report(records, cfg.ssim(), cfg.gate())
    atomic_write(os.path.join(out_dir, GATE_REPORT), report.encode('utf-8'))
    return out, records


def run_train(cfg, data_dir, out_dir):
    """ Train the denoiser on the train split, selecting parameters on the validation split
    :param cfg: RunConfig
    :param data_dir: registered dataset directory
    :param out_dir: output directory for the checkpoint and the loss log
    :return: (checkpoint path, Trainer)
    """
    manifest = CaseManifest.load(data_dir)
    train = manifest.by_split(EnumSplit.TRAIN)
    val = manifest.by_split(EnumSplit.VAL)
    for name, cases in (('train', train), ('val', val)):
        if not cases:
            raise DsniDataError("Dataset {} has no '{}' split".format(data_dir, name))

    aug = cfg.augment()
    plain = AugmentConfig(aug.window, aug.stride)
    train_items = make_items([t for r in train for t in augment(load_triple(manifest, r), aug)])
    val_items = make_items([t for r in val for t in augment(load_triple(manifest, r), plain)])
    logging.info('Training on %d sub-volumes, validating on %d', len(train_items), len(val_items))

    swin, schedule, tcfg = cfg.swin(), cfg.schedule(), cfg.train()
    trainer = Trainer(init_params(swin, cfg.seed), swin, schedule, tcfg)
    os.makedirs(out_dir, exist_ok=True)
    trainer.fit(train_items, val_items, log_path=os.path.join(out_dir, LOSS_LOG))

    info = {'config': cfg.export(), 'steps': trainer.opt.steps, 'best_val_loss': trainer.best_loss,
            'depth': aug.window}
    ckpt = Checkpoint(trainer.best_params, swin, schedule, tcfg.target, info)
    return ckpt.save(os.path.join(out_dir, CHECKPOINT_NAME)), trainer


def run_synthesize(cfg, ckpt_path, noncontrast, excretory, out_base):
    """ Synthesize the nephrographic phase of one registered case
    :param cfg: RunConfig (sampler section and seed)
    :param ckpt_path: checkpoint file
    :param noncontrast: header path of the non-contrast volume
    :param excretory: header path of the excretory volume
    :param out_base: output path without extension
    :return: (CtVolume, header path)
    """
    ckpt = Checkpoint.load(ckpt_path)
    nc = _as_norm255(CtVolume.load(noncontrast), cfg)
    exc = _as_norm255(CtVolume.load(excretory), cfg)
    nc.require_dims(exc)

    nz = nc.dims[2]
    depth = cfg['sampler']['depth'] or ckpt.info_data.get('depth') or nz
    vol = synthesize(ckpt.denoiser(), nc, exc, ckpt.schedule, cfg.sampler(), min(int(depth), nz))
    return vol, vol.save(out_base)


def _volume_files(path):
    """ {case id: header path} of a volume file or of every volume in a directory """
    if os.path.isdir(path):
        names = sorted(n for n in os.listdir(path) if n.endswith(HEADER_EXT))
        if not names:
            raise DsniDataError("No volumes in directory {}".format(path))
        return {n[:-len(HEADER_EXT)]: os.path.join(path, n) for n in names}
    base = os.path.basename(path)
    return {base[:-len(HEADER_EXT)] if base.endswith(HEADER_EXT) else base: path}


def _pairs(pred, truth, cfg):
    preds, truths = _volume_files(pred), _volume_files(truth)
    if len(preds) == 1 and len(truths) == 1:
        truths = {list(preds)[0]: list(truths.values())[0]}
    missing = sorted(set(preds) - set(truths))
    if missing:
        raise DsniDataError("No reference volume for: {}".format(', '.join(missing)))
    load = lambda p: _as_norm255(CtVolume.load(p), cfg)
    return [(case_id, load(preds[case_id]), load(truths[case_id])) for case_id in sorted(preds)]


def run_evaluate(cfg, pred, truth, report_path, mask=None, baseline=None, workers=None):
    """ Metrics report of synthetic volumes against references
    :param cfg: RunConfig (window, ssim and evaluate sections)
    :param pred: synthetic volume file or directory
    :param truth: reference volume file or directory (matched by file name)
    :param report_path: output JSON file
    :param mask: optional ROI mask file (applied to every case) or directory (matched by file name)
    :param baseline: optional copy-excretory volume file or directory for a comparison report
    :param workers: worker threads, default from DSNI_THREADS
    :return: MetricsReport
    """
    workers = thread_count() if workers is None else workers
    ev = cfg['evaluate']
    pairs = _pairs(pred, truth, cfg)

    rois = []
    if mask:
        masks = _volume_files(mask)
        for case_id, _, _ in pairs:
            path = masks.get(case_id) if os.path.isdir(mask) else list(masks.values())[0]
            if path is None:
                raise DsniDataError("No ROI mask for case {}".format(case_id))
            label = os.path.basename(path)[:-len(HEADER_EXT)] if path.endswith(HEADER_EXT) else 'roi'
            rois.append((case_id, label, CtVolume.load(path)))

    def report_for(case_pairs, case_rois):
        return evaluate_cases(case_pairs, cfg.window(), cfg.ssim(), cfg.extractor(), case_rois, ev['min_fvd'],
                              workers, ev['bins'])

    report = report_for(pairs, rois)
    if baseline:
        base_pairs = _pairs(baseline, truth, cfg)
        ids = set(p[0] for p in base_pairs)
        report.baseline = report_for(base_pairs, [r for r in rois if r[0] in ids])

    report.validate()
    atomic_write(report_path, report.to_json().encode('utf-8'))
    return report


def load_config(path=None):
    return RunConfig() if path is None else RunConfig.load(path)
