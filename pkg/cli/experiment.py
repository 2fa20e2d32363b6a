"""
Experiment orchestration: training runs, calibration runs and dump evaluation.
"""
import os
from typing import List

import numpy as np
import pandas as pd

from calibration.fitting import FITTED_STATS_COLUMNS, fit_variation_model
from calibration.io import export_macro_model, import_macro_model, parse_measurement_csv, write_measurement_csv
from cli.config import ExperimentConfig, echo_config, resolve_dataset_paths, resolve_macro_model
from cli.mnist import load_mnist
from crossbar.array import DUMP_COLUMNS, weights_from_dump
from device_model.models.device_data import MacroModel
from device_model.protocol import run_calibration_protocol
from shared.csv_io import create_output_dir, write_csv
from shared.errors import ConfigError, FormatError
from shared.rng import RngKey
from trainer.mlp import layer_scale
from trainer.models.network import (
    METRICS_COLUMNS,
    Dataset,
    EpochMetrics,
    LayerState,
    MlpTopology,
    NetworkState,
    TrainingConfig,
)
from trainer.training import evaluate, init_network, train_epoch

MODEL_DUMP_COLUMNS = ['layer'] + DUMP_COLUMNS
BIAS_COLUMNS = ['layer', 'index', 'bias']
WEIGHT_COLUMNS = ['layer', 'row', 'col', 'weight']
CURVE_COLUMNS = ['epoch', 'test_acc']

SYNTHETIC_CAVEAT = (
    "⚠️  Using the built-in macro-model (sigma_d2d = sigma_c2c = 0.45 µS, 5% of the conductance window).\n"
    "   These sigmas are synthetic placeholders, not fitted device data."
)


def _banner(title: str):
    print("=" * 60)
    print(title)
    print("=" * 60)


def _load_datasets(config: ExperimentConfig):
    print("🔄 Loading MNIST...")
    train = load_mnist(config.train_images, config.train_labels).subset(config.train_subset)
    test = load_mnist(config.test_images, config.test_labels).subset(config.test_subset)
    print(f"✅ Loaded {len(train)} training and {len(test)} test samples")
    return train, test


def _check_topology(topology: MlpTopology, *datasets: Dataset):
    for dataset in datasets:
        if dataset.images.shape[1] != topology.n_in:
            raise ConfigError(
                f"topology input size {topology.n_in} does not match image size {dataset.images.shape[1]}"
            )
        if len(dataset) and int(dataset.labels.max()) >= topology.n_out:
            raise ConfigError(f"topology output size {topology.n_out} too small for label {int(dataset.labels.max())}")


def model_dump_frame(net: NetworkState) -> pd.DataFrame:
    frames = []
    for index, layer in enumerate(net.layers):
        frame = layer.array.dump_frame()
        frame.insert(0, 'layer', index)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def dense_weights_frame(net: NetworkState) -> pd.DataFrame:
    frames = []
    for index, layer in enumerate(net.layers):
        row, col = np.indices(layer.dense.shape)
        frames.append(pd.DataFrame({'layer': index, 'row': row.ravel(), 'col': col.ravel(),
                                    'weight': layer.dense.ravel()}, columns=WEIGHT_COLUMNS))
    return pd.concat(frames, ignore_index=True)


def biases_frame(net: NetworkState) -> pd.DataFrame:
    return pd.DataFrame(
        [(index, i, float(b)) for index, layer in enumerate(net.layers) for i, b in enumerate(layer.bias)],
        columns=BIAS_COLUMNS,
    )


def write_debug_dump(net: NetworkState, out_dir: str) -> List[str]:
    """Per-layer χ grids (in quanta) and sign matrices."""
    paths = []
    for index, layer in enumerate(net.layers):
        if layer.accumulator is None:
            continue
        paths.append(write_csv(pd.DataFrame(layer.accumulator.chi),
                               os.path.join(out_dir, f"debug_layer{index}_chi.csv")))
        paths.append(write_csv(pd.DataFrame(layer.signs),
                               os.path.join(out_dir, f"debug_layer{index}_signs.csv")))
    return paths


def _print_epoch(m: EpochMetrics):
    print(f"   epoch {m.epoch:3d}  loss={m.train_loss:.4f}  train_acc={m.train_acc:.4f}  "
          f"test_acc={m.test_acc:.4f}  flips={m.bit_flips}  program_events={m.program_events}")


def run_experiment(config: ExperimentConfig) -> int:
    """
    Train, evaluate and write metrics.csv, curve.csv and the final model dump.

    Returns:
        0 on success (errors propagate to the caller)
    """
    _banner("FeFET Hybrid-Precision Training")
    config = resolve_dataset_paths(config)
    model, synthetic = resolve_macro_model(config)
    if synthetic and config.mode != 'float':
        print(SYNTHETIC_CAVEAT)

    out_dir = create_output_dir(config.out_dir)
    echo_config(config, out_dir)
    export_macro_model(model, os.path.join(out_dir, 'macro_model.yaml'))

    train, test = _load_datasets(config)
    topology = MlpTopology(config.topology)
    _check_topology(topology, train, test)

    training = TrainingConfig(
        learning_rate=config.learning_rate,
        batch_size=config.batch_size,
        epochs=config.epochs,
        threshold=config.threshold,
        mode=config.mode,
        seed=config.seed,
        init=config.init,
        macro_model=model,
    )
    net = init_network(topology, training)
    initial_acc = evaluate(net, test)
    print(f"🔄 Training {list(topology.sizes)} in {config.mode} mode for {config.epochs} epochs "
          f"(initial test_acc={initial_acc:.4f})")

    rows = []
    for epoch in range(1, config.epochs + 1):
        metrics = train_epoch(net, train, training, epoch, test_set=test)
        _print_epoch(metrics)
        rows.append(metrics)

    metrics_frame = pd.DataFrame([vars(m) for m in rows], columns=METRICS_COLUMNS)
    write_csv(metrics_frame, os.path.join(out_dir, 'metrics.csv'), METRICS_COLUMNS)
    write_csv(metrics_frame, os.path.join(out_dir, 'curve.csv'), CURVE_COLUMNS)
    if config.mode == 'float':
        write_csv(dense_weights_frame(net), os.path.join(out_dir, 'final_weights.csv'), WEIGHT_COLUMNS)
    else:
        write_csv(model_dump_frame(net), os.path.join(out_dir, 'final_model_dump.csv'), MODEL_DUMP_COLUMNS)
    write_csv(biases_frame(net), os.path.join(out_dir, 'final_biases.csv'), BIAS_COLUMNS)
    if config.debug_dump:
        write_debug_dump(net, out_dir)

    final = rows[-1]
    print("\n📊 Run Summary:")
    print(f"   Final test accuracy: {final.test_acc:.4f}")
    print(f"   Total bit flips: {sum(m.bit_flips for m in rows)}")
    print(f"   Total program events: {sum(m.program_events for m in rows)}")
    if synthetic and config.mode != 'float':
        print("   Note: device sigmas are synthetic defaults")
    print(f"✅ Outputs written to {out_dir}")
    return 0


def run_calibration(config: ExperimentConfig, measurements_path: str = None) -> int:
    """
    Run the calibration protocol (or ingest a measurement CSV) and fit the macro-model.

    Writes measurements.csv (simulated runs only), fitted_macro_model.yaml and fitted_stats.csv.
    """
    _banner("FeFET Variation Calibration")
    out_dir = create_output_dir(config.out_dir)
    echo_config(config, out_dir)

    if measurements_path:
        print(f"🔄 Reading measurements from {measurements_path}")
        records = parse_measurement_csv(measurements_path)
        source = None
    else:
        source, synthetic = resolve_macro_model(config)
        if synthetic:
            print(SYNTHETIC_CAVEAT)
        rows, cols, cycles = config.calibration_rows, config.calibration_cols, config.calibration_cycles
        print(f"🔄 Programming {rows}x{cols} devices to levels 0 and {source.max_level}, {cycles} cycles each")
        records = run_calibration_protocol((rows, cols), source, RngKey(config.seed), cycles)
        write_measurement_csv(records, os.path.join(out_dir, 'measurements.csv'))
    print(f"✅ {len(records)} measurement records")

    stats, fitted = fit_variation_model(records, levels=source.levels if source else None)
    export_macro_model(fitted, os.path.join(out_dir, 'fitted_macro_model.yaml'))
    write_csv(stats.to_frame(), os.path.join(out_dir, 'fitted_stats.csv'), FITTED_STATS_COLUMNS)

    print("\n📊 Fitted Macro-Model:")
    print(f"   g_off = {fitted.g_off:.6g} µS, g_on = {fitted.g_on:.6g} µS, levels = {fitted.levels}")
    print(f"   sigma_d2d = {fitted.sigma_d2d:.6g} µS, sigma_c2c = {fitted.sigma_c2c:.6g} µS "
          f"({stats.n_devices} devices, {stats.n_records} records)")
    if source is not None:
        print(f"   generator: sigma_d2d = {source.sigma_d2d:.6g} µS, sigma_c2c = {source.sigma_c2c:.6g} µS")
    print(f"✅ Outputs written to {out_dir}")
    return 0


def load_network_dump(source_dir: str, model: MacroModel) -> NetworkState:
    """Inference-only network rebuilt from a run's final dump files."""
    device_dump = os.path.join(source_dir, 'final_model_dump.csv')
    dense_dump = os.path.join(source_dir, 'final_weights.csv')
    biases = pd.read_csv(os.path.join(source_dir, 'final_biases.csv'), float_precision='round_trip')

    if os.path.exists(device_dump):
        frame = pd.read_csv(device_dump, float_precision='round_trip')
        weights = [weights_from_dump(group, model) for _, group in frame.groupby('layer', sort=True)]
    elif os.path.exists(dense_dump):
        frame = pd.read_csv(dense_dump, float_precision='round_trip')
        weights = []
        for _, group in frame.groupby('layer', sort=True):
            w = np.zeros((int(group['row'].max()) + 1, int(group['col'].max()) + 1))
            w[group['row'].to_numpy(), group['col'].to_numpy()] = group['weight'].to_numpy()
            weights.append(w)
    else:
        raise FormatError(f"{source_dir}: no final_model_dump.csv or final_weights.csv")

    layers = []
    for index, w in enumerate(weights):
        bias = biases.loc[biases['layer'] == index].sort_values('index')['bias'].to_numpy(dtype=np.float64)
        if bias.size != w.shape[1]:
            raise FormatError(f"{source_dir}: layer {index} has {bias.size} biases for {w.shape[1]} outputs")
        layers.append(LayerState(scale=layer_scale(w.shape[0]), bias=bias, dense=w))
    sizes = [weights[0].shape[0]] + [w.shape[1] for w in weights]
    return NetworkState(topology=MlpTopology(tuple(sizes)), layers=layers, mode='float')


def run_evaluation(config: ExperimentConfig, source_dir: str) -> int:
    """Evaluate a finished run's dumped model on the test set."""
    _banner("FeFET Model Evaluation")
    config = resolve_dataset_paths(config, need_train=False)
    model = import_macro_model(os.path.join(source_dir, 'macro_model.yaml'))
    net = load_network_dump(source_dir, model)
    test = load_mnist(config.test_images, config.test_labels).subset(config.test_subset)
    _check_topology(net.topology, test)

    accuracy = evaluate(net, test)
    out_dir = create_output_dir(config.out_dir)
    write_csv(pd.DataFrame({'samples': [len(test)], 'test_acc': [accuracy]}), os.path.join(out_dir, 'eval.csv'))
    print(f"✅ Test accuracy of {source_dir}: {accuracy:.4f} on {len(test)} samples")
    return 0
