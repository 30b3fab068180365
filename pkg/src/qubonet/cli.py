"""Command line front end: train, build-qubo, sample, classify, bench.

Every subcommand takes an optional flat key=value config file; explicit
flags win over config values, which win over the built-in defaults.
Classification output is byte-identical for a fixed config and seed.

Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed
files, inconsistent models), 3 runtime error (training failure and other
unexpected conditions).
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import nn
from .build import (
    BuildParams,
    assemble,
    assemble_scaled,
    normalize_features,
    scaled_reference_geometry,
    write_layout,
)
from .errors import CapacityError, DimensionError, FormatError, TrainingError
from .estimator import score_features, score_image
from .inference import (
    ConfusionTable,
    confusion,
    paper_scale,
    render_table,
    render_table_csv,
)
from .nn import read_glyphs, read_weights, write_weights
from .qubo import read_qubo, write_qubo, write_sampleset
from .samplers import BACKENDS, SamplerConfig, get_sampler, sample_anneal

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3

#: key -> (type, default); the single source of config-file vocabulary.
SCHEMA = {
    "glyphs": (str, None),
    "weights": (str, "model.weights"),
    "features": (str, None),
    "qubo": (str, "model.qubo"),
    "layout": (str, "model.layout"),
    "samples": (str, "model.samples"),
    "backend": (str, "anneal"),
    "reads": (int, 1000),
    "sweeps": (int, 1000),
    "beta_start": (float, 0.1),
    "beta_end": (float, 5.0),
    "seed": (int, nn.GLYPH_TRAINING_SEED),
    "threads": (int, 1),
    "k": (int, 100),
    "alpha": (float, 1.0),
    "penalty": (float, None),
    "clamp_mode": (str, "free"),
    "epochs": (int, 2000),
    "learning_rate": (float, 0.5),
    "digit": (int, None),
    "label": (int, None),
    "format": (str, "text"),
    "repetitions": (int, 30),
}


class Settings:
    """Resolved parameters: flags over config file over defaults."""

    def __init__(self, args: argparse.Namespace):
        config = _read_config(args.config) if args.config else {}
        for key, (_, default) in SCHEMA.items():
            flag = getattr(args, key, None)
            if flag is not None:
                value = flag
            elif key in config:
                value = config[key]
            else:
                value = default
            setattr(self, key, value)

    def sampler_config(self) -> SamplerConfig:
        return SamplerConfig(
            reads=self.reads,
            sweeps=self.sweeps,
            beta_start=self.beta_start,
            beta_end=self.beta_end,
            seed=self.seed,
            threads=self.threads,
        )

    def build_params(self) -> BuildParams:
        return BuildParams(alpha=self.alpha, penalty=self.penalty, clamp_mode=self.clamp_mode)


def _read_config(path: str) -> dict:
    values = {}
    with open(path) as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{number}: expected key=value, got {line!r}")
            key, _, text = line.partition("=")
            key, text = key.strip(), text.strip()
            if key not in SCHEMA:
                raise ValueError(f"{path}:{number}: unknown config key {key!r}")
            kind, _ = SCHEMA[key]
            if key == "penalty" and text.lower() == "auto":
                values[key] = None
                continue
            try:
                values[key] = kind(text)
            except ValueError:
                raise ValueError(
                    f"{path}:{number}: bad {kind.__name__} value {text!r} for {key}"
                ) from None
    return values


def _load_glyphs(settings) -> list:
    if settings.glyphs is None:
        return nn.glyph_images()
    return read_glyphs(settings.glyphs)


def cmd_train(settings) -> int:
    images = _load_glyphs(settings)
    weights = nn.train(
        images,
        learning_rate=settings.learning_rate,
        epochs=settings.epochs,
        seed=settings.seed,
    )
    accuracy = nn.accuracy(weights, images)
    write_weights(weights, settings.weights)
    print(f"training accuracy {accuracy:.6f}")
    print(f"wrote {settings.weights}")
    return EXIT_OK


def cmd_build_qubo(settings) -> int:
    weights = read_weights(settings.weights)
    params = settings.build_params()
    if settings.features is not None:
        labels, vectors = nn.read_features(settings.features)
        if settings.label is None:
            raise ValueError("--features needs --label to pick a row")
        if settings.label not in labels:
            raise DimensionError(f"label {settings.label} not in feature file")
        raw = vectors[labels.index(settings.label)]
    else:
        if settings.digit is None:
            raise ValueError("pass --features or --digit to choose an input")
        images = _load_glyphs(settings)
        matches = [img for img in images if img.label == settings.digit]
        if not matches:
            raise DimensionError(f"digit {settings.digit} not in glyph set")
        raw = nn.forward(weights, matches[0]).conv_features
    features, mapping = normalize_features(raw, params.alpha)
    qubo, layout = assemble(features, weights, params, norm=mapping)
    write_qubo(qubo, settings.qubo)
    write_layout(layout, settings.layout)
    print(f"wrote {settings.qubo} ({qubo.n} nodes) and {settings.layout}")
    return EXIT_OK


def cmd_sample(settings) -> int:
    qubo = read_qubo(settings.qubo)
    sampler = get_sampler(settings.backend)
    samples = sampler(qubo, settings.sampler_config())
    write_sampleset(samples, settings.samples)
    print(f"wrote {samples.reads} reads to {settings.samples}")
    print(f"best energy {samples.energies[0]:.17g}")
    return EXIT_OK


def cmd_classify(settings) -> int:
    if settings.format not in ("text", "csv"):
        raise ValueError(f"format must be text or csv, got {settings.format!r}")
    get_sampler(settings.backend)  # validate before any real work
    weights = read_weights(settings.weights)
    params = settings.build_params()
    config = settings.sampler_config()
    if settings.features is not None:
        labels, vectors = nn.read_features(settings.features)
        by_label: dict[int, list[np.ndarray]] = {}
        for label, raw in zip(labels, vectors):
            scores = score_features(raw, weights, params, config, settings.backend, settings.k)
            by_label.setdefault(label, []).append(scores.per_class)
        rows = tuple(sorted(by_label))
        table = ConfusionTable(
            rows,
            np.array(
                [[paper_scale(v) for v in np.mean(by_label[lbl], axis=0)] for lbl in rows]
            ),
        )
    else:
        images = _load_glyphs(settings)
        table = confusion(
            images,
            lambda img: score_image(img, weights, params, config, settings.backend, settings.k),
            weights.n_classes,
        )
    render = render_table if settings.format == "text" else render_table_csv
    sys.stdout.write(render(table))
    return EXIT_OK


def _scaled_model(seed: int):
    rng = np.random.default_rng(seed)
    geometry, stride = scaled_reference_geometry()
    filters = rng.uniform(-0.5, 0.5, (8, 5, 5))
    hidden = rng.uniform(-0.5, 0.5, (128, 24))
    output = rng.uniform(-0.5, 0.5, (24, 10))
    return geometry, stride, filters, hidden, output


def _scaled_forward(pixels, filters, stride, geometry, hidden, output):
    d = filters.shape[0]
    out_h, out_w = geometry.conv_output(filters.shape[1], filters.shape[2], stride)
    patches = nn._patches(pixels, filters.shape[1], filters.shape[2], stride, out_h, out_w)
    conv = nn.sigmoid(patches @ filters.reshape(d, -1).T).T.reshape(-1)
    hidden_act = nn.sigmoid(conv @ hidden)
    return nn.softmax(hidden_act @ output)


def cmd_bench(settings) -> int:
    if settings.repetitions < 30:
        raise ValueError(f"need at least 30 repetitions, got {settings.repetitions}")
    config = settings.sampler_config()
    geometry, stride, filters, hidden, output = _scaled_model(settings.seed)
    qubo, layout = assemble_scaled(filters, stride, geometry, hidden, output)
    sizes = " ".join(str(len(span)) for span in layout.roles.values())
    print(f"model nodes {qubo.n} layers {sizes}")

    rng = np.random.default_rng(settings.seed + 1)
    image = rng.random((geometry.input_height, geometry.input_width))
    _scaled_forward(image, filters, stride, geometry, hidden, output)  # warm-up
    timings = []
    for _ in range(settings.repetitions):
        start = time.perf_counter()
        _scaled_forward(image, filters, stride, geometry, hidden, output)
        timings.append((time.perf_counter() - start) * 1e6)
    forward_min, forward_median = min(timings), float(np.median(timings))
    print(
        f"classical forward min {forward_min:.1f} us median {forward_median:.1f} us "
        f"over {settings.repetitions} runs"
    )

    warm = SamplerConfig(reads=1, sweeps=2, seed=config.seed, threads=config.threads)
    sample_anneal(qubo, warm)  # warm-up, compiles the kernel if needed
    start = time.perf_counter()
    sample_anneal(qubo, config)
    elapsed = time.perf_counter() - start
    per_read = elapsed * 1e6 / config.reads
    print(
        f"sa sampling {config.reads} reads x {config.sweeps} sweeps "
        f"total {elapsed:.3f} s per read {per_read:.1f} us"
    )
    print(f"ratio sa-read/forward-median {per_read / forward_median:.2f}")
    print("note: classical samplers only; no quantum hardware timing is reproduced")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qubonet", description=__doc__.splitlines()[0])
    commands = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text, keys):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", help="flat key=value config file")
        for key in keys:
            kind, _ = SCHEMA[key]
            sub.add_argument(f"--{key.replace('_', '-')}", dest=key, type=kind)
        sub.set_defaults(func=func)
        return sub

    add(
        "train",
        cmd_train,
        "train the glyph CNN and write a weight file",
        ["glyphs", "weights", "seed", "epochs", "learning_rate"],
    )
    add(
        "build-qubo",
        cmd_build_qubo,
        "assemble the QUBO and layout for one input",
        [
            "weights", "glyphs", "digit", "features", "label",
            "qubo", "layout", "alpha", "penalty", "clamp_mode",
        ],
    )
    add(
        "sample",
        cmd_sample,
        "draw samples from a QUBO file",
        [
            "qubo", "samples", "backend", "reads", "sweeps",
            "beta_start", "beta_end", "seed", "threads",
        ],
    )
    add(
        "classify",
        cmd_classify,
        "run the pipeline on every input and print the confusion table",
        [
            "weights", "glyphs", "features", "backend", "reads", "sweeps",
            "beta_start", "beta_end", "seed", "threads", "k",
            "alpha", "penalty", "clamp_mode", "format",
        ],
    )
    add(
        "bench",
        cmd_bench,
        "time the scaled model: classical forward vs SA per read",
        ["reads", "sweeps", "repetitions", "seed", "threads"],
    )
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        settings = Settings(args)
        return args.func(settings)
    except FileNotFoundError as exc:
        print(f"qubonet: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except (FormatError, DimensionError, CapacityError) as exc:
        print(f"qubonet: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"qubonet: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"qubonet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - last resort
        print(f"qubonet: unexpected error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
