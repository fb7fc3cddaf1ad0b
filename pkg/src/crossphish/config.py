"""Run configuration: one INI file drives the whole experiment matrix.

Sections:
  [run]          seed, out_dir, mode (synthetic | local)
  [data]         where the two sources come from and how to split/balance
  [model.NAME]   hyperparameters per model kind (xgb, gbm, rf, dt, lr, nb)
  [experiments]  which experiments and which model the matrix uses
  [explain]      attribution sample sizes and plot knobs

Every knob has a default; an empty file gives the synthetic-mode defaults.
See configs/synthetic.ini for a fully annotated example.
"""

import configparser
import os
from dataclasses import dataclass, field

from .errors import ConfigError

_MODEL_KINDS = ("xgb", "gbm", "rf", "dt", "lr", "nb")

# INI keys are typed here; "lambda" is accepted as a spelling of lam
_INT_KEYS = {"n_rounds", "max_depth", "n_trees", "epochs", "min_samples_leaf",
             "mtry", "order"}
_FLOAT_KEYS = {"learning_rate", "lam", "lambda", "min_child_weight",
               "variance_floor", "l2"}


@dataclass
class RunConfig:
    seed: int = 0
    out_dir: str = "results"

    mode: str = "synthetic"            # synthetic | local
    d1_csv: str = ""
    d2_csv: str = ""
    d1_label_column: str = "phishing"
    d1_positive_label: str = "1"
    d1_drop_columns: tuple = ()
    d2_label_column: str = "status"
    d2_positive_label: str = "phishing"
    d2_drop_columns: tuple = ("url",)
    d1_schema: str = "d1"
    d2_schema: str = "d2"
    mapping_csv: str = ""              # empty = packaged default
    test_fraction: float = 0.3
    smote_k: int = 5
    merge_per_class: int = 600
    max_train_rows: int = 0            # 0 = no cap; applies to all-features runs
    synth_n_a: int = 4000
    synth_n_b: int = 3000
    d1_test_phishing: int = 0          # 0 = derive from test_fraction
    d1_test_legitimate: int = 0
    d2_test_phishing: int = 0
    d2_test_legitimate: int = 0

    matrix_model: str = "xgb"
    experiment_ids: tuple = ()         # empty = all nine
    zoo_models: tuple = ("lr", "dt", "rf", "nb", "gbm", "xgb")
    zoo_sources: tuple = ("d1", "d2")
    model_params: dict = field(default_factory=dict)

    explain_enabled: bool = True
    background_size: int = 128
    explain_per_class: int = 500
    top_k: int = 10
    bar_top_n: int = 30
    beeswarm_max_points: int = 400

    def params_for(self, kind):
        return dict(self.model_params.get(kind, {}))

    def test_counts_for(self, source):
        pos = getattr(self, f"{source}_test_phishing")
        neg = getattr(self, f"{source}_test_legitimate")
        if pos and neg:
            return {0: neg, 1: pos}
        return None


def _parse_tuple(raw):
    return tuple(s.strip() for s in raw.replace(",", " ").split() if s.strip())


def _coerce_model_params(section):
    params = {}
    for key, raw in section.items():
        if key in _INT_KEYS:
            params[key] = int(raw)
        elif key in _FLOAT_KEYS:
            params["lam" if key == "lambda" else key] = float(raw)
        else:
            raise ConfigError(f"unknown model option {key!r}")
    return params


def load_config(path):
    """Parse and validate one INI file into a RunConfig."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    cfg = RunConfig()
    if parser.has_section("run"):
        run = parser["run"]
        if "seed" in run:
            cfg.seed = run.getint("seed")
        cfg.out_dir = run.get("out_dir", cfg.out_dir)
        cfg.mode = run.get("mode", cfg.mode)

    if parser.has_section("data"):
        data = parser["data"]
        for key in ("d1_csv", "d2_csv", "d1_label_column", "d1_positive_label",
                    "d2_label_column", "d2_positive_label", "d1_schema",
                    "d2_schema", "mapping_csv"):
            if key in data:
                setattr(cfg, key, data.get(key))
        for key in ("smote_k", "merge_per_class", "max_train_rows",
                    "synth_n_a", "synth_n_b", "d1_test_phishing",
                    "d1_test_legitimate", "d2_test_phishing",
                    "d2_test_legitimate"):
            if key in data:
                setattr(cfg, key, data.getint(key))
        if "test_fraction" in data:
            cfg.test_fraction = data.getfloat("test_fraction")
        for key in ("d1_drop_columns", "d2_drop_columns"):
            if key in data:
                setattr(cfg, key, _parse_tuple(data.get(key)))

    if parser.has_section("experiments"):
        exp = parser["experiments"]
        cfg.matrix_model = exp.get("matrix_model", cfg.matrix_model)
        if "ids" in exp:
            cfg.experiment_ids = _parse_tuple(exp.get("ids"))
        if "zoo_models" in exp:
            cfg.zoo_models = _parse_tuple(exp.get("zoo_models"))
        if "zoo_sources" in exp:
            cfg.zoo_sources = _parse_tuple(exp.get("zoo_sources"))

    if parser.has_section("explain"):
        ex = parser["explain"]
        if "enabled" in ex:
            cfg.explain_enabled = ex.getboolean("enabled")
        for key in ("background_size", "explain_per_class", "top_k",
                    "bar_top_n", "beeswarm_max_points"):
            if key in ex:
                setattr(cfg, key, ex.getint(key))

    for section in parser.sections():
        if section.startswith("model."):
            kind = section.split(".", 1)[1]
            if kind not in _MODEL_KINDS:
                raise ConfigError(f"unknown model section [{section}]")
            cfg.model_params[kind] = _coerce_model_params(parser[section])

    _validate(cfg, path)
    return cfg


def _validate(cfg, path):
    if cfg.mode not in ("synthetic", "local"):
        raise ConfigError(f"{path}: mode must be synthetic or local, got {cfg.mode!r}")
    if cfg.mode == "local":
        for key in ("d1_csv", "d2_csv"):
            p = getattr(cfg, key)
            if not p:
                raise ConfigError(f"{path}: mode=local requires {key}")
            if not os.path.exists(p):
                raise ConfigError(f"{path}: {key} does not exist: {p}")
    if cfg.mapping_csv and not os.path.exists(cfg.mapping_csv):
        raise ConfigError(f"{path}: mapping_csv does not exist: {cfg.mapping_csv}")
    if not 0.0 < cfg.test_fraction < 1.0:
        raise ConfigError(f"{path}: test_fraction must be in (0, 1)")
    if cfg.matrix_model not in _MODEL_KINDS:
        raise ConfigError(f"{path}: matrix_model {cfg.matrix_model!r} unknown")
    for kind in cfg.zoo_models:
        if kind not in _MODEL_KINDS:
            raise ConfigError(f"{path}: zoo model {kind!r} unknown")
    for src in cfg.zoo_sources:
        if src not in ("d1", "d2"):
            raise ConfigError(f"{path}: zoo source {src!r} must be d1 or d2")
