"""Named configuration bundles replicating the hyperparameter-table columns
(R1, R2, C1, C2, S1-S5, AR, AS1, AS2) plus desk-scale "mini" variants.

Presets live in ``stacksolver/presets/*.cfg`` as flat key = value files and
are resolved here into environment, encoder, sampler and training configs.
A preset may list a larger network output dimension than the computed action
count (the AS columns do); the surplus outputs are permanently masked and the
discrepancy is surfaced as a warning, never silently patched.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

from .adversary import GeneratorConfig
from .config import ConfigError, ConfigView, parse_config_text, read_config
from .encoder import EncoderConfig
from .environment import EnvConfig
from .expr import Num
from .neural import param_count
from .parser import parse_expression
from .taskgen import SamplerConfig
from .trainer import EpsSchedule, LrSchedule, TrainConfig


@dataclass
class GeneratorBundle:
    gen_cfg: GeneratorConfig
    env: EnvConfig
    train: TrainConfig
    expected: dict
    pad_actions: int

    def network_sizes(self):
        return [self.env.encoder.input_dim, *self.train.hidden,
                self.env.n_actions + 1 + self.pad_actions]


@dataclass
class Preset:
    name: str
    kind: str  # "solver" | "adversarial"
    env: EnvConfig
    train: TrainConfig
    sampler: SamplerConfig | None
    expected: dict  # A / input_dim / params from the hyperparameter tables
    pad_actions: int
    generator: GeneratorBundle | None = None

    def network_sizes(self):
        return [self.env.encoder.input_dim, *self.train.hidden,
                self.env.n_actions + self.pad_actions]

    @property
    def output_dim(self):
        return self.env.n_actions + self.pad_actions


def _parse_constants(view: ConfigView):
    vals = []
    for token in view.strs("constants", ("0", "1", "-1")):
        e = parse_expression(token)
        if not isinstance(e, Num):
            raise ConfigError(f"constant {token!r} is not a number")
        vals.append(e.value)
    return tuple(vals)


def _env_from(view: ConfigView, prefix: str = "") -> EnvConfig:
    p = prefix
    symbolic = view.bool(p + "symbolic", False)
    complex_coeffs = view.bool(p + "complex", False)
    o_eq = view.int(p + "O_eq", 2)
    if o_eq not in (2, 3):
        raise ConfigError("O_eq must be 2 or 3")
    enc = EncoderConfig(
        stack_size=view.int(p + "S", 5),
        term_size=view.int(p + "T", 5),
        number_rows=view.int(p + "N", 2 if complex_coeffs else 1),
        sym_rows=view.int(p + "sym_rows", 1 if symbolic else 0),
        cap=Fraction(view.int(p + "cap", 500)),
        scale=view.int(p + "scale", 100),
    )
    return EnvConfig(
        stack_size=enc.stack_size,
        term_size=enc.term_size,
        constants=_parse_constants(view),
        eq_ops=("+", "*", "^")[:o_eq],
        symbolic=symbolic,
        complex_coeffs=complex_coeffs,
        t_max=view.int(p + "t_max", 100),
        r_slv=view.float(p + "r_slv", 3.0),
        r_so=view.float(p + "r_so", -0.25),
        p_st=view.float(p + "p_st", 1.0),
        p_as=view.float(p + "p_as", 0.25),
        simplify_budget=view.int(p + "simplify_budget", 10_000),
        encoder=enc,
    )


def _train_from(view: ConfigView, prefix: str = "") -> TrainConfig:
    p = prefix
    eps_kind = view.str(p + "eps_schedule", "exp")
    if eps_kind == "exp":
        eps = EpsSchedule("exp", view.float(p + "eps_i"), view.float(p + "eps_f"),
                          t_eps=view.float(p + "T_eps"))
    else:
        eps = EpsSchedule("adaptive", view.float(p + "eps_i"), view.float(p + "eps_f"),
                          alpha=view.float(p + "alpha_eps", 1.0))
    eta_kind = view.str(p + "eta_schedule", "fixed")
    if eta_kind == "fixed":
        lr = LrSchedule("fixed", eta=view.float(p + "eta"))
    else:
        lr = LrSchedule("adaptive", eta_i=view.float(p + "eta_i"),
                        eta_f=view.float(p + "eta_f"),
                        alpha=view.float(p + "alpha_eta", 1.0))
    return TrainConfig(
        hidden=view.ints(p + "hidden"),
        gamma=view.float(p + "gamma", 0.9),
        replay_capacity=view.int(p + "M", 500_000),
        batch_size=view.int(p + "B", 128),
        explore_steps=view.int(p + "p", 4),
        target_period=view.int(p + "tau_hat", 100),
        target_blend=view.float(p + "eps_hat", 1.0),
        momentum=view.float(p + "mu", 0.0),
        eps=eps,
        lr=lr,
        window=view.int(p + "window", 100),
        epochs=view.int(p + "epochs", 10_000),
        eval_every=view.int(p + "eval_every", 1_000),
        checkpoint_every=view.int(p + "checkpoint_every", 10_000),
    )


def _sampler_from(view: ConfigView) -> SamplerConfig | None:
    if not view.has("task"):
        return None
    return SamplerConfig(
        field=view.str("field", "Z"),
        kind=view.str("task"),
        p0=view.float("p0", 0.0),
        int_bound=view.int("int_bound", 10),
        rat_num_bound=view.int("rat_num_bound", 50),
        rat_den_bound=view.int("rat_den_bound", 10),
    )


def _expected_from(view: ConfigView, prefix: str = "") -> dict:
    out = {}
    for key, cfg_key in (("A", "A_listed"), ("input_dim", "input_dim"),
                         ("params", "total_params")):
        k = prefix + cfg_key
        if view.has(k):
            out[key] = view.int(k)
    return out


def preset_from_dict(name: str, raw: dict, source: str = "<preset>") -> Preset:
    view = ConfigView(raw, source)
    kind = view.str("kind", "solver")
    env = _env_from(view)
    train = _train_from(view)
    sampler = _sampler_from(view)
    expected = _expected_from(view)
    pad = max(0, expected.get("A", env.n_actions) - env.n_actions)
    generator = None
    if kind == "adversarial":
        gen_cfg = GeneratorConfig(
            family=view.str("gen_family"),
            r_fool=view.float("r_fool", 3.0),
            p_step=view.float("p_step", 0.01),
            p0=view.float("gen_p0", 0.5),
        )
        gen_env = _env_from(view, "gen_") if view.has("gen_S") else env
        gen_train = _train_from(view, "gen_")
        gen_expected = _expected_from(view, "gen_")
        gen_pad = max(0, gen_expected.get("A", gen_env.n_actions + 1)
                      - (gen_env.n_actions + 1))
        generator = GeneratorBundle(gen_cfg, gen_env, gen_train, gen_expected, gen_pad)
    unknown = view.unknown_keys()
    if unknown:
        raise ConfigError(f"{source}: unknown keys {unknown}")
    return Preset(name=name, kind=kind, env=env, train=train, sampler=sampler,
                  expected=expected, pad_actions=pad, generator=generator)


def available_presets() -> list[str]:
    files = resources.files("stacksolver").joinpath("presets")
    return sorted(p.name[:-4] for p in files.iterdir() if p.name.endswith(".cfg"))


def load_preset(name_or_path: str) -> Preset:
    """Load a shipped preset by name or any config file by path."""
    import os

    if os.path.sep in name_or_path or name_or_path.endswith(".cfg"):
        if os.path.exists(name_or_path):
            name = os.path.basename(name_or_path).rsplit(".", 1)[0]
            return preset_from_dict(name, read_config(name_or_path), name_or_path)
    files = resources.files("stacksolver").joinpath("presets")
    candidate = files.joinpath(f"{name_or_path}.cfg")
    if not candidate.is_file():
        raise ConfigError(
            f"unknown preset {name_or_path!r}; available: {', '.join(available_presets())}")
    text = candidate.read_text(encoding="utf-8")
    return preset_from_dict(name_or_path, parse_config_text(text, name_or_path),
                            name_or_path)


def verify_preset(p: Preset) -> list[str]:
    """Check derived dimensions against the table values carried by the
    preset.  Returns warnings (the AS action-count discrepancy); raises on
    hard input-dimension or parameter-count mismatches."""
    warnings = []
    bundles = [("", p.env, p.network_sizes(), p.expected, p.env.n_actions)]
    if p.generator is not None:
        g = p.generator
        bundles.append(("generator ", g.env, g.network_sizes(), g.expected,
                        g.env.n_actions + 1))
    for label, env, sizes, expected, computed_a in bundles:
        if "input_dim" in expected and env.encoder.input_dim != expected["input_dim"]:
            raise ConfigError(
                f"{p.name}: {label}input dim {env.encoder.input_dim} != "
                f"expected {expected['input_dim']}")
        if "params" in expected and param_count(sizes) != expected["params"]:
            raise ConfigError(
                f"{p.name}: {label}parameter count {param_count(sizes)} != "
                f"expected {expected['params']}")
        if "A" in expected and expected["A"] != computed_a:
            warnings.append(
                f"{p.name}: {label}action count {computed_a} computed from "
                f"2T+O_eq+C_num+O_st, but the hyperparameter table lists "
                f"A = {expected['A']}; the network uses {expected['A']} outputs "
                f"with the surplus permanently masked")
    return warnings
