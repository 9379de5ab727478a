"""Flat ``key = value`` configuration with per-dataset presets."""

from dataclasses import dataclass, field, fields, replace
import logging

from .errors import ConfigError

log = logging.getLogger(__name__)

MODES = ("dp-small", "stereo-large")
SMOOTHERS = ("bilateral", "guided")


@dataclass
class Config:
    preset: str = "dslr-a"
    mode: str = "dp-small"
    # matching
    metric: str = "SAD"
    window_std: float = 8.0
    d_min: float = -12.0
    d_max: float = 6.0
    intensity_scale: float = 255.0
    # DSLR runs re-centre with a dedicated sub-pixel estimator; histeq stands in
    subpixel: str = "histeq"
    histeq_offset: float = 0.0
    # parabolas
    t_q: float = 2.2
    t_a: float = 0.04
    eps: float = 1e-4
    num_minima: int = 2
    # aggregation
    P: float = 3.2
    sigma: float = 3.25
    num_paths: int = 8
    scales: int = 3
    iterations: list = field(default_factory=lambda: [3, 3, 2])
    prior_weight: float = 1.5
    pyramid_factor: float = 2.0
    # large-disparity regime
    t_d: float = 0.1
    t_edge: float = 0.5
    t_prop: float = 1000.0
    P2: float = 0.05
    # pre-processing
    vignetting: bool = False
    vignetting_lpf_std: float = 32.0
    subtraction_bilateral: bool = False
    bilsub_spatial_std: float = 3.0
    bilsub_range_std: float = 20.0
    # post-processing
    postprocess: bool = False
    lr_tol: float = 1.0
    speckle_size: int = 100
    speckle_tol: float = 1.0
    median_window: int = 2
    smoother: str = "bilateral"
    sigma_luma: float = 4.0
    sigma_color: float = 4.0
    sigma_xy: float = 32.0
    lam: float = 512.0
    guided_radius: int = 37
    guided_eps: float = 0.2
    # SGM baseline
    sgm_p1: float = 0.5
    sgm_p2: float = 4.0
    # synthetic data
    seed: int = 0

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}, got {self.mode!r}")
        if self.metric.upper() not in ("SAD", "SSD", "NCC"):
            raise ConfigError("metric", f"unknown metric {self.metric!r}")
        if self.subpixel not in ("parabola", "histeq"):
            raise ConfigError("subpixel", f"unknown estimator {self.subpixel!r}")
        if self.smoother not in SMOOTHERS:
            raise ConfigError("smoother", f"must be one of {SMOOTHERS}")
        if self.scales < 1:
            raise ConfigError("scales", "must be >= 1")
        if len(self.iterations) != self.scales:
            raise ConfigError("iterations",
                              f"length {len(self.iterations)} != scales {self.scales}")
        if any(i < 1 for i in self.iterations):
            raise ConfigError("iterations", "every entry must be >= 1")
        if self.d_max < self.d_min:
            raise ConfigError("d_max", "must be >= d_min")
        for key in ("window_std", "sigma", "intensity_scale", "vignetting_lpf_std",
                    "bilsub_spatial_std", "bilsub_range_std", "sigma_luma", "sigma_xy"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, "must be positive")
        if not self.t_q > 1:
            raise ConfigError("t_q", "must exceed 1")
        if not self.eps > 0:
            raise ConfigError("eps", "must be positive")
        if self.P < 0:
            raise ConfigError("P", "must be non-negative")
        if self.mode == "stereo-large" and not 0 < self.P2 < self.P:
            raise ConfigError("P2", f"need 0 < P2 < P (P={self.P})")
        if self.num_paths not in (2, 4, 8):
            raise ConfigError("num_paths", "must be 2, 4 or 8")
        if self.num_minima < 1:
            raise ConfigError("num_minima", "must be >= 1")
        if self.prior_weight < 0:
            raise ConfigError("prior_weight", "must be non-negative")
        if not self.pyramid_factor > 1:
            raise ConfigError("pyramid_factor", "must exceed 1")
        if not -0.5 < self.histeq_offset < 0.5:
            raise ConfigError("histeq_offset", "must lie in (-0.5, 0.5)")
        if not 0 <= self.sgm_p1 <= self.sgm_p2:
            raise ConfigError("sgm_p1", "need 0 <= sgm_p1 <= sgm_p2")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, list):
                v = ",".join(str(i) for i in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


PRESETS = {
    "dslr-a": dict(window_std=8.0, P=3.2, scales=3, iterations=[3, 3, 2], prior_weight=1.5,
                   sigma=3.25, t_q=2.2, t_a=0.04, sigma_luma=4.0, sigma_color=4.0,
                   sigma_xy=32.0, lam=512.0, guided_radius=37, guided_eps=0.2,
                   d_min=-12.0, d_max=6.0),
    "dslr-b": dict(window_std=8.0, P=1.3, scales=4, iterations=[2, 2, 3, 6], prior_weight=2.5,
                   sigma=3.0, t_q=2.2, t_a=0.075, sigma_luma=4.0, sigma_color=4.0,
                   sigma_xy=32.0, lam=512.0, guided_radius=37, guided_eps=0.2,
                   d_min=-12.0, d_max=6.0),
    "phone": dict(window_std=11.0, P=7.0, scales=2, iterations=[4, 4], prior_weight=0.4,
                  sigma=6.0, t_q=2.2, t_a=0.01, sigma_luma=16.0, sigma_color=8.0,
                  sigma_xy=8.0, lam=15.0, guided_radius=7, guided_eps=0.1,
                  d_min=-1.3, d_max=0.5, subpixel="histeq", vignetting=True,
                  subtraction_bilateral=True),
    "middlebury": dict(mode="stereo-large", window_std=5.0, P=1.0, scales=1, iterations=[4],
                       prior_weight=0.0, sigma=3.0, t_q=2.2, t_a=0.001, t_d=0.1, t_edge=0.5,
                       t_prop=1000.0, P2=0.05, sigma_luma=16.0, sigma_color=4.0, sigma_xy=4.0,
                       lam=1.0, num_minima=5, d_min=0.0, d_max=64.0),
}
UNLISTED = {"middlebury": ("prior_weight",)}


def _field_types():
    return {f.name: f for f in fields(Config)}


def parse_value(key, raw):
    flds = _field_types()
    if key not in flds:
        raise ConfigError(key, "unknown configuration key")
    default = getattr(Config(), key)
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, list):
            raw = raw.strip("[]")
            return [int(x) for x in raw.replace(" ", ",").split(",") if x]
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {type(default).__name__}") from None


def parse_lines(text):
    """``key = value`` pairs; blank lines and ``#`` comments are skipped."""
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        out[key] = parse_value(key, raw)
    return out


def preset(name):
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    cfg = replace(Config(), preset=name, **PRESETS[name])
    for key in UNLISTED.get(name, ()):
        log.info("preset %s has no value for %s; using %r", name, key, getattr(cfg, key))
    return cfg


def load_config(path=None, text=None, preset_name=None, overrides=None):
    """Defaults, then preset, then file contents, then ``overrides``."""
    values = {}
    if path is not None:
        with open(path) as fh:
            values.update(parse_lines(fh.read()))
    if text is not None:
        values.update(parse_lines(text))
    for k, v in (overrides or {}).items():
        values[k] = parse_value(k, v) if isinstance(v, str) else v
        if k not in _field_types():
            raise ConfigError(k, "unknown configuration key")
    name = preset_name or values.pop("preset", None) or "dslr-a"
    values.pop("preset", None)
    cfg = preset(name)
    cfg = replace(cfg, **values)
    return cfg.validate()


def parse_overrides(pairs):
    """``["key=value", ...]`` from the command line into a dict."""
    out = {}
    for item in pairs or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v
    return out
