"""Candidate material models in a polarization formulation.

Every material is described by B = mu0*H + J_p plus a source current density,
so a material is fully characterized by the pair (J_p(B), J). Permanent
magnets carry a constant polarization at unit relative permeability,
conductors carry a signed current density, steel follows a smooth saturating
polarization curve, and air is all zeros.
"""

import colorsys

import numpy as np

from .errors import InvalidParameters
from .kernels import froelich_polarization

MU0 = 4e-7 * np.pi
NU0 = 1.0 / MU0


def _as_bvec(b):
    b = np.asarray(b, dtype=np.float64)
    single = b.ndim == 1
    return b.reshape(-1, 2), single


class ConstantMaterial:
    """Linear material: fixed polarization vector, fixed current density."""

    linear = True

    def __init__(self, name, jp=(0.0, 0.0), current_density=0.0,
                 color=(1.0, 1.0, 1.0)):
        self.name = name
        self.jp = np.asarray(jp, dtype=np.float64)
        self.current_density = float(current_density)
        self.color = tuple(color)
        self.saturation = float(np.linalg.norm(self.jp))

    def polarization(self, b):
        b, single = _as_bvec(b)
        out = np.broadcast_to(self.jp, b.shape).copy()
        return out[0] if single else out

    def d_polarization_dB(self, b):
        b, single = _as_bvec(b)
        out = np.zeros((b.shape[0], 2, 2))
        return out[0] if single else out


class FroelichMaterial:
    """Isotropic saturating polarization J_p(B) = jp(|B|) * B/|B|.

    jp(b) = js*a*b / (js + a*b), which saturates at js and has initial
    slope a, i.e. initial relative permeability 1/(1-a). The slope stays
    below 1 everywhere, so B -> nu0*(B - J_p(B)) is strictly monotone and
    Newton solves stay well posed.
    """

    linear = False
    current_density = 0.0

    def __init__(self, name="steel", js=1.9, a=0.999, color=(0.5, 0.5, 0.5)):
        if not 0.0 < a < 1.0:
            raise InvalidParameters(f"need 0 < a < 1 for monotonicity, got {a}")
        if js <= 0.0:
            raise InvalidParameters(f"saturation polarization must be > 0, got {js}")
        self.name = name
        self.js = float(js)
        self.a = float(a)
        self.color = tuple(color)
        self.saturation = float(js)

    def polarization(self, b):
        b, single = _as_bvec(b)
        jp, _ = froelich_polarization(b, self.js, self.a)
        return jp[0] if single else jp

    def d_polarization_dB(self, b):
        b, single = _as_bvec(b)
        _, djp = froelich_polarization(b, self.js, self.a)
        return djp[0] if single else djp


def pm_model(angle_deg, remanence=1.0):
    """Ideal permanent magnet: constant polarization at the given angle."""
    th = np.deg2rad(angle_deg)
    hue = (angle_deg % 360.0) / 360.0
    return ConstantMaterial(
        name=f"pm_{int(round(angle_deg)) % 360:03d}",
        jp=(remanence * np.cos(th), remanence * np.sin(th)),
        color=colorsys.hsv_to_rgb(hue, 1.0, 0.9))


def steel_model(js=1.9, a=0.999):
    return FroelichMaterial("steel", js=js, a=a)


def conductor_model(sign, current=1.0e7):
    if sign not in (1, -1, 1.0, -1.0):
        raise InvalidParameters(f"conductor sign must be +1 or -1, got {sign}")
    pos = sign > 0
    return ConstantMaterial(
        name="conductor_pos" if pos else "conductor_neg",
        current_density=sign * current,
        color=(1.0, 0.55, 0.0) if pos else (0.0, 0.45, 1.0))


def air_model():
    return ConstantMaterial("air", color=(1.0, 1.0, 1.0))


class MaterialCatalogue:
    """Ordered list of candidate materials plus display colors."""

    def __init__(self, entries):
        self.entries = tuple(entries)
        names = [m.name for m in self.entries]
        if len(set(names)) != len(names):
            raise InvalidParameters("material names must be unique")

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    @property
    def names(self):
        return [m.name for m in self.entries]

    @property
    def colors(self):
        return np.array([m.color for m in self.entries])

    def index(self, name):
        return self.names.index(name)


def default_catalogue(pm_remanence=1.0, steel_js=1.9, steel_a=0.999,
                      conductor_current=1.0e7):
    """The 16-entry catalogue: 12 PMs at 30 degree steps, +-J, steel, air."""
    entries = [pm_model(30.0 * k, remanence=pm_remanence) for k in range(12)]
    entries.append(conductor_model(+1, current=conductor_current))
    entries.append(conductor_model(-1, current=conductor_current))
    entries.append(steel_model(js=steel_js, a=steel_a))
    entries.append(air_model())
    return MaterialCatalogue(entries)


def catalogue_from_config(cfg=None):
    cfg = dict(cfg or {})
    return default_catalogue(
        pm_remanence=cfg.get("pm_remanence", 1.0),
        steel_js=cfg.get("steel_js", 1.9),
        steel_a=cfg.get("steel_a", 0.999),
        conductor_current=cfg.get("conductor_current", 1.0e7))


def catalogue_to_config(cat):
    steel = cat[cat.index("steel")]
    pm0 = cat[cat.index("pm_000")]
    condp = cat[cat.index("conductor_pos")]
    return {
        "pm_remanence": pm0.saturation,
        "steel_js": steel.js,
        "steel_a": steel.a,
        "conductor_current": condp.current_density,
    }
