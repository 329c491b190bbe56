"""Game model for stochastic linear partial monitoring.

A game is a finite set of actions x_i in R^d, each paired with an
observation operator A_i in R^{d x m_i}.  Playing action i against an
environment parameter theta yields the (unobserved) reward <x_i, theta>
and a noisy observation A_i^T theta + eps.  Constructors rescale every
instance so that action norms, operator norms and the action-set
diameter are all at most one.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

NORM_TOL = 1e-9

PRESET_KINDS = (
    "bandit",
    "full_info",
    "dueling_avg",
    "transductive",
    "batch",
    "laser",
    "zero_info",
    "circle",
    "explicit",
)

_MAX_ACTIONS = 20000


@dataclass(frozen=True)
class NoiseModel:
    """Observation noise: centered gaussian or a +/-1 coin with given mean."""

    kind: str = "gaussian"
    sigma: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "binary_sign"):
            raise ValueError(f"unknown noise kind: {self.kind!r}")
        if self.kind == "gaussian" and not (self.sigma >= 0.0):
            raise ValueError("gaussian noise needs sigma >= 0")

    def sample(self, mean: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        if self.kind == "gaussian":
            return mean + self.sigma * rng.standard_normal(mean.shape)
        # binary_sign: single observation coordinate, values in {-1, +1}
        if mean.shape != (1,):
            raise ValueError("binary_sign noise requires observation dimension 1")
        if abs(mean[0]) > 1.0 + NORM_TOL:
            raise ValueError(f"binary_sign mean {mean[0]} outside [-1, 1]")
        p = min(1.0, max(0.0, 0.5 * (1.0 + mean[0])))
        return np.array([1.0 if rng.random() < p else -1.0])


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(np.asarray(a, dtype=float))
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Game:
    """Finite linear partial monitoring instance.

    actions: (K, d) reward feature matrix, row i is x_i.
    obs_ops: tuple of (d, m_i) observation operators A_i.
    """

    dim: int
    actions: np.ndarray
    obs_ops: tuple
    noise: NoiseModel = NoiseModel()
    name: str = "game"
    meta: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        actions = _freeze(self.actions)
        if actions.ndim != 2 or actions.shape[0] == 0:
            raise ValueError("actions must be a non-empty (K, d) matrix")
        if actions.shape[1] != self.dim:
            raise ValueError("action dimension mismatch")
        ops = tuple(_freeze(np.atleast_2d(A)) for A in self.obs_ops)
        if len(ops) != actions.shape[0]:
            raise ValueError("one observation operator per action required")
        for A in ops:
            if A.shape[0] != self.dim or A.shape[1] < 1:
                raise ValueError(f"operator shape {A.shape} incompatible with d={self.dim}")
            if np.linalg.norm(A, 2) > 1.0 + NORM_TOL:
                raise ValueError("operator spectral norm exceeds 1")
        norms = np.linalg.norm(actions, axis=1)
        if norms.max() > 1.0 + NORM_TOL:
            raise ValueError("action norm exceeds 1")
        object.__setattr__(self, "actions", actions)
        object.__setattr__(self, "obs_ops", ops)

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]

    @property
    def obs_dims(self) -> tuple:
        return tuple(A.shape[1] for A in self.obs_ops)


@dataclass(frozen=True, eq=False)
class Environment:
    """A game together with the true parameter; theta must lie in the unit ball."""

    game: Game
    theta: np.ndarray
    rng_seed: int = 0

    def __post_init__(self):
        theta = _freeze(np.atleast_1d(self.theta))
        if theta.shape != (self.game.dim,):
            raise ValueError("theta dimension mismatch")
        if np.linalg.norm(theta) > 1.0 + NORM_TOL:
            raise ValueError("theta norm exceeds 1")
        object.__setattr__(self, "theta", theta)


def sample_observation(env: Environment, action_index: int, rng: np.random.Generator) -> np.ndarray:
    """Draw one noisy observation A_i^T theta + eps for the chosen action."""
    if not 0 <= action_index < env.game.n_actions:
        raise IndexError("action index out of range")
    mean = env.game.obs_ops[action_index].T @ env.theta
    return env.game.noise.sample(mean, rng)


@dataclass(frozen=True)
class PresetSpec:
    """Declarative description of a game, deserializable from config JSON."""

    kind: str
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "PresetSpec":
        doc = dict(doc)
        kind = doc.pop("kind", None)
        if kind is None:
            raise ValueError("game spec needs a 'kind' key")
        return cls(kind=kind, params=doc)


def _finalize(kind: str, actions, ops, noise: NoiseModel, meta: dict) -> Game:
    """Rescale actions and operators jointly so that action norms, operator
    spectral norms and the action-set diameter all come out at most one."""
    actions = np.asarray(actions, dtype=float)
    if actions.ndim != 2 or len(actions) == 0:
        raise ValueError("preset produced no actions")
    ops = [np.atleast_2d(np.asarray(A, dtype=float)) for A in ops]
    d = actions.shape[1]
    scale = 1.0
    scale = max(scale, float(np.linalg.norm(actions, axis=1).max()))
    for A in ops:
        if A.size:
            scale = max(scale, float(np.linalg.norm(A, 2)))
    if len(actions) > 1:
        diffs = actions[:, None, :] - actions[None, :, :]
        scale = max(scale, float(np.sqrt((diffs**2).sum(-1)).max()))
    if scale > 1.0 + NORM_TOL:
        actions = actions / scale
        ops = [A / scale for A in ops]
        name = f"{kind}[scale=1/{scale:.6g}]"
    else:
        scale = 1.0
        name = kind
    meta = dict(meta)
    meta["scale"] = scale
    return Game(dim=d, actions=actions, obs_ops=tuple(ops), noise=noise, name=name, meta=meta)


def _as_action_array(raw, what="actions") -> np.ndarray:
    arr = np.asarray(raw, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValueError(f"{what} must be a non-empty list of vectors")
    return arr


def _bandit(actions, noise):
    X = _as_action_array(actions)
    ops = [x[:, None] for x in X]
    return _finalize("bandit", X, ops, noise, {})


def _full_info(actions, noise):
    X = _as_action_array(actions)
    eye = np.eye(X.shape[1])
    return _finalize("full_info", X, [eye] * len(X), noise, {})


def _zero_info(actions, noise):
    X = _as_action_array(actions)
    zero = np.zeros((X.shape[1], 1))
    return _finalize("zero_info", X, [zero] * len(X), noise, {})


def _dueling_avg(ground_actions, noise):
    """All ordered pairs of ground actions; reward is the pair average, the
    observation operator is the reward difference (zero on the diagonal)."""
    X0 = _as_action_array(ground_actions, "ground_actions")
    n = len(X0)
    rewards, ops, pairs = [], [], []
    lookup = {}
    for a in range(n):
        for b in range(n):
            rewards.append(0.5 * (X0[a] + X0[b]))
            ops.append((X0[a] - X0[b])[:, None])
            lookup[(a, b)] = len(pairs)
            pairs.append((a, b))
    meta = {"pairs": tuple(pairs), "pair_lookup": lookup, "n_ground": n}
    return _finalize("dueling_avg", np.array(rewards), ops, noise, meta)


def _row_index(rows: np.ndarray, v: np.ndarray):
    for k, r in enumerate(rows):
        if np.allclose(r, v, atol=1e-12, rtol=0.0):
            return k
    return None


def _transductive(explore_set, target_set, noise):
    """Reward actions come from the target set, information comes from the
    explore set; overlapping vectors act as ordinary bandit arms."""
    S = _as_action_array(explore_set, "explore_set")
    V = _as_action_array(target_set, "target_set")
    if S.shape[1] != V.shape[1]:
        raise ValueError("explore and target sets must share the dimension")
    d = S.shape[1]
    rewards, ops, roles = [], [], []
    for v in V:
        k = _row_index(S, v)
        if k is None:
            rewards.append(v)
            ops.append(np.zeros((d, 1)))
            roles.append("target")
        else:
            rewards.append(v)
            ops.append(v[:, None])
            roles.append("overlap")
    for s in S:
        if _row_index(V, s) is None:
            rewards.append(np.zeros(d))
            ops.append(s[:, None])
            roles.append("explore")
    return _finalize("transductive", np.array(rewards), ops, noise, {"roles": tuple(roles)})


def _batch(ground_actions, B, noise):
    """Batched bandit: an action is a B-tuple of ground arms, reward is the
    tuple sum and all B coordinates are observed at once."""
    if int(B) != B or B < 1:
        raise ValueError("batch size B must be a positive integer")
    B = int(B)
    X0 = _as_action_array(ground_actions, "ground_actions")
    if len(X0) ** B > _MAX_ACTIONS:
        raise ValueError("batch preset would enumerate too many actions")
    rewards, ops, tuples = [], [], []
    for combo in itertools.product(range(len(X0)), repeat=B):
        cols = X0[list(combo)].T  # (d, B)
        rewards.append(cols.sum(axis=1))
        ops.append(cols.copy())
        tuples.append(combo)
    return _finalize("batch", np.array(rewards), ops, noise, {"tuples": tuple(tuples)})


def _circle(num_points, noise):
    if int(num_points) != num_points or num_points < 1:
        raise ValueError("num_points must be a positive integer")
    ang = 2.0 * np.pi * np.arange(int(num_points)) / int(num_points)
    X = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    ops = [x[:, None] for x in X]
    return _finalize("circle", X, ops, noise, {})


_LASER_ELL = 1.0
_LASER_CENTER_GRID = np.linspace(-2.0, 2.0, 5)
_LASER_POSITIONS = tuple((i, j) for i in (-1, 0, 1) for j in (-1, 0, 1))


def _laser_features(points: np.ndarray) -> np.ndarray:
    """25-dimensional radial basis embedding on the fixed 5x5 center grid."""
    cx, cy = np.meshgrid(_LASER_CENTER_GRID, _LASER_CENTER_GRID, indexing="ij")
    centers = np.stack([cx.ravel(), cy.ravel()], axis=1)
    d2 = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(-1)
    return np.exp(-d2 / (2.0 * _LASER_ELL**2))


def _laser_quad_points(pos, grid_m: int) -> np.ndarray:
    off = (np.arange(grid_m) + 0.5) / grid_m
    qx, qy = np.meshgrid(pos[0] + off, pos[1] + off, indexing="ij")
    return np.stack([qx.ravel(), qy.ravel()], axis=1)


def _laser(grid_m, variant, noise):
    """Laser alignment game: nine unit-shift positions.  At each position the
    learner either measures the integrated intensity over the unit square
    (a reward action) or inserts a screen that reports the intensity field on
    a grid_m x grid_m grid but earns nothing.  The invasive variant gives the
    reward actions bandit feedback; the transductive variant blinds them.
    """
    if int(grid_m) != grid_m or grid_m < 1:
        raise ValueError("grid_m must be a positive integer")
    if variant not in ("invasive", "transductive"):
        raise ValueError(f"unknown laser variant: {variant!r}")
    grid_m = int(grid_m)
    rewards, ops = [], []
    for pos in _LASER_POSITIONS:
        q = _laser_quad_points(pos, grid_m)
        phi = _laser_features(q)            # (grid_m^2, 25)
        r = phi.mean(axis=0)                # midpoint quadrature over the unit square
        rewards.append(r)
        ops.append(r[:, None] if variant == "invasive" else np.zeros((25, 1)))
    for pos in _LASER_POSITIONS:
        q = _laser_quad_points(pos, grid_m)
        ops.append(_laser_features(q).T)    # (25, grid_m^2) screen operator
        rewards.append(np.zeros(25))
    meta = {
        "positions": _LASER_POSITIONS,
        "variant": variant,
        "grid_m": grid_m,
        "intensity_idx": tuple(range(9)),
        "screen_idx": tuple(range(9, 18)),
        "lengthscale": _LASER_ELL,
    }
    return _finalize(f"laser_{variant}", np.array(rewards), ops, noise, meta)


def laser_truth(game: Game) -> np.ndarray:
    """Least-squares fit of the bump intensity f(z) = exp(-|z - (0.5, 0.5)|^2)
    onto the game's radial basis features, clipped into the unit ball."""
    g = np.linspace(-2.0, 2.0, 21)
    gx, gy = np.meshgrid(g, g, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    phi = _laser_features(pts)
    f = np.exp(-((pts[:, 0] - 0.5) ** 2 + (pts[:, 1] - 0.5) ** 2))
    theta, *_ = np.linalg.lstsq(phi, f, rcond=None)
    nrm = np.linalg.norm(theta)
    if nrm > 1.0:
        theta = theta / nrm
    return theta


def _explicit(actions, obs_ops, noise):
    """Build a game from literal action vectors and operators.

    Unlike the derived presets, explicit games are taken as given: action and
    operator norms must already be at most one (the constructor rejects them
    otherwise) and no rescaling is applied, so stated rewards and observation
    scales are preserved exactly.
    """
    X = _as_action_array(actions)
    ops = [np.atleast_2d(np.asarray(A, dtype=float)) for A in obs_ops]
    ops = [A.reshape(X.shape[1], -1) if A.size else A for A in ops]
    return Game(dim=X.shape[1], actions=X, obs_ops=tuple(ops), noise=noise,
                name="explicit", meta={"scale": 1.0})


def build_game(spec) -> Game:
    """Construct a Game from a PresetSpec or an equivalent dict."""
    if isinstance(spec, dict):
        spec = PresetSpec.from_dict(spec)
    if spec.kind not in PRESET_KINDS:
        raise ValueError(f"unknown preset kind: {spec.kind!r}; expected one of {PRESET_KINDS}")
    params = dict(spec.params)
    noise_doc = params.pop("noise", None)
    if noise_doc is None:
        noise = NoiseModel()
    elif isinstance(noise_doc, NoiseModel):
        noise = noise_doc
    else:
        extra = set(noise_doc) - {"kind", "sigma"}
        if extra:
            raise ValueError(f"unknown noise keys: {sorted(extra)}")
        noise = NoiseModel(**noise_doc)
    builders = {
        "bandit": _bandit,
        "full_info": _full_info,
        "zero_info": _zero_info,
        "dueling_avg": _dueling_avg,
        "transductive": _transductive,
        "batch": _batch,
        "circle": _circle,
        "laser": _laser,
        "explicit": _explicit,
    }
    builder = builders[spec.kind]
    try:
        return builder(**params, noise=noise)
    except TypeError as exc:
        raise ValueError(f"bad parameters for preset {spec.kind!r}: {exc}") from exc
