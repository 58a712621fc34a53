"""Built-in stochastic systems, controllers, and seeded terminal-state sampling.

Two simulatable benchmark systems are provided, and a third "external"
source that reads terminal states from a CSV file for systems simulated
elsewhere:

* CWH: linearized in-plane spacecraft relative motion, state
  (x, y, xdot, ydot), driven by an open-loop thrust sequence and advanced
  with the exact zero-order-hold discretization.
* TORA: translational oscillations with a rotational actuator, state
  (x1, x2, x3, x4), closed loop under either a saturated linear feedback or
  a user-supplied feed-forward network, integrated with classical RK4.

All randomness flows through numpy Generators.  Sample i of a run uses the
child seed ``child_seed(master_seed, i)``; the mixing function is pinned to
numpy's SeedSequence spawn mechanism so runs reproduce themselves exactly
regardless of evaluation order.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .estimator import SampleSet

# Admissible thrust box for the CWH system: each input coordinate must lie
# in [-CWH_INPUT_LIMIT, CWH_INPUT_LIMIT].
CWH_INPUT_LIMIT = 0.1

# Default open-loop CWH policy: constant small thrust toward the docking
# target at the origin (the built-in initial condition sits at negative x, y).
DEFAULT_CWH_THRUST = 0.01

RELU = "relu"
TANH = "tanh"
SIGMOID = "sigmoid"
LINEAR = "linear"

_ACTIVATIONS = {
    RELU: lambda v: np.maximum(v, 0.0),
    TANH: np.tanh,
    SIGMOID: expit,
    LINEAR: lambda v: v,
}


def child_seed(master_seed: int, index: int) -> int:
    """Deterministic per-stream seed for sample index ``index``.

    Pinned mixing function: numpy ``SeedSequence(master_seed,
    spawn_key=(index,))`` hashed to a 128-bit integer.  Streams for distinct
    indices are statistically independent and independent of the order in
    which they are consumed.
    """
    seq = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    words = seq.generate_state(4, dtype=np.uint32)
    return int.from_bytes(words.tobytes(), "little")


# ---------------------------------------------------------------------------
# Disturbances
# ---------------------------------------------------------------------------


def sample_gaussian(mean, covariance_diagonal, rng, size=None):
    """Draw from a diagonal-covariance Gaussian: mean + sqrt(diag) * z.

    With ``size`` given, returns a (size, dim) matrix of independent draws.
    A zero variance entry reproduces the mean coordinate exactly.
    """
    mu = np.asarray(mean, dtype=float)
    var = np.asarray(covariance_diagonal, dtype=float)
    if mu.shape != var.shape or mu.ndim != 1:
        raise ValueError("mean and covariance diagonal must be 1-d vectors of equal length")
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(var))):
        raise ValueError("Gaussian parameters must be finite")
    if np.any(var < 0):
        raise ValueError("covariance diagonal entries must be nonnegative")
    shape = mu.size if size is None else (int(size), mu.size)
    return mu + np.sqrt(var) * rng.standard_normal(shape)


def sample_scaled_beta(alpha, beta, scale, rng, size=None):
    """Draw scale * Beta(alpha, beta).

    Realized as the ratio g1 / (g1 + g2) of two independent gamma variates
    with shapes alpha and beta, which is exact for every shape parameter
    (including beta < 1, where naive inversion schemes lose accuracy).
    """
    if not (alpha > 0 and beta > 0):
        raise ValueError("beta shape parameters must be positive")
    g1 = rng.gamma(alpha, size=size)
    g2 = rng.gamma(beta, size=size)
    return scale * g1 / (g1 + g2)


@dataclass(frozen=True)
class NoDisturbance:
    def sample(self, rng, dim: int) -> np.ndarray:
        return np.zeros(dim)


@dataclass(frozen=True)
class GaussianDisturbance:
    mean: tuple
    covariance_diagonal: tuple

    def __post_init__(self):
        object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        object.__setattr__(
            self, "covariance_diagonal", tuple(float(v) for v in self.covariance_diagonal)
        )
        if len(self.mean) != len(self.covariance_diagonal):
            raise ValueError("mean and covariance diagonal must have equal length")
        if any(v < 0 for v in self.covariance_diagonal):
            raise ValueError("covariance diagonal entries must be nonnegative")

    def sample(self, rng, dim: int) -> np.ndarray:
        if dim != len(self.mean):
            raise ValueError(
                f"disturbance dimension {len(self.mean)} does not match state dimension {dim}"
            )
        return sample_gaussian(self.mean, self.covariance_diagonal, rng)


@dataclass(frozen=True)
class ScaledBetaDisturbance:
    """Per-coordinate scale * Beta(alpha, beta) draws, optionally masked.

    ``mask`` selects which state coordinates receive the disturbance
    (default: all of them).  Masked-off coordinates still consume draws, so
    changing the mask never realigns the random stream.
    """

    alpha: float = 2.0
    beta: float = 0.5
    scale: float = 0.01
    dims: int = 4
    mask: tuple = None

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError("beta shape parameters must be positive")
        if self.dims < 1:
            raise ValueError("dims must be at least 1")
        if self.mask is not None:
            mask = tuple(bool(v) for v in self.mask)
            if len(mask) != self.dims:
                raise ValueError("mask length must equal dims")
            object.__setattr__(self, "mask", mask)

    def sample(self, rng, dim: int) -> np.ndarray:
        if dim != self.dims:
            raise ValueError(
                f"disturbance dimension {self.dims} does not match state dimension {dim}"
            )
        draw = sample_scaled_beta(self.alpha, self.beta, self.scale, rng, size=self.dims)
        if self.mask is not None:
            draw = draw * np.asarray(self.mask, dtype=float)
        return draw


# ---------------------------------------------------------------------------
# Controllers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpLayer:
    weights: np.ndarray  # (out, in), applied as weights @ v + bias
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.size:
            raise ValueError("layer weights must be (out, in) with a matching bias vector")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in _ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}; expected one of {sorted(_ACTIVATIONS)}"
            )
        w.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class MlpController:
    """Feed-forward network mapping a state vector to a control vector."""

    layers: tuple
    saturation: tuple = None  # optional (lo, hi) per-coordinate output box

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ValueError("controller needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise ValueError(
                    f"layer dimensions do not chain: {prev.weights.shape} then {nxt.weights.shape}"
                )
        object.__setattr__(self, "layers", layers)
        if self.saturation is not None:
            lo = np.asarray(self.saturation[0], dtype=float)
            hi = np.asarray(self.saturation[1], dtype=float)
            if lo.shape != hi.shape or lo.size != self.output_dim or np.any(lo > hi):
                raise ValueError("saturation box must give lo <= hi per output coordinate")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "saturation", (lo, hi))

    @property
    def input_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weights.shape[0]


@dataclass(frozen=True)
class SaturatedFeedback:
    """Built-in TORA policy u = clamp(-k1 x3 - k2 x4) onto [-saturation, saturation]."""

    k1: float = 1.0
    k2: float = 1.0
    saturation: float = 1.0


def mlp_forward(controller: MlpController, state) -> np.ndarray:
    """Evaluate the network: affine map then activation per layer, then clamp."""
    v = np.asarray(state, dtype=float)
    if v.ndim != 1 or v.size != controller.input_dim:
        raise ValueError(
            f"controller expects an input of dimension {controller.input_dim}, got shape {v.shape}"
        )
    if not np.all(np.isfinite(v)):
        raise ValueError("controller input has non-finite entries")
    for index, layer in enumerate(controller.layers):
        # overflow is detected by the finite check, not raised as a warning
        with np.errstate(over="ignore", invalid="ignore"):
            v = _ACTIVATIONS[layer.activation](layer.weights @ v + layer.bias)
        if not np.all(np.isfinite(v)):
            raise ValueError(f"non-finite controller activation at layer {index}")
    if controller.saturation is not None:
        lo, hi = controller.saturation
        v = np.clip(v, lo, hi)
    return v


def control_output(controller, state) -> np.ndarray:
    if isinstance(controller, MlpController):
        return mlp_forward(controller, state)
    u = -controller.k1 * state[2] - controller.k2 * state[3]
    sat = controller.saturation
    return np.array([min(max(u, -sat), sat)])


def mlp_controller_from_dict(doc: dict) -> MlpController:
    """Build a controller from the JSON weight-file schema."""
    try:
        layers = []
        for index, spec in enumerate(doc["layers"]):
            rows = int(spec["rows"])
            cols = int(spec["cols"])
            flat = np.asarray(spec["weights"], dtype=float)
            if flat.size != rows * cols:
                raise ValueError(
                    f"layer {index}: weights hold {flat.size} values, expected rows*cols = {rows * cols}"
                )
            layers.append(
                MlpLayer(flat.reshape(rows, cols), np.asarray(spec["bias"], dtype=float), spec["activation"])
            )
        saturation = None
        if doc.get("saturation") is not None:
            saturation = (doc["saturation"]["lo"], doc["saturation"]["hi"])
        declared = (int(doc["input_dim"]), int(doc["output_dim"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed controller weight file: {exc!r}") from exc
    controller = MlpController(tuple(layers), saturation)
    if (controller.input_dim, controller.output_dim) != declared:
        raise ValueError(
            "declared input_dim/output_dim do not match the layer shapes: "
            f"{declared[0]}->{declared[1]} vs {controller.input_dim}->{controller.output_dim}"
        )
    return controller


def mlp_controller_to_dict(controller: MlpController) -> dict:
    doc = {
        "input_dim": controller.input_dim,
        "output_dim": controller.output_dim,
        "layers": [
            {
                "weights": [float(v) for v in layer.weights.ravel()],
                "rows": layer.weights.shape[0],
                "cols": layer.weights.shape[1],
                "bias": [float(v) for v in layer.bias],
                "activation": layer.activation,
            }
            for layer in controller.layers
        ],
        "saturation": None,
    }
    if controller.saturation is not None:
        lo, hi = controller.saturation
        doc["saturation"] = {"lo": [float(v) for v in lo], "hi": [float(v) for v in hi]}
    return doc


def load_mlp_controller(path) -> MlpController:
    with open(path, "r", encoding="utf-8") as fh:
        return mlp_controller_from_dict(json.load(fh))


def save_mlp_controller(controller: MlpController, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(mlp_controller_to_dict(controller), fh)
        fh.write("\n")


# ---------------------------------------------------------------------------
# System configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CwhSystem:
    """In-plane spacecraft relative motion under an open-loop thrust sequence.

    The default orbital rate, spacecraft mass, and sampling period are
    standard low-Earth-orbit rendezvous values; all are overridable.
    ``input_sequence`` is an (N, 2) thrust schedule inside the admissible
    box; None selects the constant default thrust toward the target.
    """

    omega: float = 0.00113
    mass: float = 300.0
    dt: float = 20.0
    input_sequence: tuple = None

    def __post_init__(self):
        if not (self.omega > 0 and self.mass > 0 and self.dt > 0):
            raise ValueError("omega, mass, and dt must be positive")
        if self.input_sequence is not None:
            seq = np.asarray(self.input_sequence, dtype=float)
            if seq.ndim != 2 or seq.shape[1] != 2 or not np.all(np.isfinite(seq)):
                raise ValueError("input_sequence must be a finite (N, 2) array")
            seq.flags.writeable = False
            object.__setattr__(self, "input_sequence", seq)

    def resolved_inputs(self, horizon: int) -> np.ndarray:
        if self.input_sequence is None:
            return np.full((horizon, 2), DEFAULT_CWH_THRUST)
        if self.input_sequence.shape[0] < horizon:
            raise ValueError(
                f"input_sequence has {self.input_sequence.shape[0]} steps, horizon needs {horizon}"
            )
        return self.input_sequence[:horizon]


@dataclass(frozen=True)
class ToraSystem:
    """Rotational-actuator benchmark in closed loop with a scalar controller."""

    controller: object = SaturatedFeedback()
    control_period: float = 0.1
    integrator_substeps: int = 10

    def __post_init__(self):
        if self.control_period <= 0:
            raise ValueError("control_period must be positive")
        if self.integrator_substeps < 1:
            raise ValueError("integrator_substeps must be at least 1")
        if isinstance(self.controller, MlpController) and self.controller.output_dim != 1:
            raise ValueError("TORA controller must produce a scalar control")


@dataclass(frozen=True)
class ExternalSource:
    """Terminal states supplied in a CSV sample file instead of simulation."""

    path: str


@dataclass(frozen=True)
class PointInitial:
    x: tuple

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(float(v) for v in self.x))

    def draw(self, rng) -> np.ndarray:
        return np.array(self.x)


@dataclass(frozen=True)
class BoxInitial:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi) or any(a > b for a, b in zip(lo, hi)):
            raise ValueError("initial box needs lo <= hi per coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def draw(self, rng) -> np.ndarray:
        return rng.uniform(self.lo, self.hi)


@dataclass(frozen=True)
class SystemConfig:
    """A simulatable system: dynamics, horizon, disturbance, initial condition."""

    system: object
    horizon: int
    disturbance: object = NoDisturbance()
    initial: object = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be at least 1")
        if self.initial is None and not isinstance(self.system, ExternalSource):
            raise ValueError("simulatable systems need an initial condition")


# ---------------------------------------------------------------------------
# Dynamics
# ---------------------------------------------------------------------------


def cwh_discrete_matrices(omega: float, mass: float, dt: float):
    """Exact zero-order-hold discretization of the CWH equations.

    Returns (A, B) with state (x, y, xdot, ydot) and thrust input held
    constant over the step; B folds in the 1/mass force scaling.  At dt = 0
    this is exactly (identity, zero).
    """
    if omega <= 0 or mass <= 0:
        raise ValueError("omega and mass must be positive")
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    n = omega
    t = dt
    c = np.cos(n * t)
    s = np.sin(n * t)
    a = np.array(
        [
            [4.0 - 3.0 * c, 0.0, s / n, 2.0 * (1.0 - c) / n],
            [6.0 * (s - n * t), 1.0, -2.0 * (1.0 - c) / n, (4.0 * s - 3.0 * n * t) / n],
            [3.0 * n * s, 0.0, c, 2.0 * s],
            [-6.0 * n * (1.0 - c), 0.0, -2.0 * s, 4.0 * c - 3.0],
        ]
    )
    # Columns are the step integrals of the velocity-input columns of the
    # state transition matrix.
    b = (1.0 / mass) * np.array(
        [
            [(1.0 - c) / n**2, 2.0 * t / n - 2.0 * s / n**2],
            [2.0 * s / n**2 - 2.0 * t / n, 4.0 * (1.0 - c) / n**2 - 1.5 * t**2],
            [s / n, 2.0 * (1.0 - c) / n],
            [-2.0 * (1.0 - c) / n, 4.0 * s / n - 3.0 * t],
        ]
    )
    return a, b


def cwh_step(a: np.ndarray, b: np.ndarray, state, control, noise) -> np.ndarray:
    """One discrete CWH step: A state + B u + w, with u checked against the input box."""
    u = np.asarray(control, dtype=float)
    if u.shape != (2,):
        raise ValueError("CWH control must be a 2-vector")
    if not np.all(np.isfinite(u)) or np.any(np.abs(u) > CWH_INPUT_LIMIT):
        raise ValueError(
            f"control {u} lies outside the admissible box [-{CWH_INPUT_LIMIT}, {CWH_INPUT_LIMIT}]^2"
        )
    return a @ np.asarray(state, dtype=float) + b @ u + np.asarray(noise, dtype=float)


def tora_derivative(state, u: float) -> np.ndarray:
    """TORA vector field (x2, -x1 + 0.1 sin x3, x4, u)."""
    x = np.asarray(state, dtype=float)
    if x.shape != (4,):
        raise ValueError("TORA state must be a 4-vector")
    if not (np.all(np.isfinite(x)) and np.isfinite(u)):
        raise ValueError("non-finite state or control")
    return np.array([x[1], -x[0] + 0.1 * np.sin(x[2]), x[3], float(u)])


def rk4_step(derivative, state, u, h: float) -> np.ndarray:
    """Classical 4th-order Runge-Kutta step with the input held constant."""
    if h <= 0:
        raise ValueError("step size must be positive")
    x = np.asarray(state, dtype=float)
    k1 = derivative(x, u)
    k2 = derivative(x + 0.5 * h * k1, u)
    k3 = derivative(x + 0.5 * h * k2, u)
    k4 = derivative(x + h * k3, u)
    nxt = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(nxt)):
        raise ValueError("integration produced a non-finite state")
    return nxt


def _simulate(config: SystemConfig, x0: np.ndarray, rng) -> np.ndarray:
    system = config.system
    horizon = config.horizon
    x = np.asarray(x0, dtype=float)
    if x.shape != (4,):
        raise ValueError("state must be a 4-vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("initial state has non-finite entries")

    trajectory = np.empty((horizon + 1, 4))
    trajectory[0] = x

    if isinstance(system, CwhSystem):
        a, b = cwh_discrete_matrices(system.omega, system.mass, system.dt)
        inputs = system.resolved_inputs(horizon)
        for k in range(horizon):
            w = config.disturbance.sample(rng, 4)
            x = cwh_step(a, b, x, inputs[k], w)
            trajectory[k + 1] = x
    elif isinstance(system, ToraSystem):
        h = system.control_period / system.integrator_substeps
        for k in range(horizon):
            u = float(control_output(system.controller, x)[0])
            for _ in range(system.integrator_substeps):
                x = rk4_step(tora_derivative, x, u, h)
            x = x + config.disturbance.sample(rng, 4)
            trajectory[k + 1] = x
    else:
        raise ValueError("external sample sources cannot be simulated")
    return trajectory


def simulate_trajectory(config: SystemConfig, x0, seed: int) -> np.ndarray:
    """Simulate one closed-loop trajectory; rows are states at steps 0..N.

    Deterministic in (config, x0, seed): the disturbance stream comes from
    ``numpy.random.default_rng(seed)`` with exactly one draw per control
    step.  The draw enters the CWH update additively inside the step; for
    TORA it is added to the state after the control period is integrated.
    """
    return _simulate(config, np.asarray(x0, dtype=float), np.random.default_rng(seed))


def draw_initial_state(initial, rng) -> np.ndarray:
    return initial.draw(rng)


def sample_terminal_states(config: SystemConfig, count: int, master_seed: int) -> SampleSet:
    """Draw ``count`` i.i.d. terminal states at the configured horizon.

    Sample i runs on its own stream seeded with ``child_seed(master_seed,
    i)``; the initial condition (when random) is drawn from that same stream
    before the trajectory, so results do not depend on evaluation order.
    For an external source the first ``count`` file rows are returned.
    """
    if count < 1:
        raise ValueError("sample count must be at least 1")
    system = config.system
    if isinstance(system, ExternalSource):
        samples = load_sample_csv(system.path)
        if samples.size < count:
            raise ValueError(
                f"sample file {system.path} holds {samples.size} rows, need {count}"
            )
        return SampleSet(samples.points[:count], provenance=f"external:{system.path}")

    points = np.empty((count, 4))
    for i in range(count):
        rng = np.random.default_rng(child_seed(master_seed, i))
        x0 = draw_initial_state(config.initial, rng)
        points[i] = _simulate(config, x0, rng)[-1]
    name = type(system).__name__
    return SampleSet(
        points, provenance=f"{name} N={config.horizon} M={count} seed={master_seed}"
    )


# ---------------------------------------------------------------------------
# Sample CSV files
# ---------------------------------------------------------------------------


def save_sample_csv(samples: SampleSet, path) -> None:
    """Write terminal states as CSV with header x1..xn and round-trip decimals."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(f"x{j + 1}" for j in range(samples.dim)) + "\n")
        for row in samples.points:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def load_sample_csv(path) -> SampleSet:
    """Read a terminal-state CSV; malformed rows are reported by line number."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError(f"sample file {path} is empty")
    header = rows[0]
    dim = len(header)
    if dim < 1 or any(not name.strip() for name in header):
        raise ValueError(f"sample file {path} has a malformed header")
    data = np.empty((len(rows) - 1, dim))
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != dim:
            raise ValueError(
                f"sample file {path} line {line}: expected {dim} values, got {len(row)}"
            )
        try:
            data[line - 2] = [float(tok) for tok in row]
        except ValueError as exc:
            raise ValueError(f"sample file {path} line {line}: {exc}") from exc
    if data.shape[0] < 1:
        raise ValueError(f"sample file {path} has no data rows")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"sample file {path} contains non-finite values")
    return SampleSet(data, provenance=f"csv:{path}")
