"""Genomes of DCT coefficients and their mapping onto recurrent networks.

A genome is split into chromosomes, one per coefficient array. Each array
is filled along the importance order, inverse-transformed, and its cells
are copied into weight slots. A slot is ``(matrix, row, col)`` where
matrix 0 is the input matrix (n x i), 1 the recurrent matrix (n x n) and
2 the bias (stored as an n x 1 column).

Observation layout (i = 8p + 2): for each moving boundary of compartment
``c`` the eight values ``x, y, vx, vy`` of its dorsal then ventral corner
at columns ``8c .. 8c+7``; base angle and angular velocity come last.
Raw-action layout (3p + 2): muscle ``m`` (dorsal, transverse, ventral) of
compartment ``c`` at ``3c + m``, then the two base rotations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dct import dct2_nd, dct3_nd
from .ordering import fill_array, read_array

SCHEMES = ("psi1", "psi2", "psi3")
ARCHS = ("theta1", "theta2")
N_META = 8
STATE_PER_COMPARTMENT = 8
MUSCLES = 3

_INPUT, _RECURRENT, _BIAS = 0, 1, 2


@dataclass(frozen=True)
class NetworkArchitecture:
    n: int
    i: int
    action_mode: str  # "meta" | "raw"
    name: str = "custom"

    @property
    def weight_count(self) -> int:
        return self.n * self.i + self.n * self.n + self.n


def architecture(name: str, p: int) -> NetworkArchitecture:
    """Theta1: 8 neurons on meta-actions. Theta2: one neuron per raw action."""
    if p < 1:
        raise ValueError(f"need at least one compartment, got p={p}")
    inputs = STATE_PER_COMPARTMENT * p + 2
    if name == "theta1":
        return NetworkArchitecture(N_META, inputs, "meta", name)
    if name == "theta2":
        return NetworkArchitecture(MUSCLES * p + 2, inputs, "raw", name)
    raise ValueError(f"unknown architecture {name!r}; expected one of {ARCHS}")


@dataclass
class NetworkWeights:
    input_matrix: np.ndarray
    recurrent_matrix: np.ndarray
    bias: np.ndarray

    @classmethod
    def zeros(cls, arch: NetworkArchitecture) -> "NetworkWeights":
        return cls(np.zeros((arch.n, arch.i)), np.zeros((arch.n, arch.n)), np.zeros(arch.n))

    @classmethod
    def from_flat(cls, vector, arch: NetworkArchitecture) -> "NetworkWeights":
        """Direct encoding: input, recurrent, bias, each row-major."""
        v = np.asarray(vector, dtype=float)
        if v.size != arch.weight_count:
            raise ValueError(f"expected {arch.weight_count} weights, got {v.size}")
        a = arch.n * arch.i
        b = a + arch.n * arch.n
        return cls(
            v[:a].reshape(arch.n, arch.i).copy(),
            v[a:b].reshape(arch.n, arch.n).copy(),
            v[b:].copy(),
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([self.input_matrix.ravel(), self.recurrent_matrix.ravel(), self.bias.ravel()])

    @property
    def n(self) -> int:
        return self.bias.size

    @property
    def i(self) -> int:
        return self.input_matrix.shape[1]

    def _matrices(self):
        return (self.input_matrix, self.recurrent_matrix, self.bias.reshape(-1, 1))


@dataclass(frozen=True)
class Placement:
    """Cells of one coefficient array that land in weight slots."""

    cells: np.ndarray  # flat row-major cell index
    matrix: np.ndarray
    row: np.ndarray
    col: np.ndarray


@dataclass(frozen=True)
class MappingScheme:
    name: str
    arch: NetworkArchitecture
    p: int
    dims: tuple[tuple[int, ...], ...]
    placements: tuple[Placement, ...]

    @property
    def k(self) -> int:
        return len(self.dims)

    @property
    def capacities(self) -> tuple[int, ...]:
        return tuple(math.prod(d) for d in self.dims)

    @property
    def capacity(self) -> int:
        return sum(self.capacities)

    def unused_cells(self, m: int) -> np.ndarray:
        mask = np.ones(self.capacities[m], dtype=bool)
        mask[self.placements[m].cells] = False
        return np.flatnonzero(mask)


def _placement(dims, cells, matrix, row, col) -> Placement:
    flat = np.ravel_multi_index(tuple(np.asarray(c) for c in cells), dims)
    return Placement(
        np.asarray(flat, dtype=int),
        np.broadcast_to(np.asarray(matrix, dtype=int), flat.shape).copy(),
        np.asarray(row, dtype=int),
        np.asarray(col, dtype=int),
    )


def _grid(*extents):
    return [a.ravel() for a in np.meshgrid(*(np.arange(e) for e in extents), indexing="ij")]


def single_matrix_scheme(arch: NetworkArchitecture, p: int = 0) -> MappingScheme:
    """One n x (i + n + 1) array: input, recurrent and bias column blocks."""
    dims, placements = _psi1(arch)
    return MappingScheme("psi1", arch, p, tuple(dims), tuple(placements))


def _psi1(arch: NetworkArchitecture):
    n, i = arch.n, arch.i
    dims = (n, i + n + 1)
    r, c = _grid(n, i + n + 1)
    matrix = np.where(c < i, _INPUT, np.where(c < i + n, _RECURRENT, _BIAS))
    col = np.where(c < i, c, np.where(c < i + n, c - i, 0))
    return (dims,), (_placement(dims, (r, c), matrix, r, col),)


def _input_cell(col, p):
    """Input column -> (compartment, state variable); base inputs use slot p."""
    col = np.asarray(col)
    base = col >= STATE_PER_COMPARTMENT * p
    comp = np.where(base, p, col // STATE_PER_COMPARTMENT)
    var = np.where(base, col - STATE_PER_COMPARTMENT * p, col % STATE_PER_COMPARTMENT)
    return comp, var


def _psi2(arch: NetworkArchitecture, p: int):
    n, i = arch.n, arch.i
    in_dims = (n, p + 1, STATE_PER_COMPARTMENT)
    r, c = _grid(n, i)
    comp, var = _input_cell(c, p)
    inputs = _placement(in_dims, (r, comp, var), _INPUT, r, c)
    rr, rc = _grid(n, n)
    recurrent = _placement((n, n), (rr, rc), _RECURRENT, rr, rc)
    b = np.arange(n)
    bias = _placement((n,), (b,), _BIAS, b, np.zeros(n, dtype=int))
    return (in_dims, (n, n), (n,)), (inputs, recurrent, bias)


def _neuron_cell(neuron, p):
    """Neuron -> (muscle, compartment); rotation neurons sit in column p."""
    neuron = np.asarray(neuron)
    rot = neuron >= MUSCLES * p
    muscle = np.where(rot, neuron - MUSCLES * p, neuron % MUSCLES)
    comp = np.where(rot, p, neuron // MUSCLES)
    return muscle, comp


def _psi3(arch: NetworkArchitecture, p: int):
    n, i = arch.n, arch.i
    in_dims = (STATE_PER_COMPARTMENT, p + 1, MUSCLES, p + 1)
    r, c = _grid(n, i)
    src_comp, var = _input_cell(c, p)
    muscle, tgt_comp = _neuron_cell(r, p)
    inputs = _placement(in_dims, (var, src_comp, muscle, tgt_comp), _INPUT, r, c)
    rec_dims = (MUSCLES, p + 1, MUSCLES, p + 1)
    to, frm = _grid(n, n)
    m_to, c_to = _neuron_cell(to, p)
    m_from, c_from = _neuron_cell(frm, p)
    recurrent = _placement(rec_dims, (m_to, c_to, m_from, c_from), _RECURRENT, to, frm)
    b = np.arange(n)
    bm, bc = _neuron_cell(b, p)
    bias = _placement((MUSCLES, p + 1), (bm, bc), _BIAS, b, np.zeros(n, dtype=int))
    return (in_dims, rec_dims, (MUSCLES, p + 1)), (inputs, recurrent, bias)


def build_scheme(name: str, arch_name: str, p: int) -> MappingScheme:
    arch = architecture(arch_name, p)
    if name == "psi1":
        dims, placements = _psi1(arch)
    elif name == "psi2":
        if arch.action_mode != "meta":
            raise ValueError("psi2 requires the meta-action architecture theta1")
        dims, placements = _psi2(arch, p)
    elif name == "psi3":
        if arch.action_mode != "raw":
            raise ValueError("psi3 requires the raw-action architecture theta2")
        dims, placements = _psi3(arch, p)
    else:
        raise ValueError(f"unknown mapping scheme {name!r}; expected one of {SCHEMES}")
    return MappingScheme(name, arch, p, tuple(dims), tuple(placements))


@dataclass
class Genome:
    coefficients: np.ndarray
    chromosome_lengths: tuple[int, ...]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float).ravel()
        self.chromosome_lengths = tuple(int(n) for n in self.chromosome_lengths)
        if any(n < 0 for n in self.chromosome_lengths):
            raise ValueError(f"negative chromosome length in {self.chromosome_lengths}")
        if sum(self.chromosome_lengths) != self.coefficients.size:
            raise ValueError(
                f"chromosome lengths {self.chromosome_lengths} do not sum to "
                f"{self.coefficients.size} coefficients"
            )

    @property
    def size(self) -> int:
        return self.coefficients.size


def even_lengths(total: int, capacities) -> tuple[int, ...]:
    """Spread ``total`` coefficients round-robin, skipping full chromosomes."""
    return grow_lengths([0] * len(capacities), capacities, total)


def grow_lengths(lengths, capacities, count: int) -> tuple[int, ...]:
    """Append ``count`` coefficients one at a time, cycling over chromosomes.

    The cycle starts at the first shortest chromosome that still has room;
    chromosomes at capacity are skipped.
    """
    lengths = list(lengths)
    caps = list(capacities)
    if len(lengths) != len(caps):
        raise ValueError("lengths and capacities differ in size")
    if count < 0:
        raise ValueError("count must be non-negative")
    if count > sum(caps) - sum(lengths):
        raise ValueError("genome at maximum capacity")
    open_ = [m for m in range(len(caps)) if lengths[m] < caps[m]]
    if not count:
        return tuple(lengths)
    m = min(open_, key=lambda j: (lengths[j], j))
    for _ in range(count):
        while lengths[m] >= caps[m]:
            m = (m + 1) % len(caps)
        lengths[m] += 1
        m = (m + 1) % len(caps)
    return tuple(lengths)


def new_genome(scheme: MappingScheme, coefficients) -> Genome:
    coefficients = np.asarray(coefficients, dtype=float).ravel()
    return Genome(coefficients, even_lengths(coefficients.size, scheme.capacities))


def split_genome(genome: Genome, scheme: MappingScheme) -> list[np.ndarray]:
    lengths = genome.chromosome_lengths
    if len(lengths) != scheme.k:
        raise ValueError(f"genome has {len(lengths)} chromosomes, scheme {scheme.name} needs {scheme.k}")
    bounds = np.cumsum((0,) + lengths)
    return [genome.coefficients[a:b].copy() for a, b in zip(bounds[:-1], bounds[1:])]


def _scatter(arrays, scheme: MappingScheme) -> NetworkWeights:
    weights = NetworkWeights.zeros(scheme.arch)
    targets = weights._matrices()
    for values, pl in zip(arrays, scheme.placements):
        flat = values.ravel()
        for mid, target in enumerate(targets):
            sel = pl.matrix == mid
            target[pl.row[sel], pl.col[sel]] = flat[pl.cells[sel]]
    return weights


def decode_arrays(arrays, scheme: MappingScheme) -> NetworkWeights:
    """Inverse-transform filled coefficient arrays and place their cells."""
    return _scatter([dct3_nd(a) for a in arrays], scheme)


def coefficient_arrays(genome: Genome, scheme: MappingScheme) -> list[np.ndarray]:
    return [fill_array(d, g) for d, g in zip(scheme.dims, split_genome(genome, scheme))]


def decode(genome: Genome, scheme: MappingScheme) -> NetworkWeights:
    return decode_arrays(coefficient_arrays(genome, scheme), scheme)


def weight_arrays(weights: NetworkWeights, scheme: MappingScheme) -> list[np.ndarray]:
    """Gather weights back into array cells; unused cells are zero."""
    arch = scheme.arch
    if weights.n != arch.n or weights.i != arch.i:
        raise ValueError(
            f"weights are {weights.n}x{weights.i}, scheme {scheme.name} expects {arch.n}x{arch.i}"
        )
    sources = weights._matrices()
    out = []
    for dims, pl in zip(scheme.dims, scheme.placements):
        flat = np.zeros(math.prod(dims))
        for mid, source in enumerate(sources):
            sel = pl.matrix == mid
            flat[pl.cells[sel]] = source[pl.row[sel], pl.col[sel]]
        out.append(flat.reshape(dims))
    return out


def encode(weights: NetworkWeights, scheme: MappingScheme, lengths=None) -> Genome:
    """Forward-transform weights into a genome.

    Full rank (every array cell) by default; ``lengths`` may be an int total
    (spread like :func:`even_lengths`) or explicit per-chromosome lengths,
    in which case each chromosome keeps its lowest-frequency prefix.
    """
    coeffs = [read_array(dct2_nd(a)) for a in weight_arrays(weights, scheme)]
    if lengths is None:
        lengths = scheme.capacities
    elif np.isscalar(lengths):
        lengths = even_lengths(int(lengths), scheme.capacities)
    lengths = tuple(int(n) for n in lengths)
    if len(lengths) != scheme.k or any(n > cap for n, cap in zip(lengths, scheme.capacities)):
        raise ValueError(f"lengths {lengths} do not fit scheme capacities {scheme.capacities}")
    return Genome(np.concatenate([c[:n] for c, n in zip(coeffs, lengths)]), lengths)


def rebuild_scheme(scheme: MappingScheme, p: int) -> MappingScheme:
    return build_scheme(scheme.name, scheme.arch.name, p)


def _pad_or_crop(array: np.ndarray, dims) -> np.ndarray:
    out = np.zeros(dims)
    overlap = tuple(slice(0, min(a, b)) for a, b in zip(array.shape, dims))
    out[overlap] = array[overlap]
    return out


def resize_arrays(genome: Genome, scheme: MappingScheme, new_p: int):
    """Coefficient arrays of ``genome`` re-sized for ``new_p`` compartments.

    Each coefficient keeps its frequency (array coordinates); enlarged
    arrays are zero-padded and frequencies outside a shrunk array are dropped.
    """
    if new_p < 1:
        raise ValueError(f"need at least one compartment, got p={new_p}")
    target = rebuild_scheme(scheme, new_p)
    arrays = [_pad_or_crop(a, d) for a, d in zip(coefficient_arrays(genome, scheme), target.dims)]
    return target, arrays


def resize(genome: Genome, scheme: MappingScheme, new_p: int) -> NetworkWeights:
    target, arrays = resize_arrays(genome, scheme, new_p)
    return decode_arrays(arrays, target)


def resize_genome(genome: Genome, scheme: MappingScheme, new_p: int) -> tuple[Genome, MappingScheme]:
    """Full-rank genome at ``new_p`` that decodes to :func:`resize`'s network."""
    target, arrays = resize_arrays(genome, scheme, new_p)
    return Genome(np.concatenate([read_array(a) for a in arrays]), target.capacities), target


def resize_weights(weights: NetworkWeights, scheme: MappingScheme, new_p: int) -> NetworkWeights:
    """Re-generate a directly encoded network for ``new_p`` compartments.

    The weights are forward-transformed at full rank and then resized; at
    the original size the network is returned unchanged.
    """
    if new_p == scheme.p:
        return NetworkWeights(weights.input_matrix.copy(), weights.recurrent_matrix.copy(), weights.bias.copy())
    return resize(encode(weights, scheme), scheme, new_p)


def add_coefficients(genome: Genome, scheme: MappingScheme, count: int) -> Genome:
    """Append ``count`` zero coefficients following the chromosome cycle."""
    if count < 1:
        raise ValueError("count must be >= 1")
    lengths = grow_lengths(genome.chromosome_lengths, scheme.capacities, count)
    return Genome(grow_vector(genome.coefficients, genome.chromosome_lengths, lengths, 0.0), lengths)


def grow_vector(values, old_lengths, new_lengths, fill) -> np.ndarray:
    """Extend a per-coefficient vector (mean, std, ...) chromosome by chromosome."""
    values = np.asarray(values, dtype=float)
    bounds = np.cumsum((0,) + tuple(old_lengths))
    parts = []
    for m, (a, b) in enumerate(zip(bounds[:-1], bounds[1:])):
        extra = new_lengths[m] - old_lengths[m]
        if extra < 0:
            raise ValueError("chromosomes can only grow")
        parts.append(values[a:b])
        parts.append(np.full(extra, fill, dtype=float))
    return np.concatenate(parts)


def compression_ratio(scheme_or_arch, coefficients: int) -> float:
    arch = getattr(scheme_or_arch, "arch", scheme_or_arch)
    return arch.weight_count / coefficients


# genome text files --------------------------------------------------------


def write_genome(path, genome: Genome, scheme_name: str, p: int, arch_name: str) -> None:
    header = (
        f"k {len(genome.chromosome_lengths)} lengths "
        + " ".join(str(n) for n in genome.chromosome_lengths)
        + f" scheme {scheme_name} p {p} arch {arch_name}"
    )
    lines = [header] + [repr(float(c)) for c in genome.coefficients]
    Path(path).write_text("\n".join(lines) + "\n")


def read_genome(path) -> tuple[Genome, dict]:
    """Returns the genome and its header fields (scheme, p, arch)."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty genome file")
    tokens = lines[0].split()
    try:
        if tokens[0] != "k" or tokens[2] != "lengths":
            raise ValueError
        k = int(tokens[1])
        lengths = [int(t) for t in tokens[3 : 3 + k]]
        rest = dict(zip(tokens[3 + k :: 2], tokens[4 + k :: 2]))
        header = {"scheme": rest["scheme"], "p": int(rest["p"]), "arch": rest["arch"]}
    except (ValueError, IndexError, KeyError):
        raise ValueError(f"{path}: malformed genome header {lines[0]!r}") from None
    coeffs = np.array([float(ln) for ln in lines[1:]])
    return Genome(coeffs, lengths), header


def write_weights(path, weights: NetworkWeights, arch_name: str, p: int) -> None:
    """Direct network file: header ``weights arch <name> p <p> n <n> i <i>``,
    then input, recurrent and bias weights (row-major), one per line."""
    header = f"weights arch {arch_name} p {p} n {weights.n} i {weights.i}"
    Path(path).write_text("\n".join([header] + [repr(float(v)) for v in weights.flat()]) + "\n")


def read_weights(path) -> tuple[NetworkWeights, dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip()]
    tokens = lines[0].split() if lines else []
    if not tokens or tokens[0] != "weights":
        raise ValueError(f"{path}: not a weights file")
    fields_ = dict(zip(tokens[1::2], tokens[2::2]))
    arch = architecture(fields_["arch"], int(fields_["p"]))
    values = np.array([float(ln) for ln in lines[1:]])
    return NetworkWeights.from_flat(values, arch), {"arch": fields_["arch"], "p": int(fields_["p"])}
