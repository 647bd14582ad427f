"""Ground-truth-tracked label noise injection for quantitative evaluation.

Two regimes: completely-at-random flips each selected instance to a uniform
draw over the C-1 other classes; at-random restricts the draw to the other
members of the original label's class group (for example CIFAR-100
superclasses, bundled as a default groups file)."""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .data import one_hot_encode
from .errors import ConfigurationError, DataError

REGIME_COMPLETELY_AT_RANDOM = "completely_at_random"
REGIME_AT_RANDOM = "at_random"


@dataclass
class NoiseRecord:
    """Which labels were flipped, from what to what, and how."""

    flipped_indices: np.ndarray
    original_labels: np.ndarray
    new_labels: np.ndarray
    mu: float
    regime: str
    seed: int
    n: int

    def flipped_set(self) -> set:
        return set(int(i) for i in self.flipped_indices)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mu": self.mu,
            "regime": self.regime,
            "seed": self.seed,
            "flipped_indices": [int(i) for i in self.flipped_indices],
            "original_labels": [int(v) for v in self.original_labels],
            "new_labels": [int(v) for v in self.new_labels],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseRecord":
        return cls(
            flipped_indices=np.asarray(d["flipped_indices"], dtype=np.int64),
            original_labels=np.asarray(d["original_labels"], dtype=np.int64),
            new_labels=np.asarray(d["new_labels"], dtype=np.int64),
            mu=d["mu"],
            regime=d["regime"],
            seed=d["seed"],
            n=d["n"],
        )


def write_noise_record(record: NoiseRecord, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(record.to_dict(), fh, indent=2)
        fh.write("\n")


def read_noise_record(path) -> NoiseRecord:
    with open(path, encoding="utf-8") as fh:
        return NoiseRecord.from_dict(json.load(fh))


@dataclass
class ClassGroups:
    """A partition of the class indices into disjoint groups."""

    groups: list

    def __post_init__(self):
        seen = {}
        for gi, group in enumerate(self.groups):
            for c in group:
                if c in seen:
                    raise DataError("GROUPS_OVERLAP", f"class {c} appears in more than one group")
                seen[c] = gi
        self._lookup = seen

    def covers(self, num_classes: int) -> bool:
        return set(self._lookup) == set(range(num_classes))

    def group_of(self, class_index: int):
        gi = self._lookup.get(int(class_index))
        return None if gi is None else self.groups[gi]

    @classmethod
    def from_mapping(cls, mapping: dict, class_names=None, num_classes=None) -> "ClassGroups":
        """Build groups from {group_name: [class names or indices]}.

        Class names are resolved against class_names; plain integers are
        taken as class indices. The groups must cover every class exactly
        once.
        """
        name_to_idx = {}
        if class_names is not None:
            name_to_idx = {str(name): i for i, name in enumerate(class_names)}
        groups = []
        for gname, members in mapping.items():
            group = []
            for m in members:
                if isinstance(m, int):
                    group.append(m)
                elif str(m) in name_to_idx:
                    group.append(name_to_idx[str(m)])
                else:
                    try:
                        group.append(int(m))
                    except ValueError:
                        raise DataError(
                            "UNKNOWN_GROUP_CLASS", f"group {gname!r} names unknown class {m!r}"
                        ) from None
            groups.append(sorted(group))
        built = cls(groups=groups)
        if num_classes is not None and not built.covers(num_classes):
            raise DataError("GROUPS_INCOMPLETE", "groups must cover every class exactly once")
        return built

    @classmethod
    def from_json(cls, path, class_names=None, num_classes=None) -> "ClassGroups":
        with open(path, encoding="utf-8") as fh:
            return cls.from_mapping(json.load(fh), class_names=class_names, num_classes=num_classes)


def cifar100_superclass_groups(class_names=None, num_classes=None) -> ClassGroups:
    """The bundled default grouping: CIFAR-100's 20 superclasses of 5.

    Without explicit class_names the fine-label names resolve to their
    canonical alphabetical indices (apple=0, aquarium_fish=1, ...).
    """
    with resources.files("labelsift.resources").joinpath("cifar100_superclasses.json").open() as fh:
        mapping = json.load(fh)
    if class_names is None:
        class_names = sorted(name for members in mapping.values() for name in members)
        num_classes = len(class_names) if num_classes is None else num_classes
    return ClassGroups.from_mapping(mapping, class_names=class_names, num_classes=num_classes)


def _check_flip_args(labels, mu):
    labels = np.asarray(labels)
    if not 0.0 < mu < 1.0:
        raise ConfigurationError("BAD_MU", f"mu must be in (0, 1), got {mu}")
    if labels.ndim != 2 or labels.shape[1] < 2:
        raise ConfigurationError("BAD_LABELS", "labels must be a one-hot matrix with at least 2 classes")
    n_flips = int(np.floor(mu * labels.shape[0]))
    if n_flips == 0:
        raise ConfigurationError(
            "NO_FLIPS", f"floor(mu*N) = 0 for mu={mu}, N={labels.shape[0]}; increase mu or the dataset size"
        )
    return labels, n_flips


def _apply_flips(labels, chosen, new_idx, mu, regime, seed):
    orig_idx = np.argmax(labels[chosen], axis=1)
    out = labels.copy()
    out[chosen] = one_hot_encode(new_idx, labels.shape[1])
    record = NoiseRecord(
        flipped_indices=chosen.astype(np.int64),
        original_labels=orig_idx.astype(np.int64),
        new_labels=np.asarray(new_idx, dtype=np.int64),
        mu=float(mu),
        regime=regime,
        seed=int(seed),
        n=int(labels.shape[0]),
    )
    return out, record


def flip_completely_at_random(labels: np.ndarray, mu: float, seed: int):
    """Flip floor(mu*N) distinct labels, each to a uniform draw over the
    other C-1 classes. Returns (new label matrix, NoiseRecord)."""
    labels, n_flips = _check_flip_args(labels, mu)
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(labels.shape[0], size=n_flips, replace=False))
    orig = np.argmax(labels[chosen], axis=1)
    draw = rng.integers(0, labels.shape[1] - 1, size=n_flips)
    new_idx = draw + (draw >= orig)  # skip the original class
    return _apply_flips(labels, chosen, new_idx, mu, REGIME_COMPLETELY_AT_RANDOM, seed)


def flip_at_random(labels: np.ndarray, mu: float, groups: ClassGroups, seed: int):
    """Flip floor(mu*N) labels, drawing each new label uniformly from the
    other members of the original label's group. Instances whose class sits
    in a singleton group are never selected."""
    labels, n_flips = _check_flip_args(labels, mu)
    y_idx = np.argmax(labels, axis=1)
    eligible = np.flatnonzero(
        [(g := groups.group_of(c)) is not None and len(g) >= 2 for c in y_idx]
    )
    if eligible.size == 0:
        raise ConfigurationError("NO_ELIGIBLE", "no eligible instance: every class sits in a singleton group")
    if eligible.size < n_flips:
        raise ConfigurationError(
            "NO_ELIGIBLE", f"only {eligible.size} eligible instances for {n_flips} requested flips"
        )
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(eligible, size=n_flips, replace=False))
    new_idx = np.empty(n_flips, dtype=np.int64)
    for i, instance in enumerate(chosen):
        members = [c for c in groups.group_of(y_idx[instance]) if c != y_idx[instance]]
        new_idx[i] = members[rng.integers(len(members))]
    return _apply_flips(labels, chosen, new_idx, mu, REGIME_AT_RANDOM, seed)
