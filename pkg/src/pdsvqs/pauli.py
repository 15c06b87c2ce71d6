"""Exact Pauli-string algebra on qubit registers.

Strings are encoded as a pair of bitmasks ``(x_mask, z_mask)`` where bit ``q``
describes the letter acting on qubit ``q`` (qubit 0 is the leftmost letter of a
label).  The letter is ``I`` for ``(0, 0)``, ``X`` for ``(1, 0)``, ``Z`` for
``(0, 1)`` and ``Y`` for ``(1, 1)``.  Products of strings are again strings up
to a unit phase in ``{1, i, -1, -i}``, which is tracked exactly, so sums of
strings close under multiplication without any floating-point phase drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "PauliTerm",
    "PauliSum",
    "multiply",
    "power",
    "qwc_groups",
    "qubitwise_commutes",
]

_LETTERS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_LABELS = {v: k for k, v in _LETTERS.items()}

# i^p for p = 0..3, used when composing phase exponents.
_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _product_phase_exponent(x1: int, z1: int, x2: int, z2: int) -> int:
    """Exponent p of the unit phase i^p picked up by the string product.

    With the convention that a letter is ``i^(x z) X^x Z^z`` on every qubit,
    composing two strings gives ``i^(x1 z1) i^(x2 z2) (-1)^(z1 x2)`` relative
    to the normalized result ``i^(x3 z3) X^x3 Z^z3``.
    """
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    p = (x1 & z1).bit_count() + (x2 & z2).bit_count() - (x3 & z3).bit_count()
    p += 2 * (x2 & z1).bit_count()
    return p % 4


@dataclass(frozen=True)
class PauliTerm:
    """A single weighted Pauli string.

    Attributes:
        n_qubits: Register width the string acts on.
        x_mask: Bit q set when the letter on qubit q is X or Y.
        z_mask: Bit q set when the letter on qubit q is Z or Y.
        coefficient: Complex weight carried by the string.
    """

    n_qubits: int
    x_mask: int
    z_mask: int
    coefficient: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("PauliTerm needs at least one qubit")
        full = (1 << self.n_qubits) - 1
        if self.x_mask & ~full or self.z_mask & ~full:
            raise ValueError("mask has bits outside the register")

    @classmethod
    def from_label(cls, label: str, coefficient: complex = 1.0) -> "PauliTerm":
        """Build a term from a letter string such as ``"IXZ"``.

        The leftmost letter acts on qubit 0.
        """
        if not label:
            raise ValueError("empty Pauli label")
        x_mask = 0
        z_mask = 0
        for q, ch in enumerate(label):
            try:
                x, z = _LETTERS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r} in {label!r}") from None
            x_mask |= x << q
            z_mask |= z << q
        return cls(len(label), x_mask, z_mask, complex(coefficient))

    @property
    def label(self) -> str:
        """Letter-string form, leftmost letter on qubit 0."""
        return "".join(
            _LABELS[((self.x_mask >> q) & 1, (self.z_mask >> q) & 1)]
            for q in range(self.n_qubits)
        )

    @property
    def key(self) -> tuple[int, int]:
        return (self.x_mask, self.z_mask)

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def weight(self) -> int:
        """Number of non-identity letters."""
        return (self.x_mask | self.z_mask).bit_count()

    def __mul__(self, other: "PauliTerm") -> "PauliTerm":
        if not isinstance(other, PauliTerm):
            return NotImplemented
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch in Pauli product")
        p = _product_phase_exponent(self.x_mask, self.z_mask, other.x_mask, other.z_mask)
        return PauliTerm(
            self.n_qubits,
            self.x_mask ^ other.x_mask,
            self.z_mask ^ other.z_mask,
            self.coefficient * other.coefficient * _PHASES[p],
        )


@dataclass
class PauliSum:
    """A real- or complex-weighted sum of Pauli strings on one register.

    Duplicate strings are merged on construction; exact zeros produced by the
    merge are kept until :meth:`simplify` prunes them against a magnitude
    threshold.  Term order is canonical (lexicographic on labels), so every
    traversal of the same sum is deterministic.
    """

    n_qubits: int
    _coeffs: dict[tuple[int, int], complex] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms, n_qubits: int | None = None) -> "PauliSum":
        """Collect an iterable of ``PauliTerm`` (or ``(coefficient, label)``) pairs."""
        coeffs: dict[tuple[int, int], complex] = {}
        width = n_qubits
        for item in terms:
            if isinstance(item, PauliTerm):
                term = item
            else:
                c, label = item
                term = PauliTerm.from_label(label, c)
            if width is None:
                width = term.n_qubits
            elif term.n_qubits != width:
                raise ValueError("qubit count mismatch between terms")
            key = term.key
            coeffs[key] = coeffs.get(key, 0.0 + 0.0j) + term.coefficient
        if width is None:
            raise ValueError("cannot infer qubit count of an empty sum")
        return cls(width, coeffs)

    @classmethod
    def identity(cls, n_qubits: int, coefficient: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): complex(coefficient)})

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits, {})

    def terms(self) -> list[PauliTerm]:
        """Terms in canonical (label-lexicographic) order."""
        out = [
            PauliTerm(self.n_qubits, x, z, c) for (x, z), c in self._coeffs.items()
        ]
        out.sort(key=lambda t: t.label)
        return out

    def coefficient(self, label: str) -> complex:
        term = PauliTerm.from_label(label)
        if term.n_qubits != self.n_qubits:
            raise ValueError("label width does not match the sum")
        return self._coeffs.get(term.key, 0.0 + 0.0j)

    def __len__(self) -> int:
        return len(self._coeffs)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch in Pauli sum addition")
        coeffs = dict(self._coeffs)
        for key, c in other._coeffs.items():
            coeffs[key] = coeffs.get(key, 0.0 + 0.0j) + c
        return PauliSum(self.n_qubits, coeffs)

    def scaled(self, factor: complex) -> "PauliSum":
        return PauliSum(
            self.n_qubits, {k: factor * c for k, c in self._coeffs.items()}
        )

    def __mul__(self, other: "PauliSum") -> "PauliSum":
        if not isinstance(other, PauliSum):
            return NotImplemented
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit count mismatch in Pauli sum product")
        coeffs: dict[tuple[int, int], complex] = {}
        for (x1, z1), c1 in self._coeffs.items():
            for (x2, z2), c2 in other._coeffs.items():
                p = _product_phase_exponent(x1, z1, x2, z2)
                key = (x1 ^ x2, z1 ^ z2)
                coeffs[key] = coeffs.get(key, 0.0 + 0.0j) + c1 * c2 * _PHASES[p]
        return PauliSum(self.n_qubits, coeffs)

    def simplify(self, drop_tol: float = 1e-12) -> "PauliSum":
        """Drop terms whose coefficient magnitude is at most ``drop_tol``."""
        if drop_tol < 0:
            raise ValueError("drop_tol must be non-negative")
        return PauliSum(
            self.n_qubits,
            {k: c for k, c in self._coeffs.items() if abs(c) > drop_tol},
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._coeffs.values())

    def to_text(self) -> str:
        """Serialize to the plain-text format, one ``coefficient label`` per line.

        Coefficients are written with 17 significant digits, which round-trips
        IEEE doubles exactly.  Terms appear in canonical order.
        """
        lines = []
        for term in self.terms():
            c = term.coefficient
            if abs(c.imag) > 1e-12 * max(1.0, abs(c)):
                raise ValueError("text format stores real coefficients only")
            lines.append(f"{c.real:.17g} {term.label}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def from_text(cls, text: str) -> "PauliSum":
        """Parse the plain-text format.

        Each non-blank, non-comment line is ``<real coefficient> <letters>``
        with letters drawn from ``IXYZ``.  Duplicate strings are summed.

        Raises:
            ValueError: On malformed lines or inconsistent string lengths,
                with the offending line number in the message.
        """
        coeffs: dict[tuple[int, int], complex] = {}
        width: int | None = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise ValueError(
                    f"line {lineno}: expected '<coefficient> <letters>', got {raw!r}"
                )
            token, label = parts
            try:
                value = float(token.replace("−", "-"))
            except ValueError:
                raise ValueError(
                    f"line {lineno}: invalid coefficient {token!r}"
                ) from None
            try:
                term = PauliTerm.from_label(label, value)
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
            if width is None:
                width = term.n_qubits
            elif term.n_qubits != width:
                raise ValueError(
                    f"line {lineno}: string length {term.n_qubits} does not match "
                    f"earlier length {width}"
                )
            key = term.key
            coeffs[key] = coeffs.get(key, 0.0 + 0.0j) + complex(value)
        if width is None:
            raise ValueError("no Pauli terms found in text")
        return cls(width, coeffs)


def multiply(a, b):
    """Exact product of terms or sums; sums of strings close under this."""
    return a * b


def power(
    h: PauliSum, n: int, drop_tol: float = 1e-12, max_power: int = 12
) -> PauliSum:
    """Compute the Pauli expansion of ``h**n`` by iterated multiplication.

    Every intermediate product is simplified with ``drop_tol`` so the term
    count stays bounded by cancellation instead of growing combinatorially.

    Args:
        h: Hermitian operator to raise to a power.
        n: Non-negative exponent.
        drop_tol: Pruning threshold applied after each multiplication.
        max_power: Guard against runaway expansions; exceeding it raises.

    Returns:
        ``h**n`` as a simplified ``PauliSum``; the zeroth power is the identity.
    """
    if n < 0:
        raise ValueError("power requires a non-negative exponent")
    if n > max_power:
        raise ValueError(f"power {n} exceeds the configured cap {max_power}")
    if not h.is_hermitian():
        raise ValueError("power expects a Hermitian operator")
    acc = PauliSum.identity(h.n_qubits)
    base = h.simplify(drop_tol)
    for _ in range(n):
        acc = (acc * base).simplify(drop_tol)
    return acc


def qubitwise_commutes(a: PauliTerm, b: PauliTerm) -> bool:
    """True when on every qubit the letters are equal or one is identity."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("qubit count mismatch")
    both = (a.x_mask | a.z_mask) & (b.x_mask | b.z_mask)
    differ = (a.x_mask ^ b.x_mask) | (a.z_mask ^ b.z_mask)
    return (both & differ) == 0


def qwc_groups(s: PauliSum) -> list[list[PauliTerm]]:
    """Partition the terms of ``s`` into qubit-wise commuting groups.

    Terms are visited in order of descending coefficient magnitude (label
    order breaks ties) and placed in the first group whose letter assignment
    they fit, so the result is deterministic.  Each group can be measured in a
    single shared product basis.
    """
    ordered = sorted(s.terms(), key=lambda t: (-abs(t.coefficient), t.label))
    groups: list[list[PauliTerm]] = []
    # Per group, the letters already pinned on each qubit: (x_mask, z_mask,
    # support_mask).  A candidate fits when it agrees wherever supports overlap.
    pinned: list[tuple[int, int, int]] = []
    for term in ordered:
        t_support = term.x_mask | term.z_mask
        placed = False
        for gi, (gx, gz, gsup) in enumerate(pinned):
            overlap = gsup & t_support
            if ((gx ^ term.x_mask) | (gz ^ term.z_mask)) & overlap:
                continue
            groups[gi].append(term)
            pinned[gi] = (gx | term.x_mask, gz | term.z_mask, gsup | t_support)
            placed = True
            break
        if not placed:
            groups.append([term])
            pinned.append((term.x_mask, term.z_mask, t_support))
    return groups
