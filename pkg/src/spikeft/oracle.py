"""
Exact double-precision reference transforms.

These are deliberately simple. `dft` is the naive O(N^2) sum and
`fft_radix4` is an independent recursive decimation-in-time radix-4 FFT
used to cross-check it.
"""
import numpy as np

from .errors import SizeError

MAX_SIZE = 4096


def _as_complex(x):
    samples = getattr(x, "samples", x)
    return np.asarray(samples, dtype=np.complex128)


def dft_matrix(n):
    """Complex DFT matrix with W[k, j] = cos(2 pi k j / n) - i sin(2 pi k j / n)."""
    k = np.arange(n)
    # reduce k*j modulo n before scaling so large products keep full precision
    angle = 2.0 * np.pi * (np.outer(k, k) % n) / n
    return np.cos(angle) - 1j * np.sin(angle)


def real_dft_matrix(n):
    """Real 2n x 2n block form [[Re W, -Im W], [Im W, Re W]]."""
    w = dft_matrix(n)
    return np.block([[w.real, -w.imag], [w.imag, w.real]])


def dft(x):
    """Direct summation of the discrete Fourier transform."""
    x = _as_complex(x)
    n = x.shape[-1]
    if n < 1:
        raise SizeError("dft needs at least one sample")
    if n > MAX_SIZE:
        raise SizeError(f"oracle sizes are limited to {MAX_SIZE}, got {n}")
    y = np.zeros(x.shape, dtype=np.complex128)
    j = np.arange(n)
    for k in range(n):
        angle = 2.0 * np.pi * ((k * j) % n) / n
        y[..., k] = np.sum(x * (np.cos(angle) - 1j * np.sin(angle)), axis=-1)
    return y


def is_power_of_four(n):
    n = int(n)
    return n >= 1 and (n & (n - 1)) == 0 and (n.bit_length() - 1) % 2 == 0


def fft_radix4(x):
    """Recursive radix-4 decimation-in-time FFT; length must be a power of 4."""
    x = _as_complex(x)
    n = x.shape[-1]
    if not is_power_of_four(n):
        raise SizeError(f"radix-4 FFT needs a power of 4, got {n}")
    return _dit4(x)


def _dit4(x):
    n = x.shape[-1]
    if n == 1:
        return x.copy()
    q = n // 4
    subs = [_dit4(x[..., r::4]) for r in range(4)]
    k = np.arange(q)
    tw = [np.exp(-2j * np.pi * r * k / n) for r in range(4)]
    parts = [subs[r] * tw[r] for r in range(4)]
    out = np.empty(x.shape, dtype=np.complex128)
    for m in range(4):
        acc = np.zeros(parts[0].shape, dtype=np.complex128)
        for r in range(4):
            acc = acc + parts[r] * (-1j) ** ((r * m) % 4)
        out[..., m * q:(m + 1) * q] = acc
    return out


def matvec(w, x):
    return np.asarray(w) @ np.asarray(x)


def matmul(a, b):
    return np.asarray(a) @ np.asarray(b)
