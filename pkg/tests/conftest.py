import numpy as np
import pytest

from robustridge.features import FeatureMap, Frame
from robustridge.labels import gaussian_label

ACCEPTANCE_RESULTS = []


def central_difference(f, x, h=1e-6):
    return (f(x + h) - f(x - h)) / (2.0 * h)


def naive_same_correlation(x, kernel, bias):
    """Quadruple-loop zero-padded 'same' cross-correlation, (H, W, Cin) -> (H, W, Cout)."""
    H, W, Cin = x.shape
    k = kernel.shape[0]
    p = k // 2
    out = np.zeros((H, W, kernel.shape[3]))
    for o in range(kernel.shape[3]):
        for r in range(H):
            for c in range(W):
                acc = bias[o]
                for i in range(k):
                    for j in range(k):
                        rr, cc = r + i - p, c + j - p
                        if 0 <= rr < H and 0 <= cc < W:
                            for ch in range(Cin):
                                acc += x[rr, cc, ch] * kernel[i, j, ch, o]
                out[r, c, o] = acc
    return out


def naive_valid_correlation(search, template):
    Hs, Ws, C = search.shape
    Ht, Wt, _ = template.shape
    out = np.zeros((Hs - Ht + 1, Ws - Wt + 1))
    for r in range(out.shape[0]):
        for c in range(out.shape[1]):
            s = 0.0
            for i in range(Ht):
                for j in range(Wt):
                    for ch in range(C):
                        s += search[r + i, c + j, ch] * template[i, j, ch]
            out[r, c] = s
    return out


def planted_extractor(planted=(5,), channels=8, noise=1.0, seed=0, stride=4, sigma_frac=0.1):
    """Feature extractor whose ``planted`` channels hold a centred Gaussian blob.

    The blob matches the label a tracker builds for a target filling the
    template patch; the remaining channels are seeded noise.
    """

    def extract(patch: Frame) -> FeatureMap:
        n = patch.height
        m = len(range(0, n, stride))
        rng = np.random.default_rng(seed)
        data = noise * rng.standard_normal((m, m, channels))
        centre = (n - 1) / 2 / stride
        blob = gaussian_label(m, m, (centre, centre), sigma_frac * n / stride).values
        for ch in planted:
            data[:, :, ch] = blob + 0.05 * rng.standard_normal((m, m))
        return FeatureMap(data, stride=stride)

    return extract


@pytest.fixture
def acceptance_report():
    def record(number, name, passed, detail=""):
        ACCEPTANCE_RESULTS.append((number, name, passed, detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS, key=lambda r: r[0]):
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] {number}. {name}: {detail}")
