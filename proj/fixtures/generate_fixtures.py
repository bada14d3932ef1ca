#!/usr/bin/env python3
"""Reference generator for the committed test fixtures.

Writes seeded NPW1 weight containers and golden outputs computed by an
independent numpy implementation of the mask estimator forward pass. The C++
test suite only reads the files written here; rerunning this script with the
same seeds reproduces them byte for byte.

    python3 fixtures/generate_fixtures.py [--out fixtures]

Weight generation: numpy.random.default_rng(seed); tensors are drawn in
sorted-name order, each uniform in [-0.1, 0.1) as float32 (controls.beta0 takes
the absolute value). "hparams" holds M, F, H, R, spatial layers, temporal
layers as float32.
"""

import argparse
import pathlib
import struct

import numpy as np

TOLERANCE = 1e-4


# --------------------------------------------------------------------------
# NPW1 container

def write_npw1(path, tensors):
    out = bytearray(b"NPW1")
    out += struct.pack("<II", 1, len(tensors))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        encoded = name.encode("utf-8")
        out += struct.pack("<H", len(encoded)) + encoded
        out += struct.pack("<BB", 0, arr.ndim)
        out += struct.pack("<%dI" % arr.ndim, *arr.shape)
        out += arr.tobytes()
    pathlib.Path(path).write_bytes(bytes(out))


def read_npw1(path):
    data = pathlib.Path(path).read_bytes()
    assert data[:4] == b"NPW1"
    _, count = struct.unpack_from("<II", data, 4)
    pos, tensors = 12, {}
    for _ in range(count):
        (n,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos:pos + n].decode()
        pos += n
        dtype, ndim = struct.unpack_from("<BB", data, pos)
        pos += 2
        dims = struct.unpack_from("<%dI" % ndim, data, pos)
        pos += 4 * ndim
        count_el = int(np.prod(dims)) if dims else 1
        tensors[name] = np.frombuffer(data, "<f4", count_el, pos).reshape(dims)
        pos += 4 * count_el
    return tensors


# --------------------------------------------------------------------------
# Weights

def weight_shapes(M, F, H, R, Ls, Lt):
    if H % R != 0:
        raise ValueError("hidden size %d not divisible by splits %d" % (H, R))
    C = 2 * M
    hs = H // R
    shapes = {}
    for l in range(Ls):
        cout = C + 1 if l == Ls - 1 else C
        shapes["spatial.%d.weight" % l] = (F, cout, C)
        shapes["spatial.%d.prelu" % l] = (cout,)
    shapes["encoder.weight"] = (H, F)
    shapes["encoder.bias"] = (H,)
    for l in range(Lt):
        for r in range(R):
            p = "gru.%d.split%d" % (l, r)
            shapes[p + ".w_ih"] = (3 * hs, hs)
            shapes[p + ".w_hh"] = (3 * hs, hs)
            shapes[p + ".bias"] = (3 * hs,)
    shapes["decoder.weight"] = (F, H)
    shapes["decoder.bias"] = (F,)
    for c in ("p_a", "p_b", "beta0", "alpha0_ss", "alpha0_nn"):
        shapes["controls." + c] = (F,)
    return shapes


def generate_weights(seed, M, F, H, R, Ls=4, Lt=3):
    rng = np.random.default_rng(seed)
    tensors = {"hparams": np.array([M, F, H, R, Ls, Lt], dtype=np.float32)}
    for name, shape in sorted(weight_shapes(M, F, H, R, Ls, Lt).items()):
        values = rng.uniform(-0.1, 0.1, size=shape).astype(np.float32)
        if name == "controls.beta0":
            values = np.abs(values)
        tensors[name] = values
    return tensors


# --------------------------------------------------------------------------
# Reference forward pass (float64 arithmetic on float32 weights)

def prelu(x, slope):
    return np.where(x >= 0.0, x, slope * x)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class Reference:
    def __init__(self, w):
        self.w = {k: np.asarray(v, dtype=np.float64) for k, v in w.items()}
        M, F, H, R, Ls, Lt = (int(v) for v in w["hparams"])
        self.M, self.F, self.H, self.R, self.Ls, self.Lt = M, F, H, R, Ls, Lt
        self.hs = H // R

    def spatial(self, frame):
        """frame: complex [M, F] -> (features [2M, F], temporal_in [F])."""
        x = np.empty((2 * self.M, self.F))
        x[0::2] = frame.real
        x[1::2] = frame.imag
        for l in range(self.Ls):
            W = self.w["spatial.%d.weight" % l]            # [F, out, in]
            y = np.einsum("foi,if->of", W, x)
            x = prelu(y, self.w["spatial.%d.prelu" % l][:, None])
        return x[:2 * self.M], x[2 * self.M]

    def gru_cell(self, prefix, h, x):
        hs = self.hs
        wih, whh, b = self.w[prefix + ".w_ih"], self.w[prefix + ".w_hh"], self.w[prefix + ".bias"]
        gi = wih @ x
        gh = whh @ h
        r = sigmoid(gi[:hs] + gh[:hs] + b[:hs])
        z = sigmoid(gi[hs:2 * hs] + gh[hs:2 * hs] + b[hs:2 * hs])
        n = np.tanh(gi[2 * hs:] + b[2 * hs:] + r * gh[2 * hs:])
        return (1.0 - z) * n + z * h

    def split_gru(self, layer, state, x):
        hs, R = self.hs, self.R
        new_state = np.concatenate([
            self.gru_cell("gru.%d.split%d" % (layer, r), state[r * hs:(r + 1) * hs], x[r * hs:(r + 1) * hs])
            for r in range(R)])
        # Stride-R gather: downstream block s takes features s, s+R, s+2R, ...
        out = new_state.reshape(hs, R).T.reshape(-1)
        return new_state, out

    def mask(self, states, frame):
        feats, tin = self.spatial(frame)
        a = self.w["encoder.weight"] @ tin + self.w["encoder.bias"]
        for l in range(self.Lt):
            states[l], a = self.split_gru(l, states[l], a)
        m = self.w["decoder.weight"] @ a + self.w["decoder.bias"]
        spatial_c = feats[0::2] + 1j * feats[1::2]
        return m[None, :] * spatial_c, feats, tin


# --------------------------------------------------------------------------

def golden_case(weights, seed, frames=10):
    ref = Reference(weights)
    rng = np.random.default_rng(seed + 1000)
    frames_c = (rng.standard_normal((frames, ref.M, ref.F)) + 1j * rng.standard_normal((frames, ref.M, ref.F))) * 0.5
    frames_c = frames_c.astype(np.complex64).astype(np.complex128)

    states = [np.zeros(ref.H) for _ in range(ref.Lt)]
    masks, feats, tins = [], [], []
    for t in range(frames):
        g, f, tin = ref.mask(states, frames_c[t])
        masks.append(g)
        feats.append(f)
        tins.append(tin)

    gru_in = rng.uniform(-1.0, 1.0, size=(2, ref.H)).astype(np.float32).astype(np.float64)
    state = np.zeros(ref.H)
    gru_out, gru_state = [], []
    for step in range(2):
        state, out = ref.split_gru(0, state, gru_in[step])
        gru_out.append(out)
        gru_state.append(state.copy())

    masks = np.array(masks)
    return {
        "meta.seed": np.array([seed], dtype=np.float32),
        "meta.tolerance": np.array([TOLERANCE], dtype=np.float32),
        "input.real": frames_c.real,
        "input.imag": frames_c.imag,
        "spatial.features": np.array(feats),
        "spatial.temporal_in": np.array(tins),
        "mask.real": masks.real,
        "mask.imag": masks.imag,
        "gru0.input": gru_in,
        "gru0.output": np.array(gru_out),
        "gru0.state": np.array(gru_state),
    }


CASES = [
    # name, seed, M, F, H, R
    ("small_r2", 1, 3, 17, 12, 2),
    ("small_r3", 2, 2, 9, 12, 3),
    ("full", 0, 5, 129, 96, 2),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, seed, M, F, H, R in CASES:
        weights = generate_weights(seed, M, F, H, R)
        write_npw1(out / ("weights_%s.npw1" % name), weights)
        # Golden tensors are stored as float32; the tolerance covers that rounding.
        golden = golden_case(read_npw1(out / ("weights_%s.npw1" % name)), seed)
        write_npw1(out / ("golden_%s.npw1" % name), golden)
        print("wrote", name)


if __name__ == "__main__":
    main()
