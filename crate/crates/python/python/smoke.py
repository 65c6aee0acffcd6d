"""Smoke test for the compiled extension module.

Build the module first, e.g. `maturin develop` in crates/python, or
`cargo build -p maxtomo-python --release --features extension-module`
and copy target/release/libmaxtomo_py.so to maxtomo.so on PYTHONPATH.
"""

import os
import tempfile

import maxtomo as mx


def main():
    g = mx.Grid.unit_cube(8)
    background = mx.Medium.homogeneous(g)
    z = mx.Impedance.assemble(background, 4.0)
    print(f"impedance: {z.dim} x {z.dim}, |Z| = {z.spectral_norm():.4e}")

    table = mx.scan(z, z, 8.0)
    assert table.failures == 0
    assert all(v == 0 for _, v, _, _ in table.samples()), "identical media must give zero"
    print(f"transparency: {len(table)} zero samples")

    bump = mx.Medium.gaussian(g, 0.1, 0.1, [0.5, 0.5, 0.5], 0.3)
    t, c = mx.reconstruct(bump, 4.0, route="linearized")
    print(f"reconstruct: {len(t)} samples, peak at {c.peak()}")

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "contrast.mxc")
        c.write(path)
        dims, _, kind, values = mx.read_volume(path)
        assert dims == c.dims and kind == "contrast" and values == c.values
    print("volume round trip: ok")

    try:
        mx.Impedance.assemble(background, 4.0, faces=["w+"])
    except mx.MaxtomoError as e:
        assert str(e).startswith("CONFIG: ")
        print(f"error tag: {e}")
    print("smoke: ok")


if __name__ == "__main__":
    main()
