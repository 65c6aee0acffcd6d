use std::ffi::CString;

use pyo3::prelude::*;
use pyo3::types::PyDict;

/// Runs `code` in an embedded interpreter with the module importable as `maxtomo`.
fn run(code: &str) {
    Python::initialize();
    Python::attach(|py| {
        let m = pyo3::wrap_pymodule!(maxtomo_py::maxtomo)(py);
        let modules = py.import("sys").unwrap().getattr("modules").unwrap();
        modules.set_item("maxtomo", m).unwrap();
        let globals = PyDict::new(py);
        let src = CString::new(code).unwrap();
        if let Err(e) = py.run(&src, Some(&globals), None) {
            e.print(py);
            panic!("python code failed");
        }
    });
}

#[test]
fn grid_and_medium_round_trip() {
    run(r#"
import maxtomo as mx
g = mx.Grid([1.0, 1.0, 1.0], [4, 4, 4])
assert g.cells == [4, 4, 4] and abs(g.h_max - 0.25) < 1e-15
n = mx.Medium.homogeneous(g, 1.5 + 0.1j)
assert n.is_homogeneous and len(n.values) == g.n_edges
m = mx.Medium.from_values(g, n.values, 1.5 + 0.1j)
assert m.values == n.values
"#);
}

#[test]
fn errors_carry_the_class_tag() {
    run(r#"
import maxtomo as mx
try:
    mx.Grid([1.0, 1.0, 1.0], [0, 4, 4])
    raise SystemExit("expected failure")
except mx.MaxtomoError as e:
    assert str(e).startswith("INVALID_GRID: "), str(e)
try:
    mx.Medium.homogeneous(mx.Grid.unit_cube(4), -1.0)
    raise SystemExit("expected failure")
except mx.MaxtomoError:
    pass
"#);
}

#[test]
fn identical_media_give_a_zero_table() {
    run(r#"
import maxtomo as mx
g = mx.Grid.unit_cube(6)
n = mx.Medium.homogeneous(g)
z = mx.Impedance.assemble(n, 4.0)
assert z.dim == 2 * 6 * 5
zf = z.apply([1.0 + 0j] * z.dim)
assert len(zf) == z.dim
t = mx.scan(z, z, 8.0)
assert len(t) > 0 and t.failures == 0
assert all(v == 0 for (_, v, _, _) in t.samples())
u = mx.FourierTable.from_csv(t.to_csv())
assert u.samples() == t.samples()
c = mx.invert(t, g)
assert c.dims == [6, 6, 6] and all(v == 0 for v in c.values)
"#);
}

#[test]
fn cgo_pair_satisfies_the_dispersion_relation() {
    run(r#"
import maxtomo as mx
k = 3.0
p = mx.cgo_pair([1.0, -2.0, 0.5], 6.0, k)
dot = lambda a, b: sum(x * y for x, y in zip(a, b))
for xi in (p["xi1"], p["xi2"]):
    assert abs(dot(xi, xi) - k * k) < 1e-10
assert abs(dot(p["eta1"], p["eta2"]) - 1) < 1e-12
assert mx.g_of_s(6.0, [1.0, -2.0, 0.5], k) == p["g"]
"#);
}

#[test]
fn reconstruct_writes_a_readable_volume() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.mxc");
    run(&format!(
        r#"
import maxtomo as mx
g = mx.Grid.unit_cube(8)
n = mx.Medium.gaussian(g, 0.1, 0.1, [0.5, 0.5, 0.5], 0.3)
t, c = mx.reconstruct(n, 4.0, route="linearized")
assert len(t) > 0
c.write({path:?})
dims, spacing, kind, values = mx.read_volume({path:?})
assert dims == [8, 8, 8] and kind == "contrast" and values == c.values
"#
    ));
}
