use pyo3::ffi::c_str;
use pyo3::prelude::*;

fn run(code: &std::ffi::CStr) {
    pyo3::append_to_inittab!(postq);
    Python::attach(|py| {
        if let Err(e) = py.run(code, None, None) {
            e.display(py);
            panic!("python code failed");
        }
    });
}

use postq::postq;

#[test]
fn module_reproduces_the_example_values() {
    run(c_str!(
        r#"
import math
import postq
asm = postq.example_assemblage()
f = postq.example_witness()
assert postq.validate(asm)["passed"]
beta = postq.evaluate(asm, f)
assert abs(beta - postq.EXAMPLE_BETA) <= 5e-3, beta
bound = postq.aq_bound(f)["value"]
assert abs(bound + 0.5084204224) < 1e-9, bound
m = postq.membership(asm)
assert m["verdict"] == "NOT_IN" and m["certificate"]["separation"] >= 0.005
clean = postq.denoise(asm, math.cos(math.pi / 8))
back = postq.add_noise(clean, math.cos(math.pi / 8))
assert back["blocks"].keys() == asm["blocks"].keys()
v = postq.locality(clean)
assert not v["pass"] and abs(v["certificate"]["distance"] - 2.8895e-3) < 1e-6
try:
    postq.validate({"foo": 1})
    raise AssertionError("expected ValueError")
except ValueError:
    pass
"#
    ));
}
