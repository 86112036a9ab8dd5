"""Smoke test for the spinheat_py extension.

Build and install first:  maturin build --release -m crates/python/Cargo.toml && pip install target/wheels/*.whl
"""

import math

import spinheat_py as sh


def main():
    chain = sh.ChainParams(3, 2.0, 1.0)
    bath = sh.BathParams(0.4, 0.8, 2.5)
    print(chain, bath)

    w = chain.omegas()
    assert abs(w[1] - 1.0) < 1e-15
    assert abs(w[0] - (1.0 + 2.0 * math.cos(math.pi / 4))) < 1e-14

    assert bath.incomplete_spectral(0.7, 0.0) == 0
    half = bath.markov_spectral(0.7).real - 0.5 * bath.truncated_spectral_density(0.7)
    assert abs(half) < 1e-10

    samples = sh.integrate(chain, bath, 2.0, sample_dt=0.5)
    assert [s.t for s in samples] == [0.0, 0.5, 1.0, 1.5, 2.0]
    assert abs(samples[0].flux) < 1e-10
    assert max(s.trace_error for s in samples) < 1e-8
    print("flux", [f"{s.flux:.4e}" for s in samples])

    j_sec = sh.secular_flux(chain, bath, [0.0, 1.0])
    lo, up = sh.flux_bounds(chain, bath, 1.0)
    assert lo * 0.95 <= abs(j_sec[1] / j_sec[0]) <= up * 1.05

    r = sh.thermal_response(chain, 0.5, 2, 1.0)
    assert abs(r + sh.thermal_response(chain, -0.5, 2, 1.0)) < 1e-12
    assert abs(sh.eigenstate_response(chain, [1, 0, 1], 1, 1.0)) <= 2.0

    lt = sh.low_temp_response(2.0, 3.0, 2, 1.5)
    ht = sh.high_temp_response(2.0, 3.0, 2.0 / 3.0, 2, 1.5)
    assert abs(lt - ht) < 1e-12

    try:
        sh.integrate(sh.ChainParams(11, 2.0, 1.0), bath, 1.0)
    except sh.CapabilityError:
        pass
    else:
        raise AssertionError("expected CapabilityError for N = 11")

    try:
        sh.BathParams(0.4, 0.8, 2.5, n_trunc=0)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for n_trunc = 0")

    print("smoke test passed")


if __name__ == "__main__":
    main()
