from cowqkd import SystemParams


def make_params(**overrides) -> SystemParams:
    """SystemParams with benign defaults; override any field per test."""
    values = dict(
        L_km=50.0,
        p_d=1e-8,
        eta_d=0.8,
        e_a=0.0,
        f_ec=1.1,
        mu=0.1,
        t_B=0.5,
        variant="passive",
    )
    values.update(overrides)
    return SystemParams(**values)
