#!/usr/bin/env python3
# -*- coding: utf-8 -*-


from pyrankinfer import bootstrap, configure_logging, inference, mle, uq
from pyrankinfer.simulate import SimulationConfig, simulate


configure_logging()
config = SimulationConfig(
    n=60, m_way=3, edge_prob=0.05, trials=80, seed=1,
    score_spec={"kind": "grid", "start": 4.0, "stop": 2.0}
)
instance = simulate(config)
print(instance.dataset)
estimate = mle.fit_mle(instance.dataset)
context = uq.build_context(instance.dataset, estimate.theta_hat)
report = inference.build_rank_report(
    estimate, context, [9], bootstrap.BootstrapConfig(seed=1)
)
for interval in report.intervals:
    print(interval)
