"""Single table of numeric defaults used across the package.

Every tunable that affects reported numbers lives here so that runs are
reproducible from a config echo alone.  The CLI prints effective values and
accepts ``--tol-override KEY=VAL`` for any key below.

Key                          meaning
---------------------------  ------------------------------------------------
grid.resolution              (radial, angular) sample counts per variable
grid.radius                  default disc radius
psh.tol                      Levi minimum-eigenvalue tolerance, closed forms
psh.tol_optimizer            same, for optimizer-derived fields
psh.step_rel                 finite-difference step as a fraction of radius
psh.step_rel_optimizer       step fraction for optimizer-derived fields
psh.exclusion_steps          stencil exclusion radius near tags/boundary,
                             in multiples of the step
regsup.radius_steps          upper-semicontinuous regularization radius for
                             upper envelopes, in grid spacings (inert for the
                             finite continuous families supported here)
mollify.kernel_resolution    (radial, angular) nodes of the smoothing kernel
mollify.max_radius_rel       largest epsilon as a fraction of the min radius
optimizer.restarts           random restarts of the kernel maximizer
optimizer.max_iter           ascent iteration cap, cold start
optimizer.warm_iter          ascent iteration cap, warm start
optimizer.grad_tol           tangent-gradient stopping threshold
optimizer.field_restarts     restarts used when sweeping whole node fields
metric.singular_det_factor   det below factor*(rank*C)^rank flags a node
                             as singular
metric.cond_limit            condition number beyond which inversion errors
family.joint_psh_max_nodes   product-grid size cap for the joint-psh
                             precondition check (subsampled above it)
family.m2_check_nodes        approximate count of product-grid nodes checked
                             by the variation test when the kernel needs the
                             optimizer (m >= 2)
uniform_bound.ratio          max/median ratio accepted as "uniform in t"
extend.floor_rel             relative floor for iteration denominators
"""

DEFAULTS = {
    "grid.resolution": (64, 64),
    "grid.radius": 1.0,
    "psh.tol": 1e-6,
    "psh.tol_optimizer": 1e-3,
    "psh.step_rel": 1e-3,
    "psh.step_rel_optimizer": 1e-2,
    "psh.exclusion_steps": 2.0,
    "regsup.radius_steps": 2.0,
    "mollify.kernel_resolution": (8, 16),
    "mollify.max_radius_rel": 0.5,
    "optimizer.restarts": 32,
    "optimizer.max_iter": 400,
    "optimizer.warm_iter": 80,
    "optimizer.grad_tol": 1e-11,
    "optimizer.field_restarts": 6,
    "metric.singular_det_factor": 1e-14,
    "metric.cond_limit": 1e14,
    "family.joint_psh_max_nodes": 1_100_000,
    "family.m2_check_nodes": 600,
    "uniform_bound.ratio": 2.0,
    "extend.floor_rel": 1e-14,
}
