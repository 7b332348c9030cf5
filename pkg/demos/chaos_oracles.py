"""Largest Lyapunov exponent on maps with known values, plus a linear control."""
from emhkit import lyapunov, synth

series = {
    "logistic r=4 (ln 2 = 0.693)": synth.gen_chaotic("logistic", 3000, seed=0),
    "Henon (0.419)": synth.gen_chaotic("henon", 3000, seed=0),
    "AR(1) phi=0.5 (negative)": synth.gen_ar1(0.5, 3000, seed=1),
}
for name, x in series.items():
    curve, info = lyapunov.rosenstein_curve(x, 1, 2)
    ros = lyapunov.rosenstein_lambda(curve, (0, 5), info).lambda_max
    jac = lyapunov.jacobian_lambda(x, 1, 3, 2, n_boot=200)
    print(f"{name}: Rosenstein {ros:.3f}, Jacobian {jac.lambda_max:.3f} "
          f"(p={jac.p_value:.3g}, verdict {jac.verdict})")
