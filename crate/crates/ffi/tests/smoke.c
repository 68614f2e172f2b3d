#include <math.h>
#include <stdio.h>
#include "zeno_gate.h"

static int check(ZgStatus s, ZgStatus want, const char *what) {
    if (s != want) {
        fprintf(stderr, "%s: status %d (wanted %d): %s\n", what, (int)s, (int)want, zg_last_error());
        return 1;
    }
    return 0;
}

int main(void) {
    const char *text = "q_c_s = 1e7\nupsilon_mhz = 100\ndt = 1e-10\nbin_s = 1e-9\nbin_p = 1e-8\n";
    ZgConfig *cfg = NULL;
    ZgTrajectory *traj = NULL;
    ZgGateMetrics m;
    double norm = 0.0;
    int bad = 0;
    bad |= check(zg_config_from_toml(text, &cfg), ZG_STATUS_OK, "config");
    bad |= check(zg_run(cfg, &traj), ZG_STATUS_OK, "run");
    bad |= check(zg_gate_metrics(traj, &m), ZG_STATUS_OK, "metrics");
    bad |= check(zg_trajectory_final_norm(traj, &norm), ZG_STATUS_OK, "norm");
    if (!bad && (fabs(norm - 1.0) > 1e-9 || m.rank < 1 || !(m.fidelity > 0.0))) {
        fprintf(stderr, "unexpected values: norm %g rank %zu fidelity %g\n", norm, (size_t)m.rank, m.fidelity);
        bad = 1;
    }
    bad |= check(zg_config_from_toml("colour = 1", &cfg), ZG_STATUS_INVALID_CONFIG, "bad key");
    zg_trajectory_free(traj);
    zg_config_free(cfg);
    printf("version %s fidelity %.6f first-mode %.6f\n", zg_version(), m.fidelity, m.first_mode_probability);
    return bad;
}
