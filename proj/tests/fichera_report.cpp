// Fichera corner, m = 1: errors against the finest level through the energy identity. Report only.
#include "polygrade/study.hpp"

#include <cmath>
#include <cstdio>

using namespace polygrade;

int main() {
    try {
        for (double kappa : {0.25, 0.5}) {
            StudyConfig c;
            c.domain = "fichera3d";
            c.kappa = kappa;
            c.levels = 4;
            c.solution = "reference";
            const auto t0 = std::chrono::steady_clock::now();
            const ConvergenceReport rep = run_convergence(make_study(c));
            std::printf("fichera3d kappa=%.3g\n", kappa);
            for (const auto &r : rep.rows)
                std::printf("  level %d  dofs %8d  energy %.8e  H1 error vs finest %.4e  pair rate %.3f\n", r.level,
                            r.dofs, r.energy, r.h1, r.rate_h1);
            // energy increments d_n = a(u_{n+1}) - a(u_n) decay like dofs^(-2 rate), no reference level needed
            for (std::size_t k = 2; k + 1 < rep.rows.size(); ++k) {
                const auto &a = rep.rows[k - 1], &b = rep.rows[k], &c = rep.rows[k + 1];
                const double r = 0.5 * std::log((b.energy - a.energy) / (c.energy - b.energy)) /
                                 std::log(static_cast<double>(b.dofs) / a.dofs);
                std::printf("  rate from energy increments, levels %d-%d: %.3f\n", a.level, c.level, r);
            }
            std::printf("  fitted rate over levels %d-%d: %.4f  [%.1f s]\n", rep.fit_first, rep.fit_last, rep.fit_h1,
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        }
    } catch (const std::exception &e) {
        std::printf("fichera report aborted: %s\n", e.what());
        return 1;
    }
    return 0;
}
