// Acceptance suite: one pass/fail line per criterion, exit status 0 when
// every criterion holds. Thresholds are fixed here, not tunable from the
// command line; --grid-scale only refines the numerical grids.

#pragma once

namespace echomem {

struct AcceptanceOptions {
    double grid_scale = 1.0;
    bool quiet = false; // suppress per-criterion detail, keep PASS/FAIL lines
};

// Returns 0 on success, 4 when any criterion fails.
int run_acceptance(const AcceptanceOptions& options);

} // namespace echomem
