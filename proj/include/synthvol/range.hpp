#pragma once

namespace synthvol {

// Closed interval [lo, hi] of a sampled hyperparameter.
struct Range {
    double lo = 0.0;
    double hi = 0.0;
};

} // namespace synthvol
