#pragma once

#include <cstdint>

#include "hdrvqa/common.hpp"

namespace hdrvqa {

// Linear warmup from 0 to base_lr over warmup_epochs, then cosine decay to 0
// over the remaining steps, no restarts.
double lr_at(int64_t step, double base_lr, int warmup_epochs, int epochs,
             int64_t steps_per_epoch);

}  // namespace hdrvqa
